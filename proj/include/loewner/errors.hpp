#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace loewner {

/// Input violates a mathematical precondition (point outside the domain,
/// negative scale, missing boundary fixed point, ...).
class domain_error : public std::runtime_error {
public:
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or schema-violating external input (JSON, CLI parameters).
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative routine ran out of its step/iteration budget.
/// Carries how far the computation got.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, double t_reached,
                      std::complex<double> last_state)
        : std::runtime_error(what), t_reached(t_reached), last_state(last_state) {}

    double t_reached;
    std::complex<double> last_state;
};

}  // namespace loewner
