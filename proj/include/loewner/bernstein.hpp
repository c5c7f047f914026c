#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "loewner/errors.hpp"
#include "loewner/measure.hpp"
#include "loewner/numerics.hpp"

namespace loewner {

// ---------------------------------------------------------------------------
// Bernstein functions in Levy-triple form,
//   f(z) = alpha + beta z + integral (1 - e^{-lambda z}) rho(dlambda),
// holomorphic on the right half-plane with Re f >= 0.
// ---------------------------------------------------------------------------

struct BernsteinRepr {
    double alpha = 0;  // constant (killing) term, >= 0
    double beta = 0;   // drift, >= 0
    JumpMeasure rho;   // bernstein-class measure
};

/// Structural invariants: nonnegative coefficients, bernstein-class measure,
/// and f not identically zero.
inline void validate(const BernsteinRepr& f) {
    if (!(f.alpha >= 0)) throw domain_error("BernsteinRepr: alpha must be >= 0");
    if (!(f.beta >= 0)) throw domain_error("BernsteinRepr: beta must be >= 0");
    ClassCheck cc = check_class(f.rho, IntegrabilityClass::bernstein);
    if (!cc.holds) throw domain_error("BernsteinRepr: measure not bernstein-class: " + cc.witness);
    if (f.alpha == 0 && f.beta == 0 && f.rho.empty())
        throw domain_error("BernsteinRepr: the zero function is excluded");
}

inline BernsteinRepr make_bernstein(double alpha, double beta, JumpMeasure rho = {}) {
    BernsteinRepr f{alpha, beta, normalized(std::move(rho))};
    validate(f);
    return f;
}

inline BernsteinRepr bernstein_identity() { return make_bernstein(0.0, 1.0); }

/// f(z) for Re z >= 0 (continuous extension to the imaginary axis).
inline Cplx eval(const BernsteinRepr& f, Cplx z, const QuadratureConfig& cfg = {}) {
    if (!(z.real() >= 0.0)) throw domain_error("eval: Re z must be >= 0");
    IntegralResult ir = integrate_kernel(f.rho, KernelId::k1, z, cfg);
    if (!ir.ok())
        throw domain_error("eval: measure is not bernstein-class (" + ir.witness + ")");
    return f.alpha + f.beta * z + ir.value;
}

/// n-th derivative, n >= 1, Re z > 0.  f'(z) = beta + integral lambda e^{-lz},
/// and for n >= 2, f^(n)(z) = (-1)^{n+1} integral lambda^n e^{-lz} rho(dl).
inline Cplx deriv(const BernsteinRepr& f, Cplx z, int n = 1, const QuadratureConfig& cfg = {}) {
    if (!(z.real() > 0.0)) throw domain_error("deriv: Re z must be > 0");
    if (n < 1) throw domain_error("deriv: n must be >= 1");
    IntegralResult ir = integrate_exp_power(f.rho, n, z, cfg);
    if (!ir.ok()) throw domain_error("deriv: divergent integral (" + ir.witness + ")");
    if (n == 1) return f.beta + ir.value;
    return (n % 2 == 0 ? -1.0 : 1.0) * ir.value;
}

/// Boundary data at 0 and infinity, read off the representation:
/// f(0) = alpha, f'(0) = beta + first moment, f''(0) = -(second moment),
/// f'(infinity) = beta.  Divergent moments give +/- infinity, never large
/// finite floats.
struct BoundaryData {
    double f0 = 0;
    double fprime0 = 0;    // in (0, +inf]
    double fsecond0 = 0;   // in [-inf, 0]
    double fprime_inf = 0;
};

inline BoundaryData boundary_data(const BernsteinRepr& f) {
    BoundaryData bd;
    bd.f0 = f.alpha;
    bd.fprime0 = f.beta + moment(f.rho, 1, MomentRegion::all);
    bd.fsecond0 = -moment(f.rho, 2, MomentRegion::all);
    bd.fprime_inf = f.beta;
    return bd;
}

/// Julia's inequality at infinity: Re f(z)/Re z >= f'(infinity) = beta on all
/// of the half-plane.  Returns the smallest sampled ratio and whether it
/// clears beta (up to 1e-9 slack).
inline std::pair<double, bool> julia_check(const BernsteinRepr& f, const std::vector<Cplx>& samples,
                                           const QuadratureConfig& cfg = {}) {
    double min_ratio = kInf;
    for (Cplx z : samples) {
        if (!(z.real() > 0.0)) throw domain_error("julia_check: samples must have Re > 0");
        min_ratio = std::min(min_ratio, eval(f, z, cfg).real() / z.real());
    }
    return {min_ratio, min_ratio >= f.beta - 1e-9};
}

/// Slack in the rigidity inequality
///   |f(z) - z| <= f(0) + |(f'(0)-1) z| + |f''(0) z^2| / 2,
/// which holds for every Bernstein function with finite f'(0), f''(0).
/// The returned gap is the right side minus the left side; it is >= 0 up
/// to roundoff for representable inputs.
inline double rigidity_gap(const BernsteinRepr& f, Cplx z, const QuadratureConfig& cfg = {}) {
    BoundaryData bd = boundary_data(f);
    if (std::isinf(bd.fprime0) || std::isinf(bd.fsecond0))
        throw domain_error("rigidity_gap: needs finite f'(0) and f''(0)");
    if (!(z.real() >= 0.0)) throw domain_error("rigidity_gap: Re z must be >= 0");
    double rhs = bd.f0 + std::abs((bd.fprime0 - 1.0) * z) + 0.5 * std::abs(bd.fsecond0 * z * z);
    return rhs - std::abs(eval(f, z, cfg) - z);
}

/// (outer o inner)(z).  Composition stays in the class; it is used through
/// values only, no closed-form triple for the composite exists in this model.
inline Cplx compose_eval(const BernsteinRepr& outer, const BernsteinRepr& inner, Cplx z,
                         const QuadratureConfig& cfg = {}) {
    Cplx w = eval(inner, z, cfg);
    if (w.real() < 0.0) w.real(0.0);  // clip roundoff at the boundary
    return eval(outer, w, cfg);
}

// ---------------------------------------------------------------------------
// Black-box membership test: g is Bernstein iff g >= 0 and g' is completely
// monotone.  The derivative is estimated by central differences and complete
// monotonicity by alternating forward differences.
// ---------------------------------------------------------------------------

struct MembershipReport {
    bool pass = true;
    /// most negative normalized check value (negative = violation);
    /// comparisons are against -1e-6 after scaling by |g(x0)| + 1
    double worst_violation = kInf;
};

inline MembershipReport is_bernstein_numeric(const std::function<double(double)>& g,
                                             const std::vector<std::pair<double, double>>& grid,
                                             int depth = 6) {
    constexpr double tol = 1e-6;
    MembershipReport rep;
    for (auto [x0, h] : grid) {
        if (!(x0 > 0) || !(h > 0)) throw domain_error("is_bernstein_numeric: bad grid entry");
        double scale = std::abs(g(x0)) + 1.0;
        rep.worst_violation = std::min(rep.worst_violation, g(x0) / scale);

        // central-difference step: large enough that solver-level noise in g
        // does not swamp the difference stack
        double d = 0.05 * std::min({h, x0, 1.0});
        auto gprime = [&](double x) { return (g(x + d) - g(x - d)) / (2.0 * d); };
        for (double v : alternating_differences(gprime, x0, h, depth))
            rep.worst_violation = std::min(rep.worst_violation, v / scale);
    }
    rep.pass = rep.worst_violation >= -tol;
    return rep;
}

/// Default grid for the membership tests: a few base points with moderate
/// difference steps spanning [0.1, 10].
inline std::vector<std::pair<double, double>> default_membership_grid() {
    return {{0.1, 0.4}, {0.5, 0.5}, {1.0, 0.5}, {2.5, 0.75}, {5.0, 1.0}};
}

}  // namespace loewner
