#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "loewner/errors.hpp"

namespace loewner {

using Cplx = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_finite(Cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Tolerances and limits for the adaptive ODE integrator.
struct OdeConfig {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = kInf;
    std::int64_t max_steps = 1'000'000;
    /// Minimum allowed Re(w) along a trajectory before the integrator
    /// declares that the solution left the half-plane.
    double boundary_margin = 0.0;

    void validate() const {
        if (!(rtol >= 1e-14)) throw domain_error("OdeConfig: rtol below 1e-14");
        if (!(atol >= 1e-16)) throw domain_error("OdeConfig: atol below 1e-16");
        if (!(max_step > 0)) throw domain_error("OdeConfig: max_step must be positive");
        if (max_steps <= 0) throw domain_error("OdeConfig: max_steps must be positive");
        if (!(boundary_margin >= 0)) throw domain_error("OdeConfig: negative boundary_margin");
    }
};

/// Tolerances and limits for measure quadrature and path integrals.
struct QuadratureConfig {
    int panel_order = 16;       // Gauss-Legendre nodes per panel, even, >= 4
    double tail_rel_tol = 1e-12;
    int max_panels = 512;

    void validate() const {
        if (panel_order < 4 || panel_order % 2 != 0)
            throw domain_error("QuadratureConfig: panel_order must be even and >= 4");
        if (!(tail_rel_tol > 0)) throw domain_error("QuadratureConfig: tail_rel_tol must be positive");
        if (max_panels <= 0) throw domain_error("QuadratureConfig: max_panels must be positive");
    }
};

// ---------------------------------------------------------------------------
// Compensated (Neumaier) summation.  Alternating difference stacks and panel
// sums lose bits to cancellation; this keeps the accumulation error at one
// rounding of the true sum.
// ---------------------------------------------------------------------------
class NeumaierSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class NeumaierSumC {
public:
    void add(Cplx z) {
        re_.add(z.real());
        im_.add(z.imag());
    }
    Cplx value() const { return {re_.value(), im_.value()}; }

private:
    NeumaierSum re_, im_;
};

// ---------------------------------------------------------------------------
// Conformal transport between the unit disk and the right half-plane,
// and the hyperbolic geometry of the half-plane.
// ---------------------------------------------------------------------------

/// Cayley map D -> H, z |-> (1+z)/(1-z).  Defined on the closed disk minus
/// the singular point 1; boundary points map to the imaginary axis.
inline Cplx cayley(Cplx z) {
    if (std::abs(z) > 1.0 || z == Cplx(1.0, 0.0))
        throw domain_error("cayley: need |z| <= 1 and z != 1");
    return (1.0 + z) / (1.0 - z);
}

/// Inverse Cayley map H -> D, w |-> (w-1)/(w+1), closed half-plane accepted.
inline Cplx cayley_inv(Cplx w) {
    if (!(w.real() >= 0.0)) throw domain_error("cayley_inv: Re w must be >= 0");
    return (w - 1.0) / (w + 1.0);
}

/// Poincare distance of the right half-plane (metric density |dz|/Re z).
/// For z, w on the positive real axis this is |log(w/z)|.
inline double hyperbolic_distance(Cplx z, Cplx w) {
    if (!(z.real() > 0.0) || !(w.real() > 0.0))
        throw domain_error("hyperbolic_distance: both points must have Re > 0");
    double q = std::norm(z - w) / (2.0 * z.real() * w.real());
    // acosh(1+q) computed via log1p to keep accuracy for nearby points
    return std::log1p(q + std::sqrt(q * (q + 2.0)));
}

// ---------------------------------------------------------------------------
// Adaptive embedded Runge-Kutta integration of a single complex ODE
// dy/dt = rhs(t, y).  Dormand-Prince 4(5) pair with PI step-size control;
// the complex state is treated as two real components for error control.
// ---------------------------------------------------------------------------

struct StepStats {
    std::int64_t steps = 0;
    std::int64_t rejected_steps = 0;
    std::int64_t rhs_evals = 0;
};

struct OdeResult {
    enum class Kind { ok, domain_exit };
    Kind kind = Kind::ok;
    Cplx y{};          // final state (ok), or last in-domain state (domain_exit)
    double t_exit = 0; // crossing time, only meaningful for domain_exit
    StepStats stats{};

    bool exited() const { return kind == Kind::domain_exit; }
};

using OdeRhs = std::function<Cplx(double, Cplx)>;

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double kDpC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double kDpA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// 5th-order weights (solution) minus 4th-order weights (error estimate).
inline constexpr double kDpB[7] = {35.0 / 384,      0.0,        500.0 / 1113, 125.0 / 192,
                                   -2187.0 / 6784,  11.0 / 84,  0.0};
inline constexpr double kDpE[7] = {71.0 / 57600,    0.0,        -71.0 / 16695, 71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

struct DpStep {
    Cplx y_new;
    double err;  // scaled error norm; accept when <= 1
};

template <typename Rhs>
DpStep dp_step(const Rhs& rhs, double t, Cplx y, Cplx f0, double h, double rtol, double atol,
               StepStats& stats) {
    Cplx k[7];
    k[0] = f0;
    for (int s = 1; s < 7; ++s) {
        Cplx acc = 0.0;
        for (int j = 0; j < s; ++j) acc += kDpA[s][j] * k[j];
        k[s] = rhs(t + kDpC[s] * h, y + h * acc);
        ++stats.rhs_evals;
    }
    Cplx ynew = y;
    Cplx errc = 0.0;
    for (int s = 0; s < 7; ++s) {
        ynew += h * kDpB[s] * k[s];
        errc += h * kDpE[s] * k[s];
    }
    double sc_re = atol + rtol * std::max(std::abs(y.real()), std::abs(ynew.real()));
    double sc_im = atol + rtol * std::max(std::abs(y.imag()), std::abs(ynew.imag()));
    double er = errc.real() / sc_re, ei = errc.imag() / sc_im;
    return {ynew, std::sqrt(0.5 * (er * er + ei * ei))};
}

}  // namespace detail

namespace detail {

// One adaptive integration run.  margin = -inf disables exit detection
// (used while refining a crossing bracket).
inline OdeResult ode_run(const OdeRhs& rhs, double t0, double t1, Cplx y0, const OdeConfig& cfg,
                         double margin) {
    OdeResult res;
    res.y = y0;
    if (t0 == t1) return res;

    const double dir = (t1 > t0) ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    // local tolerances sit well below the requested ones so that the
    // accumulated global error stays within ~10x rtol even when many steps
    // contribute (fast decay, long horizons)
    const double rtol = 0.05 * cfg.rtol;
    const double atol = 0.05 * cfg.atol;
    double t = t0;
    Cplx y = y0;

    if (y.real() < margin) {
        res.kind = OdeResult::Kind::domain_exit;
        res.t_exit = t0;
        return res;
    }

    Cplx f0 = rhs(t, y);
    ++res.stats.rhs_evals;

    // initial step from the magnitude of the first derivative
    double sc = atol + rtol * std::abs(y);
    double d1 = std::abs(f0) / sc;
    double h = std::min({span, cfg.max_step, d1 > 0 ? 0.01 / d1 : span});
    if (h <= 0 || !std::isfinite(h)) h = span * 1e-3;

    double errold = 1e-4;
    bool rejected = false;

    // refine a boundary crossing inside [ta, tb]: Re y(ta) >= margin,
    // Re y(tb) < margin.  Re-integrates subintervals; bisection to 1e-10 in t.
    auto refine_exit = [&](double ta, Cplx ya, double tb) {
        while (std::abs(tb - ta) > 1e-10) {
            double tm = 0.5 * (ta + tb);
            OdeResult mid = ode_run(rhs, ta, tm, ya, cfg, -kInf);
            res.stats.rhs_evals += mid.stats.rhs_evals;
            if (mid.y.real() >= margin) {
                ta = tm;
                ya = mid.y;
            } else {
                tb = tm;
            }
        }
        res.kind = OdeResult::Kind::domain_exit;
        res.t_exit = 0.5 * (ta + tb);
        res.y = ya;
    };

    while (true) {
        if (res.stats.steps + res.stats.rejected_steps >= cfg.max_steps)
            throw convergence_error("adaptive_ode_step: max_steps exceeded", t, y);

        bool last = false;
        if (std::abs(t1 - t) <= h) {
            h = std::abs(t1 - t);
            last = true;
        }

        detail::DpStep st;
        bool rhs_failed = false;
        try {
            st = detail::dp_step(rhs, t, y, f0, dir * h, rtol, atol, res.stats);
        } catch (const std::exception&) {
            rhs_failed = true;
        }

        if (rhs_failed || !is_finite(st.y_new) || !std::isfinite(st.err)) {
            ++res.stats.rejected_steps;
            rejected = true;
            h *= 0.25;
            if (h < 1e-14 * std::max(1.0, std::abs(t)))
                throw convergence_error("adaptive_ode_step: step size underflow", t, y);
            continue;
        }

        if (st.err <= 1.0) {
            double t_new = last ? t1 : t + dir * h;
            if (st.y_new.real() < margin) {
                refine_exit(t, y, t_new);
                return res;
            }
            ++res.stats.steps;
            t = t_new;
            y = st.y_new;
            f0 = rhs(t, y);  // FSAL-style restart value
            ++res.stats.rhs_evals;
            if (last) break;

            double fac = 0.9 * std::pow(std::max(st.err, 1e-16), -0.17) * std::pow(errold, 0.04);
            fac = std::clamp(fac, 0.2, 10.0);
            if (rejected) fac = std::min(fac, 1.0);
            rejected = false;
            errold = std::max(st.err, 1e-4);
            h = std::min({h * fac, cfg.max_step, span});
        } else {
            ++res.stats.rejected_steps;
            rejected = true;
            double fac = std::clamp(0.9 * std::pow(st.err, -0.2), 0.1, 1.0);
            h *= fac;
            if (h < 1e-14 * std::max(1.0, std::abs(t)))
                throw convergence_error("adaptive_ode_step: step size underflow", t, y);
        }
    }

    res.y = y;
    return res;
}

}  // namespace detail

/// Integrates dy/dt = rhs(t, y) from t0 to t1 (either direction).
///
/// Local error per step is kept at or below rtol*|y| + atol componentwise.
/// When Re y falls below cfg.boundary_margin the integration stops and the
/// crossing time is located by bisection to 1e-10; the result then has
/// kind == domain_exit.  Exhausting cfg.max_steps throws convergence_error
/// carrying the last state reached.  Exceptions thrown by rhs during a trial
/// step cause the step to be rejected and retried with a smaller h.
inline OdeResult adaptive_ode_step(const OdeRhs& rhs, double t0, double t1, Cplx y0,
                                   const OdeConfig& cfg = {}) {
    cfg.validate();
    return detail::ode_run(rhs, t0, t1, y0, cfg, cfg.boundary_margin);
}

// ---------------------------------------------------------------------------
// Alternating forward differences: the discrete surrogate for complete
// monotonicity.  For g completely monotone, (-1)^k Delta_h^k g(x0) >= 0.
// ---------------------------------------------------------------------------

/// Returns [(-1)^k Delta_h^k g(x0)] for k = 0..depth, where Delta_h is the
/// forward difference with step h.  Sums are compensated: depth-K stacks
/// cancel ~K*log2(1/h) bits otherwise.  Evaluation failures are rethrown
/// with the offending abscissa.
template <typename Fn>
std::vector<double> alternating_differences(const Fn& g, double x0, double h, int depth) {
    if (!(x0 > 0)) throw domain_error("alternating_differences: x0 must be > 0");
    if (!(h > 0)) throw domain_error("alternating_differences: h must be > 0");
    if (depth < 1) throw domain_error("alternating_differences: depth must be >= 1");

    std::vector<double> gv(static_cast<std::size_t>(depth) + 1);
    for (int j = 0; j <= depth; ++j) {
        double x = x0 + j * h;
        try {
            gv[j] = g(x);
        } catch (const std::exception& e) {
            throw domain_error("alternating_differences: evaluation failed at x = " +
                               std::to_string(x) + ": " + e.what());
        }
        if (!std::isfinite(gv[j]))
            throw domain_error("alternating_differences: non-finite value at x = " +
                               std::to_string(x));
    }

    // (-1)^k Delta_h^k g(x0) = sum_j (-1)^j C(k,j) g(x0 + j h)
    std::vector<double> out(static_cast<std::size_t>(depth) + 1);
    for (int k = 0; k <= depth; ++k) {
        NeumaierSum s;
        double binom = 1.0;
        for (int j = 0; j <= k; ++j) {
            s.add((j % 2 == 0 ? binom : -binom) * gv[j]);
            binom = binom * (k - j) / (j + 1.0);
        }
        out[k] = s.value();
    }
    return out;
}

}  // namespace loewner
