#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "loewner/bernstein.hpp"
#include "loewner/errors.hpp"
#include "loewner/measure.hpp"
#include "loewner/numerics.hpp"

namespace loewner {

// ---------------------------------------------------------------------------
// Infinitesimal generators of one-parameter semigroups of Bernstein
// functions, in Silverstein form
//   phi(z) = -q + a z + b z^2
//            + integral (e^{-zx} - 1 + zx 1_{(0,1)}(x)) pi(dx).
// The derived measure mu with mu({0}) = 2b, mu(dx) = x^2 pi(dx) on (0, inf)
// is the Laplace representation of phi''.
// ---------------------------------------------------------------------------

struct GeneratorRepr {
    double q = 0;  // killing, >= 0
    double a = 0;  // linear coefficient, any sign
    double b = 0;  // quadratic coefficient, >= 0
    JumpMeasure pi;  // generator-class measure

    bool is_zero() const { return q == 0 && a == 0 && b == 0 && pi.empty(); }
};

inline void validate(const GeneratorRepr& g) {
    if (!(g.q >= 0)) throw domain_error("GeneratorRepr: q must be >= 0");
    if (!(g.b >= 0)) throw domain_error("GeneratorRepr: b must be >= 0");
    ClassCheck cc = check_class(g.pi, IntegrabilityClass::generator);
    if (!cc.holds) throw domain_error("GeneratorRepr: measure not generator-class: " + cc.witness);
}

inline GeneratorRepr make_generator(double q, double a, double b, JumpMeasure pi = {}) {
    GeneratorRepr g{q, a, b, normalized(std::move(pi))};
    validate(g);
    return g;
}

/// phi(z) for Re z > 0 (evaluation extends continuously to Re z = 0).
inline Cplx eval_gen(const GeneratorRepr& g, Cplx z, const QuadratureConfig& cfg = {}) {
    if (!(z.real() >= 0.0)) throw domain_error("eval_gen: Re z must be >= 0");
    IntegralResult ir = integrate_kernel(g.pi, KernelId::k4, z, cfg);
    if (!ir.ok()) throw domain_error("eval_gen: divergent integral (" + ir.witness + ")");
    return -g.q + g.a * z + g.b * z * z + ir.value;
}

/// phi := -f is a generator for every Bernstein f.  Rearranging the Levy
/// triple into Silverstein form: q = alpha, b = 0, pi = rho, and
/// a = -beta - integral_{(0,1)} x rho(dx).
inline GeneratorRepr from_bernstein(const BernsteinRepr& f) {
    double near0 = moment(f.rho, 1, MomentRegion::near_zero);
    GeneratorRepr g{f.alpha, -f.beta - near0, 0.0, f.rho};
    return g;
}

// ---------------------------------------------------------------------------
// Alternative representations tied to boundary regular fixed points.
// ---------------------------------------------------------------------------

/// phi(z) = c z + b z^2 + integral (e^{-zx} - 1 + zx) pi(dx); exists exactly
/// when the semigroup fixes 0 with finite derivative, and then c = phi'(0).
struct LeGallRepr {
    double c = 0;
    double b = 0;
    JumpMeasure pi;  // brfp0-class measure
};

/// phi(z) = -q + c z - integral (1 - e^{-zx}) pi(dx); exists exactly when
/// the semigroup fixes infinity, and then c = phi'(infinity).
struct SubordinatorGenRepr {
    double q = 0;
    double c = 0;
    JumpMeasure pi;  // bernstein-class measure
};

inline LeGallRepr to_legall(const GeneratorRepr& g) {
    if (g.q != 0.0)
        throw domain_error("to_legall: no fixed point at 0 (q = " + std::to_string(g.q) + " > 0)");
    double tail1 = moment(g.pi, 1, MomentRegion::tail);
    if (std::isinf(tail1))
        throw domain_error(
            "to_legall: first tail moment of pi diverges, measure is not brfp0-class");
    // b and pi are shared between the two representations
    return {g.a - tail1, g.b, g.pi};
}

inline GeneratorRepr legall_to_silverstein(const LeGallRepr& l) {
    double tail1 = moment(l.pi, 1, MomentRegion::tail);
    return {0.0, l.c + tail1, l.b, l.pi};
}

inline Cplx eval_legall(const LeGallRepr& l, Cplx z, const QuadratureConfig& cfg = {}) {
    IntegralResult ir = integrate_kernel(l.pi, KernelId::k5, z, cfg);
    if (!ir.ok()) throw domain_error("eval_legall: divergent integral (" + ir.witness + ")");
    return l.c * z + l.b * z * z + ir.value;
}

inline SubordinatorGenRepr to_subordinator_form(const GeneratorRepr& g) {
    if (g.b != 0.0)
        throw domain_error("to_subordinator_form: b > 0 forces phi'(infinity) = infinity");
    double near1 = moment(g.pi, 1, MomentRegion::near_zero);
    if (std::isinf(near1))
        throw domain_error("to_subordinator_form: near-zero first moment of pi diverges, "
                           "no fixed point at infinity");
    return {g.q, g.a + near1, g.pi};
}

inline GeneratorRepr subordinator_to_silverstein(const SubordinatorGenRepr& s) {
    double near1 = moment(s.pi, 1, MomentRegion::near_zero);
    return {s.q, s.c - near1, 0.0, s.pi};
}

inline Cplx eval_subordinator(const SubordinatorGenRepr& s, Cplx z,
                              const QuadratureConfig& cfg = {}) {
    IntegralResult ir = integrate_kernel(s.pi, KernelId::k1, z, cfg);
    if (!ir.ok()) throw domain_error("eval_subordinator: divergent integral (" + ir.witness + ")");
    return -s.q + s.c * z - ir.value;
}

// ---------------------------------------------------------------------------
// Cone operations: generators form a closed convex cone.
// ---------------------------------------------------------------------------

inline GeneratorRepr cone_add(const GeneratorRepr& g1, const GeneratorRepr& g2) {
    return {g1.q + g2.q, g1.a + g2.a, g1.b + g2.b, measure_add(g1.pi, g2.pi)};
}

inline GeneratorRepr cone_scale(const GeneratorRepr& g, double c) {
    if (!(c >= 0)) throw domain_error("cone_scale: scale must be >= 0");
    return {c * g.q, c * g.a, c * g.b, measure_add(g.pi, JumpMeasure{}, c, 0.0)};
}

// ---------------------------------------------------------------------------
// Boundary classification: the values phi(0), phi'(0), phi''(0),
// phi'(infinity), phi''(infinity), fixed-point structure, and the
// Denjoy-Wolff point.  Limits are read off the representation moments,
// with +/-infinity as first-class outcomes.
// ---------------------------------------------------------------------------

struct DwPoint {
    enum class Kind { zero, infinity, interior, undetermined };
    Kind kind = Kind::undetermined;
    double location = 0;      // interior only
    bool double_root = false; // interior only: phi touches 0 without crossing

    bool operator==(const DwPoint& o) const {
        return kind == o.kind && (kind != Kind::interior || location == o.location);
    }
};

struct GeneratorClassification {
    double phi0 = 0;            // = -q, <= 0
    double phi_prime0 = 0;      // a - tail first moment; -inf possible
    double phi_second0 = 0;     // 2b + second moment;    +inf possible
    double phi_prime_inf = 0;   // +inf when b > 0 or near-zero moment diverges
    double phi_second_inf = 0;  // = 2b exactly
    bool has_brfp_0 = false;    // q = 0 and phi'(0) finite
    bool has_brfp_inf = false;  // phi'(infinity) finite
    DwPoint dw_point;
};

namespace detail {

// Bracketed bisection for the single up-crossing of the convex real
// restriction of phi.
inline DwPoint locate_interior_root(const GeneratorRepr& g, const QuadratureConfig& cfg) {
    auto phi = [&](double x) { return eval_gen(g, Cplx(x, 0.0), cfg).real(); };
    double lo = 0.0, hi = 0.0;
    double prev_x = 1e-8, prev_f = phi(prev_x);
    for (double x = 1e-7; x <= 1e10; x *= 10.0) {
        double fx = phi(x);
        if (prev_f < 0.0 && fx >= 0.0) {
            lo = prev_x;
            hi = x;
            break;
        }
        prev_x = x;
        prev_f = fx;
    }
    if (hi == 0.0) return {};  // no sign change found: undetermined
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (phi(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    DwPoint dw;
    dw.kind = DwPoint::Kind::interior;
    dw.location = 0.5 * (lo + hi);
    return dw;
}

}  // namespace detail

inline GeneratorClassification classify(const GeneratorRepr& g,
                                        const QuadratureConfig& cfg = {}) {
    GeneratorClassification cl;
    cl.phi0 = -g.q;

    double tail1 = moment(g.pi, 1, MomentRegion::tail);
    cl.phi_prime0 = std::isinf(tail1) ? -kInf : g.a - tail1;

    double m2 = moment(g.pi, 2, MomentRegion::all);
    cl.phi_second0 = 2.0 * g.b + m2;  // +inf propagates

    if (g.b > 0.0) {
        cl.phi_prime_inf = kInf;
    } else {
        double near1 = moment(g.pi, 1, MomentRegion::near_zero);
        cl.phi_prime_inf = std::isinf(near1) ? kInf : g.a + near1;
    }
    cl.phi_second_inf = 2.0 * g.b;

    cl.has_brfp_0 = (g.q == 0.0) && std::isfinite(cl.phi_prime0);
    cl.has_brfp_inf = std::isfinite(cl.phi_prime_inf);

    if (g.is_zero()) {
        cl.dw_point.kind = DwPoint::Kind::undetermined;  // identity flow, every point fixed
        return cl;
    }
    if (cl.has_brfp_0 && cl.phi_prime0 >= 0.0)
        cl.dw_point.kind = DwPoint::Kind::zero;
    else if (cl.has_brfp_inf && cl.phi_prime_inf <= 0.0)
        cl.dw_point.kind = DwPoint::Kind::infinity;
    else
        cl.dw_point = detail::locate_interior_root(g, cfg);
    return cl;
}

// ---------------------------------------------------------------------------
// Black-box membership test for generators: phi real on (0,inf),
// phi(0+) <= 0, and phi'' completely monotone.
// ---------------------------------------------------------------------------

struct GeneratorCheckReport {
    bool pass = true;
    double worst_imag = 0;          // largest |Im phi| over the grid
    double origin_limit = -kInf;    // convex lower bound for phi(0+)
    double worst_violation = kInf;  // most negative normalized difference entry
    std::string failure;            // category of the first failed condition
};

inline GeneratorCheckReport check_generator_numeric(
    const std::function<Cplx(double)>& phi, const std::vector<std::pair<double, double>>& grid,
    int depth = 6) {
    constexpr double tol = 1e-6;
    GeneratorCheckReport rep;

    // (i) real on the positive half-axis
    for (auto [x0, h] : grid) {
        for (int j = 0; j <= depth; ++j)
            rep.worst_imag = std::max(rep.worst_imag, std::abs(phi(x0 + j * h).imag()));
    }
    if (rep.worst_imag > tol) {
        rep.pass = false;
        rep.failure = "real_on_axis";
        return rep;
    }
    auto phir = [&](double x) { return phi(x).real(); };

    // (ii) phi(0+) <= 0, probed at x = 1e-6 with a convex extrapolation
    // toward the origin (2 phi(x) - phi(2x) never exceeds the limit)
    {
        double x = 1e-6;
        double v = phir(x), v2 = phir(2.0 * x);
        rep.origin_limit = std::max(v, 2.0 * v - v2);
        double scale = std::abs(v) + 1.0;
        if (rep.origin_limit > tol * scale) {
            rep.pass = false;
            rep.failure = "origin_limit";
            return rep;
        }
    }

    // (iii) complete monotonicity of phi'' via alternating differences of a
    // second-central-difference estimate
    for (auto [x0, h] : grid) {
        if (!(x0 > 0) || !(h > 0)) throw domain_error("check_generator_numeric: bad grid entry");
        double scale = std::abs(phir(x0)) + 1.0;
        double d = 0.01 * std::max({x0, h, 1.0});
        auto second = [&](double x) {
            return (phir(x + d) - 2.0 * phir(x) + phir(x - d)) / (d * d);
        };
        for (double v : alternating_differences(second, x0, h, depth))
            rep.worst_violation = std::min(rep.worst_violation, v / scale);
    }
    if (rep.worst_violation < -tol) {
        rep.pass = false;
        rep.failure = "complete_monotonicity";
    }
    return rep;
}

inline GeneratorCheckReport check_generator_numeric(
    const GeneratorRepr& g, const std::vector<std::pair<double, double>>& grid,
    int depth = 6, const QuadratureConfig& cfg = {}) {
    return check_generator_numeric(
        [&](double x) { return eval_gen(g, Cplx(x, 0.0), cfg); }, grid, depth);
}

// ---------------------------------------------------------------------------
// Berkson-Porta factorization on the half-plane: phi(z) = (z - tau)(z + conj
// tau) P(z) for a finite Denjoy-Wolff point tau, phi = -P for tau = infinity,
// with Re P >= 0.
// ---------------------------------------------------------------------------

struct BerksonPortaResult {
    std::vector<Cplx> values;
    double min_re = kInf;
};

inline BerksonPortaResult berkson_porta_p(const GeneratorRepr& g, const DwPoint& tau,
                                          const std::vector<Cplx>& samples,
                                          const QuadratureConfig& cfg = {}) {
    BerksonPortaResult out;
    out.values.reserve(samples.size());
    for (Cplx z : samples) {
        if (!(z.real() > 0.0)) throw domain_error("berkson_porta_p: samples must have Re > 0");
        Cplx p;
        switch (tau.kind) {
            case DwPoint::Kind::zero:
                p = eval_gen(g, z, cfg) / (z * z);
                break;
            case DwPoint::Kind::infinity:
                p = -eval_gen(g, z, cfg);
                break;
            case DwPoint::Kind::interior: {
                Cplx t(tau.location, 0.0);
                if (std::abs(z - t) < 1e-13)
                    throw domain_error("berkson_porta_p: sample coincides with tau");
                p = eval_gen(g, z, cfg) / ((z - t) * (z + t));
                break;
            }
            case DwPoint::Kind::undetermined:
                throw domain_error("berkson_porta_p: tau must be a concrete fixed point");
        }
        out.values.push_back(p);
        out.min_re = std::min(out.min_re, p.real());
    }
    return out;
}

}  // namespace loewner
