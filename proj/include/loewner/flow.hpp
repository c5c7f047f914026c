#pragma once

#include <cmath>
#include <cstdlib>

#include "loewner/bernstein.hpp"
#include "loewner/errors.hpp"
#include "loewner/generator.hpp"
#include "loewner/numerics.hpp"

namespace loewner {

// ---------------------------------------------------------------------------
// The one-parameter semigroup v_t generated by phi: w(t) = v_t(z) solves
//   dw/dt + phi(w) = 0,  w(0) = z,
// and stays in the right half-plane for all t >= 0.
// ---------------------------------------------------------------------------

struct FlowResult {
    Cplx w{};
    std::int64_t steps = 0;
    std::int64_t rejected_steps = 0;
    bool used_closed_form = false;
};

namespace detail {

// Closed forms for the elementary generator families.
//   pure linear    phi = a z       : v_t(z) = e^{-a t} z
//   pure quadratic phi = b z^2     : v_t(z) = z / (1 + b t z)
//   pure constant  phi = -q        : v_t(z) = z + q t
//   Riccati        phi = a z + b z^2 : v_t(z) = e^{-a t} z / (1 + (b/a)(1 - e^{-a t}) z)
inline Cplx riccati_flow(double a, double b, double t, Cplx z) {
    if (a == 0.0) return z / (1.0 + b * t * z);
    double decay = std::exp(-a * t);
    // (1 - e^{-at})/a via expm1: stays accurate as a -> 0
    return decay * z / (1.0 + b * (-std::expm1(-a * t) / a) * z);
}

inline bool has_closed_form(const GeneratorRepr& g) {
    if (!g.pi.empty()) return false;
    // (a), (b), (a and b), (q alone), or the zero generator
    return g.q == 0.0 || (g.a == 0.0 && g.b == 0.0);
}

inline Cplx closed_form_flow(const GeneratorRepr& g, double t, Cplx z) {
    if (g.q != 0.0) return z + g.q * t;
    return riccati_flow(g.a, g.b, t, z);
}

}  // namespace detail

/// Semigroup flow with closed-form dispatch for the elementary families,
/// and the generic adaptive ODE solve otherwise.  The trajectory cannot
/// legitimately leave the half-plane, so a domain exit here is an error.
inline FlowResult flow(const GeneratorRepr& g, double t, Cplx z, const OdeConfig& cfg = {},
                       const QuadratureConfig& qcfg = {}) {
    if (!(t >= 0)) throw domain_error("flow: t must be >= 0");
    if (!(z.real() > 0.0)) throw domain_error("flow: Re z must be > 0");
    if (t == 0.0 || g.is_zero()) return {z, 0, 0, true};

    if (detail::has_closed_form(g)) {
        Cplx w = detail::closed_form_flow(g, t, z);
        return {w, 0, 0, true};
    }

    auto rhs = [&](double, Cplx w) { return -eval_gen(g, w, qcfg); };
    OdeConfig c = cfg;
    c.boundary_margin = 0.0;
    OdeResult r = adaptive_ode_step(rhs, 0.0, t, z, c);
    if (r.exited())
        throw domain_error("flow: trajectory left the half-plane (generator data invalid?)");
    return {r.y, r.stats.steps, r.stats.rejected_steps, false};
}

/// Forces the generic ODE path; used to cross-check the closed forms.
inline FlowResult flow_ode(const GeneratorRepr& g, double t, Cplx z, const OdeConfig& cfg = {},
                           const QuadratureConfig& qcfg = {}) {
    if (!(t >= 0)) throw domain_error("flow_ode: t must be >= 0");
    if (!(z.real() > 0.0)) throw domain_error("flow_ode: Re z must be > 0");
    auto rhs = [&](double, Cplx w) { return -eval_gen(g, w, qcfg); };
    OdeConfig c = cfg;
    c.boundary_margin = 0.0;
    OdeResult r = adaptive_ode_step(rhs, 0.0, t, z, c);
    if (r.exited()) throw domain_error("flow_ode: trajectory left the half-plane");
    return {r.y, r.stats.steps, r.stats.rejected_steps, false};
}

/// Euler iteration for the semigroup of phi = -f:
///   v_k = v_{k-1} + (t/n) f(v_{k-1}),  v_0 = z.
/// Each iterate stays in the half-plane because Re f >= 0; the scheme
/// converges to the flow as n grows (first order).
inline Cplx euler_flow(const BernsteinRepr& f, double t, int n, Cplx z,
                       const QuadratureConfig& cfg = {}) {
    if (!(t >= 0)) throw domain_error("euler_flow: t must be >= 0");
    if (n < 1) throw domain_error("euler_flow: n must be >= 1");
    if (!(z.real() > 0.0)) throw domain_error("euler_flow: Re z must be > 0");
    const double eps = t / n;
    Cplx v = z;
    for (int k = 0; k < n; ++k) v += eps * eval(f, v, cfg);
    return v;
}

/// Trotter product (v1_{t/n} o v2_{t/n})^{o n}(z); converges to the flow of
/// cone_add(g1, g2) as n grows.
inline Cplx trotter_flow(const GeneratorRepr& g1, const GeneratorRepr& g2, double t, int n,
                         Cplx z, const OdeConfig& cfg = {}, const QuadratureConfig& qcfg = {}) {
    if (!(t >= 0)) throw domain_error("trotter_flow: t must be >= 0");
    if (n < 1) throw domain_error("trotter_flow: n must be >= 1");
    const double tau = t / n;
    Cplx w = z;
    for (int k = 0; k < n; ++k) {
        w = flow(g2, tau, w, cfg, qcfg).w;
        w = flow(g1, tau, w, cfg, qcfg).w;
    }
    return w;
}

/// Koenigs function h(z) = integral_1^z dzeta / f(zeta) along the straight
/// segment; satisfies Abel's equation h(v_t(z)) = h(z) + t for the semigroup
/// of phi = -f.  Fails if f (numerically) vanishes on the path.
inline Cplx koenigs(const BernsteinRepr& f, Cplx z, const QuadratureConfig& cfg = {}) {
    if (!(z.real() > 0.0)) throw domain_error("koenigs: Re z must be > 0");
    const Cplx z0(1.0, 0.0);
    const Cplx dir = z - z0;
    if (std::abs(dir) == 0.0) return 0.0;

    const detail::GlRule& rule = detail::gl_rule(cfg.panel_order);
    auto integrate = [&](int pieces) {
        NeumaierSumC acc;
        for (int s = 0; s < pieces; ++s) {
            double t0 = double(s) / pieces, t1 = double(s + 1) / pieces;
            double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
            for (int q = 0; q < cfg.panel_order; ++q) {
                double tt = mid + half * rule.nodes[q];
                Cplx zeta = z0 + tt * dir;
                Cplx fv = eval(f, zeta, cfg);
                if (std::abs(fv) < 1e-13 * (1.0 + std::abs(zeta)))
                    throw domain_error("koenigs: integrand singular, f vanishes on the path");
                acc.add(half * rule.weights[q] * dir / fv);
            }
        }
        return acc.value();
    };

    Cplx coarse = integrate(2), fine = integrate(4);
    int pieces = 4;
    while (std::abs(fine - coarse) > 1e-13 * (std::abs(fine) + 1.0) &&
           2 * pieces <= cfg.max_panels) {
        coarse = fine;
        pieces *= 2;
        fine = integrate(pieces);
    }
    return fine;
}

/// |h(v_t(z)) - h(z) - t| for the semigroup of phi = -f.
inline double abel_residual(const BernsteinRepr& f, double t, Cplx z, const OdeConfig& cfg = {},
                            const QuadratureConfig& qcfg = {}) {
    if (!(t >= 0)) throw domain_error("abel_residual: t must be >= 0");
    Cplx w = flow(from_bernstein(f), t, z, cfg, qcfg).w;
    return std::abs(koenigs(f, w, qcfg) - koenigs(f, z, qcfg) - t);
}

/// |v_{s+t}(z) - v_s(v_t(z))|.
inline double semigroup_residual(const GeneratorRepr& g, double s, double t, Cplx z,
                                 const OdeConfig& cfg = {}, const QuadratureConfig& qcfg = {}) {
    if (!(s >= 0) || !(t >= 0)) throw domain_error("semigroup_residual: s, t must be >= 0");
    Cplx lhs = flow(g, s + t, z, cfg, qcfg).w;
    Cplx rhs = flow(g, s, flow(g, t, z, cfg, qcfg).w, cfg, qcfg).w;
    return std::abs(lhs - rhs);
}

}  // namespace loewner
