#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "loewner/errors.hpp"
#include "loewner/evolution.hpp"
#include "loewner/generator.hpp"
#include "loewner/numerics.hpp"

namespace loewner {

// ---------------------------------------------------------------------------
// Branching mechanisms: named generator families from the theory of
// continuous-state branching processes, and the transform-level view of the
// processes themselves.  The Laplace exponents v_{s,t} of an inhomogeneous
// process form a reverse evolution family,
//   E[exp(-zeta X_t) | X_s = x] = exp(-x v_{s,t}(zeta)).
// ---------------------------------------------------------------------------

struct MechanismSpec {
    enum class Kind { feller, linear, killing, stable, compound_poisson };
    Kind kind = Kind::feller;
    double b = 0;      // feller
    double a = 0;      // linear
    double q = 0;      // killing
    double alpha = 0;  // stable, in (0,1)
    double scale = 0;  // stable, > 0
    double rate = 0;   // compound_poisson, > 0
    std::vector<Atom> jump_atoms;  // compound_poisson jump distribution

    static MechanismSpec feller(double b) {
        MechanismSpec m;
        m.kind = Kind::feller;
        m.b = b;
        return m;
    }
    static MechanismSpec linear(double a) {
        MechanismSpec m;
        m.kind = Kind::linear;
        m.a = a;
        return m;
    }
    static MechanismSpec killing(double q) {
        MechanismSpec m;
        m.kind = Kind::killing;
        m.q = q;
        return m;
    }
    static MechanismSpec stable(double alpha, double scale) {
        MechanismSpec m;
        m.kind = Kind::stable;
        m.alpha = alpha;
        m.scale = scale;
        return m;
    }
    static MechanismSpec compound_poisson(double rate, std::vector<Atom> atoms) {
        MechanismSpec m;
        m.kind = Kind::compound_poisson;
        m.rate = rate;
        m.jump_atoms = std::move(atoms);
        return m;
    }
};

/// Expands a named mechanism into Silverstein form.
///
/// stable(alpha, scale) realizes phi(z) = scale * z^{1+alpha} through the
/// density scale/Gamma(-1-alpha) * x^{-2-alpha} on (0, inf); the Gamma
/// constant is positive for alpha in (0,1) and satisfies
///   integral (e^{-zx} - 1 + zx) x^{-2-alpha} dx = Gamma(-1-alpha) z^{1+alpha}.
/// compound_poisson(rate, nu) realizes phi(z) = rate * integral (e^{-zx}-1) nu(dx).
inline GeneratorRepr expand(const MechanismSpec& m) {
    switch (m.kind) {
        case MechanismSpec::Kind::feller:
            if (!(m.b > 0)) throw domain_error("feller mechanism: b must be > 0");
            return make_generator(0.0, 0.0, m.b);
        case MechanismSpec::Kind::linear:
            return make_generator(0.0, m.a, 0.0);
        case MechanismSpec::Kind::killing:
            if (!(m.q > 0)) throw domain_error("killing mechanism: q must be > 0");
            return make_generator(m.q, 0.0, 0.0);
        case MechanismSpec::Kind::stable: {
            if (!(m.alpha > 0.0 && m.alpha < 1.0))
                throw domain_error("stable mechanism: alpha must lie in (0,1)");
            if (!(m.scale > 0)) throw domain_error("stable mechanism: scale must be > 0");
            double c = m.scale / std::tgamma(-1.0 - m.alpha);
            DensityPanel panel;
            panel.kind = PanelKind::power_law;
            panel.p = -2.0 - m.alpha;
            panel.c = c;
            panel.a = 0.0;
            panel.b = kInf;
            JumpMeasure pi{{}, {panel}};
            // in Silverstein form the linear coefficient offsets the tail
            // first moment so that phi'(0) = 0
            double a = c / m.alpha;
            return make_generator(0.0, a, 0.0, std::move(pi));
        }
        case MechanismSpec::Kind::compound_poisson: {
            if (!(m.rate > 0)) throw domain_error("compound_poisson mechanism: rate must be > 0");
            if (m.jump_atoms.empty())
                throw domain_error("compound_poisson mechanism: needs at least one jump atom");
            JumpMeasure pi;
            for (Atom at : m.jump_atoms) {
                at.w *= m.rate;
                pi.atoms.push_back(at);
            }
            pi = normalized(std::move(pi));
            double a = -moment(pi, 1, MomentRegion::near_zero);
            return make_generator(0.0, a, 0.0, std::move(pi));
        }
    }
    throw domain_error("expand: unknown mechanism kind");
}

// ---------------------------------------------------------------------------
// Transform-level process quantities.
// ---------------------------------------------------------------------------

/// v_{s,t}(zeta), the Laplace exponent: the reverse evolution applied to
/// zeta.  Purely imaginary abscissae are handled by a small real offset
/// with one Richardson step, since the flow lives on the open half-plane.
inline Cplx laplace_exponent(const HerglotzField& F, double s, double t, Cplx zeta,
                             const OdeConfig& cfg = {}, const QuadratureConfig& qcfg = {}) {
    if (!(zeta.real() >= 0.0)) throw domain_error("laplace_exponent: Re zeta must be >= 0");
    if (zeta.real() > 0.0) return reverse_evolve(F, s, t, zeta, cfg, qcfg);
    const double eps = 1e-8;
    Cplx v1 = reverse_evolve(F, s, t, zeta + eps, cfg, qcfg);
    Cplx v2 = reverse_evolve(F, s, t, zeta + 2.0 * eps, cfg, qcfg);
    return 2.0 * v1 - v2;
}

/// E[exp(-zeta X_t) | X_s = x] = exp(-x v_{s,t}(zeta)); modulus <= 1 for
/// real zeta >= 0.
inline Cplx transition_laplace(const HerglotzField& F, double s, double t, double x, Cplx zeta,
                               const OdeConfig& cfg = {}, const QuadratureConfig& qcfg = {}) {
    if (!(x >= 0)) throw domain_error("transition_laplace: x must be >= 0");
    return std::exp(-x * laplace_exponent(F, s, t, zeta, cfg, qcfg));
}

/// E[X_t | X_s = x] = x exp(-integral_s^t c(u) du) = x v'_{s,t}(0).
/// Requires every contributing slice to fix 0 with finite phi'(0)
/// (the process has finite means exactly then).
inline double conditional_mean(const HerglotzField& F, double s, double t, double x) {
    if (!(x >= 0)) throw domain_error("conditional_mean: x must be >= 0");
    if (x == 0.0) return 0.0;
    return x * brfp0_derivative(F, s, t);
}

/// Var[X_t | X_s = x] = -x v''_{s,t}(0), with v the reverse (Laplace
/// exponent) family; +infinity when a contributing slice has infinite
/// phi''(0) (heavy-tailed jumps).
inline double conditional_variance(const HerglotzField& F, double s, double t, double x) {
    if (!(x >= 0)) throw domain_error("conditional_variance: x must be >= 0");
    if (x == 0.0) return 0.0;
    double vpp = brfp0_reverse_second_derivative(F, s, t);
    if (std::isinf(vpp)) return kInf;
    return -x * vpp;
}

}  // namespace loewner
