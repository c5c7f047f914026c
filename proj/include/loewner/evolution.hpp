#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "loewner/errors.hpp"
#include "loewner/flow.hpp"
#include "loewner/generator.hpp"
#include "loewner/numerics.hpp"

namespace loewner {

// ---------------------------------------------------------------------------
// Piecewise-constant-in-time Herglotz fields: slice k is the generator
// acting on [t_k, t_{k+1}).  The forward family w_{s,t}, the reverse family
// v_{s,t}, and the inverse maps w_{s,t}^{-1} all reduce to compositions of
// autonomous flows over the slice pieces.
// ---------------------------------------------------------------------------

struct HerglotzField {
    std::vector<double> breakpoints;    // 0 = t_0 < t_1 < ... < t_m
    std::vector<GeneratorRepr> slices;  // m generators

    double span() const { return breakpoints.back(); }
    int num_slices() const { return static_cast<int>(slices.size()); }
};

inline void validate(const HerglotzField& F) {
    if (F.slices.empty()) throw domain_error("HerglotzField: need at least one slice");
    if (F.breakpoints.size() != F.slices.size() + 1)
        throw domain_error("HerglotzField: breakpoints must outnumber slices by one");
    if (F.breakpoints.front() != 0.0) throw domain_error("HerglotzField: t_0 must be 0");
    for (std::size_t i = 0; i + 1 < F.breakpoints.size(); ++i)
        if (!(F.breakpoints[i] < F.breakpoints[i + 1]))
            throw domain_error("HerglotzField: breakpoints must be strictly increasing");
    for (const GeneratorRepr& g : F.slices) validate(g);
}

inline HerglotzField make_field(std::vector<double> breakpoints,
                                std::vector<GeneratorRepr> slices) {
    HerglotzField F{std::move(breakpoints), std::move(slices)};
    validate(F);
    return F;
}

inline HerglotzField single_slice_field(GeneratorRepr g, double horizon = 1.0) {
    return make_field({0.0, horizon}, {std::move(g)});
}

namespace detail {

struct SlicePiece {
    int slice;
    double t0, t1;
    double len() const { return t1 - t0; }
};

inline std::vector<SlicePiece> slice_pieces(const HerglotzField& F, double s, double t) {
    if (!(0.0 <= s && s <= t && t <= F.span() + 1e-12))
        throw domain_error("field solve: need 0 <= s <= t <= span");
    std::vector<SlicePiece> out;
    for (int k = 0; k < F.num_slices(); ++k) {
        double lo = std::max(s, F.breakpoints[k]);
        double hi = std::min(t, F.breakpoints[k + 1]);
        if (lo < hi) out.push_back({k, lo, hi});
    }
    return out;
}

}  // namespace detail

/// Forward evolution w_{s,t}(z): later slices applied outermost.
inline Cplx evolve(const HerglotzField& F, double s, double t, Cplx z, const OdeConfig& cfg = {},
                   const QuadratureConfig& qcfg = {}) {
    if (!(z.real() > 0.0)) throw domain_error("evolve: Re z must be > 0");
    Cplx w = z;
    for (const auto& p : detail::slice_pieces(F, s, t))
        w = flow(F.slices[p.slice], p.len(), w, cfg, qcfg).w;
    return w;
}

/// Reverse evolution v_{s,t}(z): earlier slices applied outermost.
inline Cplx reverse_evolve(const HerglotzField& F, double s, double t, Cplx z,
                           const OdeConfig& cfg = {}, const QuadratureConfig& qcfg = {}) {
    if (!(z.real() > 0.0)) throw domain_error("reverse_evolve: Re z must be > 0");
    auto pieces = detail::slice_pieces(F, s, t);
    Cplx v = z;
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it)
        v = flow(F.slices[it->slice], it->len(), v, cfg, qcfg).w;
    return v;
}

/// Result of the inverse solve: either the preimage, or the time at which
/// the trajectory left the half-plane (z was outside w_{s,t}'s range).
struct InverseResult {
    enum class Kind { ok, domain_exit };
    Kind kind = Kind::ok;
    Cplx w{};
    double t_exit = 0;

    bool exited() const { return kind == Kind::domain_exit; }
};

/// Recovers w_{s,t}^{-1}(z) by running the driving ODE backward in time
/// from (t, z) to s.  Preimages of points outside w_{s,t}'s range leave the
/// half-plane on the way; the crossing time is reported as a domain exit.
/// The right-hand side is clamped to the closed half-plane so that trial
/// stages may probe slightly past the boundary while the exit is located.
inline InverseResult inverse_evolve(const HerglotzField& F, double s, double t, Cplx z,
                                    const OdeConfig& cfg = {},
                                    const QuadratureConfig& qcfg = {}) {
    if (!(z.real() > 0.0)) throw domain_error("inverse_evolve: Re z must be > 0");
    InverseResult res;
    res.w = z;
    auto pieces = detail::slice_pieces(F, s, t);
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
        const GeneratorRepr& g = F.slices[it->slice];
        auto rhs = [&](double, Cplx w) {
            if (w.real() < 0.0) w.real(0.0);
            return -eval_gen(g, w, qcfg);
        };
        OdeConfig c = cfg;
        c.boundary_margin = 0.0;
        OdeResult r = adaptive_ode_step(rhs, it->t1, it->t0, res.w, c);
        if (r.exited()) {
            res.kind = InverseResult::Kind::domain_exit;
            res.t_exit = r.t_exit;
            res.w = r.y;
            return res;
        }
        res.w = r.y;
    }
    return res;
}

/// |w_{s,u} - w_{t,u} o w_{s,t}| at z.
inline double ef2_residual(const HerglotzField& F, double s, double t, double u, Cplx z,
                           const OdeConfig& cfg = {}, const QuadratureConfig& qcfg = {}) {
    if (!(s <= t && t <= u)) throw domain_error("ef2_residual: need s <= t <= u");
    Cplx lhs = evolve(F, s, u, z, cfg, qcfg);
    Cplx rhs = evolve(F, t, u, evolve(F, s, t, z, cfg, qcfg), cfg, qcfg);
    return std::abs(lhs - rhs);
}

/// |v_{s,u} - v_{s,t} o v_{t,u}| at z.
inline double ref2_residual(const HerglotzField& F, double s, double t, double u, Cplx z,
                            const OdeConfig& cfg = {}, const QuadratureConfig& qcfg = {}) {
    if (!(s <= t && t <= u)) throw domain_error("ref2_residual: need s <= t <= u");
    Cplx lhs = reverse_evolve(F, s, u, z, cfg, qcfg);
    Cplx rhs = reverse_evolve(F, s, t, reverse_evolve(F, t, u, z, cfg, qcfg), cfg, qcfg);
    return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Boundary derivatives at the fixed point 0.  Every slice touching [s, t]
// must fix 0 with a finite derivative coefficient c = phi'(0); then
//   w'_{s,t}(0)  = exp(-integral_s^t c(u) du)
//   w''_{s,t}(0) = -w'_{s,t}(0) integral_s^t phi''(0,u) w'_{s,u}(0) du,
// and for piecewise-constant fields both integrals are elementary.
// ---------------------------------------------------------------------------

/// Per-slice boundary coefficients: c_k = phi'(0), s2_k = phi''(0).
struct BoundaryCoefficientPath {
    std::vector<double> c;   // finite for every slice
    std::vector<double> s2;  // >= 0, +inf allowed
};

namespace detail {

struct SliceCoeffs {
    double c;
    double s2;
};

inline SliceCoeffs slice_boundary_coeffs(const GeneratorRepr& g) {
    if (g.q != 0.0)
        throw domain_error("boundary derivative: slice has q > 0, no fixed point at 0");
    double tail1 = moment(g.pi, 1, MomentRegion::tail);
    if (std::isinf(tail1))
        throw domain_error("boundary derivative: slice has infinite phi'(0)");
    return {g.a - tail1, 2.0 * g.b + moment(g.pi, 2, MomentRegion::all)};
}

}  // namespace detail

inline BoundaryCoefficientPath boundary_coefficients(const HerglotzField& F) {
    BoundaryCoefficientPath path;
    for (const GeneratorRepr& g : F.slices) {
        detail::SliceCoeffs sc = detail::slice_boundary_coeffs(g);
        path.c.push_back(sc.c);
        path.s2.push_back(sc.s2);
    }
    return path;
}

namespace detail {

// integral_0^len e^{-c u} du, stable near c = 0
inline double exp_mean(double c, double len) {
    if (c == 0.0) return len;
    return -std::expm1(-c * len) / c;
}

struct PieceDeriv {
    double A;  // per-piece first derivative e^{-c len}
    double B;  // per-piece second derivative, -inf when phi''(0) is infinite
};

inline PieceDeriv piece_derivative(double c, double s2, double len) {
    double A = std::exp(-c * len);
    if (std::isinf(s2)) return {A, -kInf};
    return {A, -A * s2 * exp_mean(c, len)};
}

}  // namespace detail

/// w'_{s,t}(0) = exp(-sum_k c_k |slice_k intersect [s,t]|) > 0.  Only the
/// slices intersecting [s, t] need a fixed point at 0.
inline double brfp0_derivative(const HerglotzField& F, double s, double t) {
    NeumaierSum expo;
    for (const auto& p : detail::slice_pieces(F, s, t))
        expo.add(detail::slice_boundary_coeffs(F.slices[p.slice]).c * p.len());
    return std::exp(-expo.value());
}

/// w''_{s,t}(0) <= 0, with -infinity when a contributing slice has infinite
/// phi''(0).  Inner integrals are piecewise exponentials in closed form.
inline double brfp0_second_derivative(const HerglotzField& F, double s, double t) {
    auto pieces = detail::slice_pieces(F, s, t);
    double W = 1.0;       // running w'_{s, xi}(0) at the start of each piece
    NeumaierSum integral;  // integral of phi''(0,xi) w'_{s,xi}(0)
    bool infinite = false;
    for (const auto& p : pieces) {
        auto [c, s2] = detail::slice_boundary_coeffs(F.slices[p.slice]);
        if (std::isinf(s2) && p.len() > 0) infinite = true;
        if (!infinite) integral.add(s2 * W * detail::exp_mean(c, p.len()));
        W *= std::exp(-c * p.len());
    }
    if (infinite) return -kInf;
    return -W * integral.value();
}

/// Same object for the reverse family v_{s,t} = v-slice compositions in the
/// opposite order; first derivatives agree with the forward family, second
/// derivatives differ once the field has more than one slice.
inline double brfp0_reverse_second_derivative(const HerglotzField& F, double s, double t) {
    auto pieces = detail::slice_pieces(F, s, t);
    // compose innermost-first: v_{s,t} = f_{k0} o f_{k0+1} o ... o f_{k1}
    double A = 1.0, B = 0.0;
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
        auto [c, s2] = detail::slice_boundary_coeffs(F.slices[it->slice]);
        auto pd = detail::piece_derivative(c, s2, it->len());
        // wrap with the earlier piece as the new outer map
        B = pd.B * A * A + pd.A * B;
        A = pd.A * A;
    }
    return B;
}

struct ChainRuleResult {
    double residual1 = 0;
    double residual2 = 0;
    bool pass = true;
};

/// Consistency of the boundary derivatives with the evolution-family
/// algebra:  w'_{s,t}(0) = w'_{0,t}(0)/w'_{0,s}(0)  and the corresponding
/// second-order relation.
inline ChainRuleResult chain_rule_check(const HerglotzField& F, double s, double t,
                                        double tol = 1e-10) {
    ChainRuleResult out;
    double d_st = brfp0_derivative(F, s, t);
    double d_0s = brfp0_derivative(F, 0.0, s);
    double d_0t = brfp0_derivative(F, 0.0, t);
    out.residual1 = std::abs(d_st - d_0t / d_0s);

    double dd_st = brfp0_second_derivative(F, s, t);
    double dd_0s = brfp0_second_derivative(F, 0.0, s);
    double dd_0t = brfp0_second_derivative(F, 0.0, t);
    double predicted = (dd_0t - dd_0s * d_0t / d_0s) / (d_0s * d_0s);
    out.residual2 = std::abs(dd_st - predicted);

    out.pass = out.residual1 <= tol && out.residual2 <= tol;
    return out;
}

/// Radial finite-difference estimates of w'_{s,t}(0) and w''_{s,t}(0) from
/// the abscissae h, 2h, 4h, Richardson-extrapolated.  The independent
/// cross-check for the representation-based formulas above.
inline std::pair<double, double> finite_difference_brfp0(const HerglotzField& F, double s,
                                                         double t, double h,
                                                         const OdeConfig& cfg = {},
                                                         const QuadratureConfig& qcfg = {}) {
    if (!(h > 0)) throw domain_error("finite_difference_brfp0: h must be > 0");
    double w1 = evolve(F, s, t, Cplx(h, 0.0), cfg, qcfg).real();
    double w2 = evolve(F, s, t, Cplx(2.0 * h, 0.0), cfg, qcfg).real();
    double w4 = evolve(F, s, t, Cplx(4.0 * h, 0.0), cfg, qcfg).real();

    double r1 = w1 / h, r2 = w2 / (2.0 * h), r4 = w4 / (4.0 * h);
    double e1 = 2.0 * r1 - r2, e2 = 2.0 * r2 - r4;
    double d1 = (4.0 * e1 - e2) / 3.0;

    double s1 = 2.0 * (w1 - d1 * h) / (h * h);
    double s2 = 2.0 * (w2 - d1 * 2.0 * h) / (4.0 * h * h);
    double d2 = 2.0 * s1 - s2;
    return {d1, d2};
}

}  // namespace loewner
