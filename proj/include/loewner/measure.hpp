#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "loewner/errors.hpp"
#include "loewner/numerics.hpp"

namespace loewner {

// ---------------------------------------------------------------------------
// Jump measures on (0, infinity): finitely many atoms plus density panels.
// ---------------------------------------------------------------------------

struct Atom {
    double x = 0;  // location, > 0
    double w = 0;  // weight, >= 0
};

enum class PanelKind { power_law, exponential, tabulated };

/// One absolutely continuous piece of a measure.
///   power_law:    density c * lambda^p       on [a, b]
///   exponential:  density c * exp(-r lambda) on [a, b]
///   tabulated:    piecewise-linear through (nodes, values); support is
///                 [nodes.front(), nodes.back()]
/// a = 0 and b = inf denote open ends; b = inf is allowed only where the
/// analytic tail is integrable (power_law needs p < -1).
struct DensityPanel {
    PanelKind kind = PanelKind::power_law;
    double p = 0;
    double c = 0;
    double r = 0;
    double a = 0;
    double b = kInf;
    std::vector<double> nodes;
    std::vector<double> values;

    double lo() const { return kind == PanelKind::tabulated ? nodes.front() : a; }
    double hi() const { return kind == PanelKind::tabulated ? nodes.back() : b; }
};

struct JumpMeasure {
    std::vector<Atom> atoms;
    std::vector<DensityPanel> panels;

    bool empty() const { return atoms.empty() && panels.empty(); }
};

inline void validate_panel(const DensityPanel& p) {
    switch (p.kind) {
        case PanelKind::power_law:
            if (!(p.a >= 0)) throw domain_error("panel: support start must be >= 0");
            if (!(p.b > p.a)) throw domain_error("panel: support end must exceed start");
            if (!(p.c >= 0)) throw domain_error("panel: negative density scale");
            if (std::isinf(p.b) && !(p.p < -1.0))
                throw domain_error("power_law panel on an unbounded support needs p < -1");
            break;
        case PanelKind::exponential:
            if (!(p.a >= 0)) throw domain_error("panel: support start must be >= 0");
            if (!(p.b > p.a)) throw domain_error("panel: support end must exceed start");
            if (!(p.c >= 0)) throw domain_error("panel: negative density scale");
            if (!(p.r > 0)) throw domain_error("exponential panel: rate must be > 0");
            break;
        case PanelKind::tabulated: {
            if (p.nodes.size() < 2 || p.nodes.size() != p.values.size())
                throw domain_error("tabulated panel: need matching nodes/values, >= 2 points");
            if (!(p.nodes.front() > 0)) throw domain_error("tabulated panel: support must start > 0");
            for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i)
                if (!(p.nodes[i] < p.nodes[i + 1]))
                    throw domain_error("tabulated panel: nodes must be strictly increasing");
            for (double v : p.values)
                if (!(v >= 0)) throw domain_error("tabulated panel: negative density value");
            break;
        }
    }
}

/// Sorts atoms by location, merges duplicates, drops zero weights, and
/// validates all structural invariants.
inline JumpMeasure normalized(JumpMeasure m) {
    for (const Atom& at : m.atoms) {
        if (!(at.x > 0)) throw domain_error("atom location must be > 0");
        if (!(at.w >= 0)) throw domain_error("atom weight must be >= 0");
    }
    std::sort(m.atoms.begin(), m.atoms.end(),
              [](const Atom& u, const Atom& v) { return u.x < v.x; });
    std::vector<Atom> merged;
    for (const Atom& at : m.atoms) {
        if (at.w == 0) continue;
        if (!merged.empty() && merged.back().x == at.x)
            merged.back().w += at.w;
        else
            merged.push_back(at);
    }
    m.atoms = std::move(merged);
    for (const DensityPanel& p : m.panels) validate_panel(p);
    return m;
}

inline JumpMeasure single_atom(double x, double w = 1.0) {
    return normalized(JumpMeasure{{{x, w}}, {}});
}

/// c1*m1 + c2*m2 realized by concatenation and weight scaling.
inline JumpMeasure measure_add(const JumpMeasure& m1, const JumpMeasure& m2, double c1 = 1.0,
                               double c2 = 1.0) {
    if (!(c1 >= 0) || !(c2 >= 0)) throw domain_error("measure_add: negative coefficient");
    JumpMeasure out;
    auto push = [&out](const JumpMeasure& m, double c) {
        if (c == 0) return;
        for (Atom at : m.atoms) {
            at.w *= c;
            out.atoms.push_back(at);
        }
        for (DensityPanel p : m.panels) {
            if (p.kind == PanelKind::tabulated)
                for (double& v : p.values) v *= c;
            else
                p.c *= c;
            out.panels.push_back(p);
        }
    };
    push(m1, c1);
    push(m2, c2);
    return normalized(std::move(out));
}

// ---------------------------------------------------------------------------
// Moments.  Analytic for parametric panels, exact Gauss quadrature for
// tabulated ones.  +inf marks a divergent moment.
// ---------------------------------------------------------------------------

enum class MomentRegion { near_zero, tail, all };  // (0,1), [1,inf), (0,inf)

namespace detail {

struct GlRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

inline const GlRule& gl_rule(int n) {
    thread_local std::unordered_map<int, GlRule> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GlRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(x) and P_n'(x)
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

/// integral of lambda^e over [lo, hi] within [0, inf]; +inf when divergent
inline double power_integral(double e, double lo, double hi) {
    if (lo >= hi) return 0.0;
    if (std::isinf(hi)) {
        if (e >= -1.0) return kInf;
        return -std::pow(lo, e + 1.0) / (e + 1.0);
    }
    if (lo == 0.0 && e <= -1.0) return kInf;
    if (e == -1.0) return std::log(hi / lo);
    double v = std::pow(hi, e + 1.0) / (e + 1.0);
    if (lo > 0.0) v -= std::pow(lo, e + 1.0) / (e + 1.0);
    return v;
}

/// integral of lambda^k exp(-r lambda) over [lo, hi], k in {0,1,2}, r > 0
inline double exp_moment_integral(int k, double r, double lo, double hi) {
    auto anti = [&](double x) {  // -integral from x to infinity, negated below
        double ex = std::exp(-r * x);
        switch (k) {
            case 0: return ex / r;
            case 1: return ex * (x / r + 1.0 / (r * r));
            default: return ex * (x * x / r + 2.0 * x / (r * r) + 2.0 / (r * r * r));
        }
    };
    double upper = std::isinf(hi) ? 0.0 : anti(hi);
    return anti(lo) - upper;
}

inline double linear_interp(const std::vector<double>& xs, const std::vector<double>& ys,
                            double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
    double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return ys[i] + t * (ys[i + 1] - ys[i]);
}

inline double panel_moment(const DensityPanel& p, int power, double lo, double hi) {
    lo = std::max(lo, p.lo());
    hi = std::min(hi, p.hi());
    if (!(lo < hi)) return 0.0;
    switch (p.kind) {
        case PanelKind::power_law:
            return p.c * power_integral(power + p.p, lo, hi);
        case PanelKind::exponential:
            return p.c * exp_moment_integral(power, p.r, lo, hi);
        case PanelKind::tabulated: {
            // integrand lambda^power * piecewise-linear: GL-6 is exact
            const GlRule& rule = gl_rule(6);
            NeumaierSum acc;
            for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
                double x0 = std::max(lo, p.nodes[i]), x1 = std::min(hi, p.nodes[i + 1]);
                if (!(x0 < x1)) continue;
                double mid = 0.5 * (x0 + x1), half = 0.5 * (x1 - x0);
                for (int q = 0; q < 6; ++q) {
                    double x = mid + half * rule.nodes[q];
                    acc.add(half * rule.weights[q] * std::pow(x, power) *
                            linear_interp(p.nodes, p.values, x));
                }
            }
            return acc.value();
        }
    }
    return 0.0;
}

}  // namespace detail

/// integral of lambda^power over the region (atoms summed exactly);
/// returns +inf when the moment diverges.  Convention: the near-zero region
/// is the open interval (0,1); an atom at exactly 1 belongs to the tail.
inline double moment(const JumpMeasure& m, int power, MomentRegion region = MomentRegion::all) {
    if (power < 0 || power > 2) throw domain_error("moment: power must be in {0, 1, 2}");
    double lo = 0.0, hi = kInf;
    if (region == MomentRegion::near_zero) hi = 1.0;
    if (region == MomentRegion::tail) lo = 1.0;

    NeumaierSum acc;
    for (const Atom& at : m.atoms) {
        bool in = (region == MomentRegion::all) ||
                  (region == MomentRegion::near_zero ? at.x < 1.0 : at.x >= 1.0);
        if (in) acc.add(at.w * std::pow(at.x, power));
    }
    for (const DensityPanel& p : m.panels) {
        double v = detail::panel_moment(p, power, lo, hi);
        if (std::isinf(v)) return kInf;
        acc.add(v);
    }
    return acc.value();
}

// ---------------------------------------------------------------------------
// Integrability classes of Levy-type measures.
// ---------------------------------------------------------------------------

enum class IntegrabilityClass {
    bernstein,  // integral of min{lambda, 1}   finite
    generator,  // integral of min{lambda^2, 1} finite
    brfp0,      // integral of min{lambda^2, lambda} finite
};

struct ClassCheck {
    bool holds = true;
    std::string witness;  // which moment diverged, when !holds
};

inline ClassCheck check_class(const JumpMeasure& m, IntegrabilityClass cls) {
    auto fail = [](const char* w) { return ClassCheck{false, w}; };
    switch (cls) {
        case IntegrabilityClass::bernstein:
            if (std::isinf(moment(m, 1, MomentRegion::near_zero)))
                return fail("first moment near 0 diverges");
            if (std::isinf(moment(m, 0, MomentRegion::tail)))
                return fail("tail mass diverges");
            return {};
        case IntegrabilityClass::generator:
            if (std::isinf(moment(m, 2, MomentRegion::near_zero)))
                return fail("second moment near 0 diverges");
            if (std::isinf(moment(m, 0, MomentRegion::tail)))
                return fail("tail mass diverges");
            return {};
        case IntegrabilityClass::brfp0:
            if (std::isinf(moment(m, 2, MomentRegion::near_zero)))
                return fail("second moment near 0 diverges");
            if (std::isinf(moment(m, 1, MomentRegion::tail)))
                return fail("first moment at the tail diverges");
            return {};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Kernel integration against a measure.
// ---------------------------------------------------------------------------

/// The fixed kernel family appearing in the representation formulas:
///   K1(l,z) = 1 - exp(-l z)
///   K2(l,z) = l exp(-l z)
///   K3(l,z) = l^2 exp(-l z)
///   K4(l,z) = exp(-l z) - 1 + l z * 1_{(0,1)}(l)      (open-interval indicator)
///   K5(l,z) = exp(-l z) - 1 + l z
enum class KernelId { k1, k2, k3, k4, k5 };

namespace detail {

// 1 - exp(-u), stable for small |u|
inline Cplx one_minus_exp(Cplx u) {
    if (std::abs(u) < 1e-4) {
        Cplx u2 = u * u;
        return u * (1.0 - u / 2.0 + u2 / 6.0 - u2 * u / 24.0 + u2 * u2 / 120.0);
    }
    double ea = std::exp(-u.real());
    double s = std::sin(0.5 * u.imag());
    return {-std::expm1(-u.real()) + ea * 2.0 * s * s, ea * std::sin(u.imag())};
}

// exp(-u) - 1 + u, stable for small |u|
inline Cplx exp_centered(Cplx u) {
    if (std::abs(u) < 1e-3) {
        Cplx u2 = u * u;
        return u2 * (0.5 - u / 6.0 + u2 / 24.0 - u2 * u / 120.0 + u2 * u2 / 720.0);
    }
    return u - one_minus_exp(u);
}

}  // namespace detail

inline Cplx kernel_value(KernelId k, double lam, Cplx z) {
    Cplx u = lam * z;
    switch (k) {
        case KernelId::k1: return detail::one_minus_exp(u);
        case KernelId::k2: return lam * std::exp(-u);
        case KernelId::k3: return lam * lam * std::exp(-u);
        case KernelId::k4:
            return lam < 1.0 ? detail::exp_centered(u) : -detail::one_minus_exp(u);
        case KernelId::k5: return detail::exp_centered(u);
    }
    return {};
}

struct IntegralResult {
    enum class Status { ok, divergent };
    Status status = Status::ok;
    Cplx value{};
    std::string witness;  // which moment diverged, when divergent

    bool ok() const { return status == Status::ok; }
    static IntegralResult divergent(std::string w) {
        IntegralResult r;
        r.status = Status::divergent;
        r.witness = std::move(w);
        return r;
    }
};

namespace detail {

// Internal kernel form: K1/K4/K5 by id, plus lambda^n exp(-lambda z) for any
// n >= 0 (subsumes K2, K3, and the higher derivative kernels).
struct KernelSpec {
    enum class Family { one_minus_exp, exp_power, centered_ind, centered };
    Family fam;
    int n = 0;  // for exp_power

    static KernelSpec from_id(KernelId k) {
        switch (k) {
            case KernelId::k1: return {Family::one_minus_exp};
            case KernelId::k2: return {Family::exp_power, 1};
            case KernelId::k3: return {Family::exp_power, 2};
            case KernelId::k4: return {Family::centered_ind};
            case KernelId::k5: return {Family::centered};
        }
        return {Family::one_minus_exp};
    }

    Cplx eval(double lam, Cplx z) const {
        switch (fam) {
            case Family::one_minus_exp: return one_minus_exp(lam * z);
            case Family::exp_power: return std::pow(lam, n) * std::exp(-lam * z);
            case Family::centered_ind:
                return lam < 1.0 ? exp_centered(lam * z) : -one_minus_exp(lam * z);
            case Family::centered: return exp_centered(lam * z);
        }
        return {};
    }

    // lowest power of lambda in the expansion at lambda -> 0
    int near_zero_power() const {
        switch (fam) {
            case Family::one_minus_exp: return 1;
            case Family::exp_power: return n;
            default: return 2;
        }
    }
    // |kernel| <= near_zero_coef * lambda^near_zero_power for small lambda|z|
    double near_zero_coef(Cplx z) const {
        switch (fam) {
            case Family::one_minus_exp: return std::abs(z);
            case Family::exp_power: return 1.0;
            default: return 0.5 * std::norm(z);
        }
    }
};

// I_n(s, T) = integral_T^inf lambda^n exp(-s lambda) dlambda, Re s > 0
inline Cplx exp_tail_integral(int n, Cplx s, double T) {
    Cplx e = std::exp(-s * T);
    Cplx acc = 0.0;
    double coef = 1.0;  // n!/(n-j)!
    Cplx sp = s;
    for (int j = 0; j <= n; ++j) {
        double tp = (n - j == 0) ? 1.0 : std::pow(T, n - j);
        acc += coef * tp / sp;
        coef *= (n - j);
        sp *= s;
    }
    return e * acc;
}

// J_n(s, eps) = integral_0^eps lambda^n exp(-s lambda) dlambda
inline Cplx exp_head_integral(int n, Cplx s, double eps) {
    Cplx u = s * eps;
    if (std::abs(u) < 0.5) {
        // eps^{n+1} * sum_m (-u)^m / (m! (m+n+1))
        Cplx term = 1.0, acc = 0.0;
        for (int m = 0; m < 40; ++m) {
            Cplx add = term / double(m + n + 1);
            acc += add;
            if (std::abs(add) < 1e-17 * std::abs(acc)) break;
            term *= -u / double(m + 1);
        }
        return std::pow(eps, n + 1) * acc;
    }
    // integral_0^inf - integral_eps^inf ; the full integral is n!/s^{n+1}
    double fact = 1.0;
    for (int j = 2; j <= n; ++j) fact *= j;
    return fact / std::pow(s, n + 1) - exp_tail_integral(n, s, eps);
}

// E(q, z, T) = integral_T^inf lambda^q exp(-lambda z) dlambda by repeated
// integration by parts; valid asymptotically, needs T|z| comfortably large.
inline std::optional<Cplx> power_exp_tail(double q, Cplx z, double T, double abs_tol) {
    double Tz = T * std::abs(z);
    if (Tz < 25.0) return std::nullopt;
    Cplx pre = std::exp(-z * T);
    if (pre == Cplx(0.0)) return Cplx(0.0);
    Cplx acc = 0.0;
    double coef = 1.0;
    Cplx zp = z;
    double tp = std::pow(T, q);
    double prev = kInf;
    for (int k = 0; k < 30; ++k) {
        Cplx term = coef * tp / zp;
        double mag = std::abs(term) * std::abs(pre);
        if (mag > prev) return std::nullopt;  // asymptotic series turned
        acc += term;
        if (mag < 0.25 * abs_tol) return pre * acc;
        prev = mag;
        coef *= (q - k);
        zp *= z;
        tp /= T;
    }
    return std::nullopt;
}

struct PanelBudget {
    int remaining;
};

// Gauss-Legendre integration of density * kernel over [lo, hi], with
// oscillation/decay-driven subsplitting.
template <typename Density>
Cplx quad_piece(const Density& dens, const KernelSpec& ker, Cplx z, double lo, double hi,
                const QuadratureConfig& cfg, PanelBudget& budget) {
    double width = hi - lo;
    double phase = width * std::abs(z.imag());
    double decay = width * std::max(z.real(), 0.0);
    int splits = std::max(1, static_cast<int>(std::ceil(
                                  std::max(phase, 0.3 * decay) / (0.25 * cfg.panel_order))));
    if (splits > budget.remaining)
        throw convergence_error("integrate_kernel: panel budget exhausted", 0.0, Cplx{});
    budget.remaining -= splits;
    const GlRule& rule = gl_rule(cfg.panel_order);
    NeumaierSumC acc;
    for (int s = 0; s < splits; ++s) {
        double x0 = lo + width * s / splits, x1 = lo + width * (s + 1) / splits;
        double mid = 0.5 * (x0 + x1), half = 0.5 * (x1 - x0);
        for (int q = 0; q < cfg.panel_order; ++q) {
            double lam = mid + half * rule.nodes[q];
            acc.add(half * rule.weights[q] * dens(lam) * ker.eval(lam, z));
        }
    }
    return acc.value();
}

template <typename Density>
Cplx integrate_panel_core(const Density& dens, const KernelSpec& ker, Cplx z, double lo,
                          double hi, const QuadratureConfig& cfg, PanelBudget& budget) {
    if (!(lo < hi)) return 0.0;
    // log-spaced cuts at half-decade ratio: keeps the density singularity at
    // the origin outside every piece's Bernstein ellipse; plus lambda = 1
    // where the indicator kernel has a kink
    const double ratio = std::sqrt(10.0);
    std::vector<double> cuts{lo};
    double d = std::pow(ratio, std::floor(std::log(lo) / std::log(ratio)) + 1.0);
    while (d < hi * (1.0 - 1e-12)) {
        if (d > lo) cuts.push_back(d);
        d *= ratio;
    }
    if (ker.fam == KernelSpec::Family::centered_ind && lo < 1.0 && 1.0 < hi)
        cuts.push_back(1.0);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    NeumaierSumC acc;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        acc.add(quad_piece(dens, ker, z, cuts[i], cuts[i + 1], cfg, budget));
    return acc.value();
}

// Analytic value of the integral over [T, inf) for a power-law panel,
// when the integration-by-parts series applies.
inline std::optional<Cplx> power_tail_value(const KernelSpec& ker, double p, double C, Cplx z,
                                            double T, double abs_tol) {
    switch (ker.fam) {
        case KernelSpec::Family::one_minus_exp: {
            auto e = power_exp_tail(p, z, T, abs_tol / std::max(C, 1e-300));
            if (!e) return std::nullopt;
            return C * (power_integral(p, T, kInf) - *e);
        }
        case KernelSpec::Family::exp_power: {
            auto e = power_exp_tail(p + ker.n, z, T, abs_tol / std::max(C, 1e-300));
            if (!e) return std::nullopt;
            return C * *e;
        }
        case KernelSpec::Family::centered_ind:
        case KernelSpec::Family::centered: {
            // T >= 1 is guaranteed, so the indicator contributes only in
            // the centered (K5) case.
            auto e = power_exp_tail(p, z, T, abs_tol / std::max(C, 1e-300));
            if (!e) return std::nullopt;
            Cplx v = C * (*e - power_integral(p, T, kInf));
            if (ker.fam == KernelSpec::Family::centered)
                v += C * z * power_integral(p + 1.0, T, kInf);
            return v;
        }
    }
    return std::nullopt;
}

// Crude truncation bound on |integral over [T, inf)| for a power-law panel.
inline double power_tail_bound(const KernelSpec& ker, double p, double C, Cplx z, double T) {
    switch (ker.fam) {
        case KernelSpec::Family::one_minus_exp:
        case KernelSpec::Family::centered_ind:
            return 2.0 * C * power_integral(p, T, kInf);
        case KernelSpec::Family::centered:
            return 2.0 * C * power_integral(p, T, kInf) +
                   std::abs(z) * C * power_integral(p + 1.0, T, kInf);
        case KernelSpec::Family::exp_power: {
            if (z.real() <= 0.0) return C * power_integral(p + ker.n, T, kInf);
            // lambda^{p+n} e^{-c lambda} <= T^{p+n} e^{-cT} style bound
            double q = p + ker.n, c = z.real();
            if (q <= 0.0) return C * std::pow(T, q) * std::exp(-c * T) / c;
            double g = std::tgamma(q + 1.0);
            return C * std::exp(-0.5 * c * T) * g * std::pow(2.0 / c, q + 1.0);
        }
    }
    return kInf;
}

// Analytic value over [0, eps] for a power-law panel via term-wise
// integration of the kernel's Taylor series; needs eps|z| small.
inline std::optional<Cplx> power_head_value(const KernelSpec& ker, double p, double C, Cplx z,
                                            double eps) {
    if (eps * std::abs(z) > 0.4) return std::nullopt;
    int n_min;
    switch (ker.fam) {
        case KernelSpec::Family::one_minus_exp: n_min = 1; break;  // u - u^2/2 + ...
        case KernelSpec::Family::exp_power: n_min = 0; break;      // l^n (1 - u + ...)
        default: n_min = 2; break;                                 // u^2/2 - u^3/6 + ...
    }
    NeumaierSumC acc;
    Cplx zp = 1.0;
    double inv_fact = 1.0;
    int shift = (ker.fam == KernelSpec::Family::exp_power) ? ker.n : 0;
    // term_m: for one_minus_exp: (-1)^{m+1} z^m eps^{p+m+1} / (m! (p+m+1)), m >= 1
    //         for exp_power:     (-1)^m     z^m eps^{p+n+m+1} / (m! (p+n+m+1)), m >= 0
    //         for centered:      (-1)^m     z^m eps^{p+m+1} / (m! (p+m+1)), m >= 2
    for (int m = 0; m < 60; ++m) {
        if (m >= 1) {
            zp *= z;
            inv_fact /= m;
        }
        if (m < n_min) continue;
        double e = p + m + shift + 1.0;
        if (!(e > 0)) return std::nullopt;  // divergent leading moment: caller rejects earlier
        double sgn = ((ker.fam == KernelSpec::Family::one_minus_exp) ? (m % 2 ? 1.0 : -1.0)
                                                                     : (m % 2 ? -1.0 : 1.0));
        Cplx term = sgn * zp * inv_fact * std::pow(eps, e) / e;
        acc.add(C * term);
        if (std::abs(term) * C < 1e-17 * (std::abs(acc.value().real()) +
                                          std::abs(acc.value().imag()) + 1e-300) &&
            m > n_min + 2)
            break;
    }
    return acc.value();
}

// Closed-form integral of an exponential panel against the kernel over
// [lo, hi] (hi may be inf).  Everything here is elementary.
inline Cplx exp_panel_value(const KernelSpec& ker, double r, double C, Cplx z, double lo,
                            double hi) {
    auto seg = [&](int n, Cplx s) -> Cplx {
        Cplx head_hi = std::isinf(hi) ? Cplx(0.0) : exp_tail_integral(n, s, hi);
        return exp_tail_integral(n, s, lo) - head_hi;
    };
    switch (ker.fam) {
        case KernelSpec::Family::one_minus_exp:
            return C * (seg(0, r) - seg(0, r + z));
        case KernelSpec::Family::exp_power:
            return C * seg(ker.n, r + z);
        case KernelSpec::Family::centered_ind: {
            // split at 1: below it the full centered kernel, above e^{-lz}-1
            Cplx acc = 0.0;
            double m = std::min(hi, 1.0);
            if (lo < m)
                acc += C * (exp_head_integral(0, r + z, m) - exp_head_integral(0, r + z, lo) -
                            (exp_head_integral(0, r, m) - exp_head_integral(0, r, lo)) +
                            z * (exp_head_integral(1, r, m) - exp_head_integral(1, r, lo)));
            double t = std::max(lo, 1.0);
            if (t < hi) {
                Cplx hi_z = std::isinf(hi) ? Cplx(0.0) : exp_tail_integral(0, r + z, hi);
                Cplx hi_r = std::isinf(hi) ? Cplx(0.0) : exp_tail_integral(0, r, hi);
                acc += C * ((exp_tail_integral(0, r + z, t) - hi_z) -
                            (exp_tail_integral(0, r, t) - hi_r));
            }
            return acc;
        }
        case KernelSpec::Family::centered:
            return C * (seg(0, r + z) - seg(0, r) + z * seg(1, r));
    }
    return {};
}

}  // namespace detail

namespace detail {

inline std::string divergence_witness(const JumpMeasure& m, const KernelSpec& ker, Cplx z) {
    switch (ker.fam) {
        case KernelSpec::Family::one_minus_exp:
            if (std::isinf(moment(m, 1, MomentRegion::near_zero)))
                return "first moment near 0";
            break;
        case KernelSpec::Family::exp_power: {
            int nz = std::min(ker.n, 2);
            if (ker.n >= 1 && std::isinf(moment(m, nz, MomentRegion::near_zero)))
                return "moment near 0";
            if (z.real() == 0.0 && std::isinf(moment(m, std::min(ker.n, 2), MomentRegion::tail)))
                return "tail moment at a boundary abscissa";
            break;
        }
        case KernelSpec::Family::centered_ind:
            if (std::isinf(moment(m, 2, MomentRegion::near_zero)))
                return "second moment near 0";
            break;
        case KernelSpec::Family::centered:
            if (std::isinf(moment(m, 2, MomentRegion::near_zero)))
                return "second moment near 0";
            if (std::isinf(moment(m, 1, MomentRegion::tail)))
                return "first moment at the tail";
            break;
    }
    if (std::isinf(moment(m, 0, MomentRegion::tail))) return "tail mass";
    return {};
}

inline Cplx integrate_panel(const DensityPanel& panel, const KernelSpec& ker, Cplx z,
                            const QuadratureConfig& cfg, PanelBudget& budget, double& l1) {
    auto density = [&panel](double lam) -> double {
        switch (panel.kind) {
            case PanelKind::power_law: return panel.c * std::pow(lam, panel.p);
            case PanelKind::exponential: return panel.c * std::exp(-panel.r * lam);
            case PanelKind::tabulated: return linear_interp(panel.nodes, panel.values, lam);
        }
        return 0.0;
    };

    const double A = panel.lo(), B = panel.hi();
    NeumaierSumC acc;
    auto scale = [&]() { return std::max({std::abs(acc.value()), 0.1 * l1, 1e-280}); };
    auto record = [&](Cplx v) {
        acc.add(v);
        l1 += std::abs(v);
    };

    if (panel.kind == PanelKind::exponential) {
        // every piece is elementary; no truncation error at all
        record(exp_panel_value(ker, panel.r, panel.c, z, A, B));
        return acc.value();
    }

    if (panel.kind == PanelKind::tabulated) {
        // cut at the nodes: the density has kinks there
        for (std::size_t i = 0; i + 1 < panel.nodes.size(); ++i)
            record(integrate_panel_core(density, ker, z, panel.nodes[i], panel.nodes[i + 1], cfg,
                                        budget));
        return acc.value();
    }

    // power-law panel
    double lo_core = A, hi_core = std::isinf(B) ? std::max(A, 1.0) : B;
    if (A == 0.0) {
        // peel the near-zero end: quadrature decades down to an eps with
        // eps|z| small, then the termwise-integrated kernel series on [0, eps]
        double m0 = std::min(1.0, B);
        double eps = m0;
        while (eps * std::abs(z) > 0.4) {
            double nxt = eps / 10.0;
            record(integrate_panel_core(density, ker, z, nxt, eps, cfg, budget));
            eps = nxt;
        }
        auto head = power_head_value(ker, panel.p, panel.c, z, eps);
        if (!head)
            throw convergence_error("integrate_kernel: near-zero expansion failed", 0.0, Cplx{});
        record(*head);
        lo_core = m0;  // [0, m0] fully consumed
        if (std::isinf(B)) hi_core = std::max(m0, 1.0);
    }
    if (lo_core < hi_core)
        record(integrate_panel_core(density, ker, z, lo_core, hi_core, cfg, budget));

    if (std::isinf(B)) {
        double T = hi_core;
        for (int dec = 0; dec < 400; ++dec) {
            double bound = power_tail_bound(ker, panel.p, panel.c, z, T);
            if (bound <= cfg.tail_rel_tol * scale()) break;  // truncate; remainder certified
            auto tail = power_tail_value(ker, panel.p, panel.c, z, T,
                                         cfg.tail_rel_tol * scale());
            if (tail) {
                record(*tail);
                break;
            }
            record(integrate_panel_core(density, ker, z, T, 10.0 * T, cfg, budget));
            T *= 10.0;
            if (dec == 399)
                throw convergence_error("integrate_kernel: tail did not converge", 0.0, Cplx{});
        }
    }
    return acc.value();
}

inline IntegralResult integrate_spec(const JumpMeasure& m, const KernelSpec& ker, Cplx z,
                                     const QuadratureConfig& cfg) {
    cfg.validate();
    if (!(z.real() >= 0.0) || !is_finite(z))
        throw domain_error("integrate_kernel: Re z must be >= 0 and finite");

    std::string w = divergence_witness(m, ker, z);
    if (!w.empty()) return IntegralResult::divergent(std::move(w));

    // K1, K4, K5 vanish identically at z = 0
    if (z == Cplx(0.0, 0.0) && ker.fam != KernelSpec::Family::exp_power) return {};

    NeumaierSumC acc;
    double l1 = 0.0;
    for (const Atom& at : m.atoms) {
        Cplx v = at.w * ker.eval(at.x, z);
        acc.add(v);
        l1 += std::abs(v);
    }
    PanelBudget budget{cfg.max_panels};
    for (const DensityPanel& p : m.panels) acc.add(integrate_panel(p, ker, z, cfg, budget, l1));

    IntegralResult res;
    res.value = acc.value();
    return res;
}

}  // namespace detail

/// Integrates the kernel against the measure at abscissa z (Re z >= 0).
/// Atoms are summed exactly; parametric panels combine Gauss-Legendre
/// panels on log-spaced subintervals with analytic head/tail segments so
/// that the relative truncation error stays below cfg.tail_rel_tol.
/// Returns a divergent result (naming the culprit moment) when the measure
/// lacks the moment the kernel needs.
inline IntegralResult integrate_kernel(const JumpMeasure& m, KernelId kernel, Cplx z,
                                       const QuadratureConfig& cfg = {}) {
    return detail::integrate_spec(m, detail::KernelSpec::from_id(kernel), z, cfg);
}

/// integral of lambda^n exp(-lambda z) m(dlambda) for n >= 1; the kernel
/// behind the n-th derivative of a Bernstein function.
inline IntegralResult integrate_exp_power(const JumpMeasure& m, int n, Cplx z,
                                          const QuadratureConfig& cfg = {}) {
    if (n < 1) throw domain_error("integrate_exp_power: n must be >= 1");
    return detail::integrate_spec(
        m, detail::KernelSpec{detail::KernelSpec::Family::exp_power, n}, z, cfg);
}

}  // namespace loewner
