#pragma once

// Deterministic random builders for the property-style tests.

#include <random>
#include <utility>
#include <vector>

#include "loewner/loewner.hpp"

namespace testsupport {

using namespace loewner;

inline Cplx random_h_point(std::mt19937& g, double re_max = 5.0, double im_max = 5.0) {
    std::uniform_real_distribution<double> re(0.05, re_max), im(-im_max, im_max);
    return {re(g), im(g)};
}

inline JumpMeasure random_atom_measure(std::mt19937& g, int max_atoms = 3) {
    std::uniform_int_distribution<int> count(1, max_atoms);
    std::uniform_real_distribution<double> loc(0.05, 8.0), wt(0.05, 1.5);
    JumpMeasure m;
    int n = count(g);
    for (int i = 0; i < n; ++i) m.atoms.push_back({loc(g), wt(g)});
    return normalized(std::move(m));
}

/// Measures with all polynomial moments finite: atoms, sometimes an
/// exponential panel (closed-form integration, cheap).
inline JumpMeasure random_light_measure(std::mt19937& g) {
    JumpMeasure m = random_atom_measure(g);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(g) < 0.4) {
        DensityPanel p;
        p.kind = PanelKind::exponential;
        std::uniform_real_distribution<double> rate(0.5, 3.0), sc(0.05, 0.8);
        p.r = rate(g);
        p.c = sc(g);
        p.a = 0.0;
        p.b = kInf;
        m.panels.push_back(p);
    }
    return normalized(std::move(m));
}

/// Adds an occasional power-law tail with finite second moment.
inline JumpMeasure random_measure(std::mt19937& g) {
    JumpMeasure m = random_light_measure(g);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(g) < 0.25) {
        DensityPanel p;
        p.kind = PanelKind::power_law;
        std::uniform_real_distribution<double> expo(-3.9, -3.2), sc(0.05, 0.5);
        p.p = expo(g);
        p.c = sc(g);
        p.a = 1.0;
        p.b = kInf;
        m.panels.push_back(p);
    }
    return normalized(std::move(m));
}

inline BernsteinRepr random_bernstein(std::mt19937& g) {
    std::uniform_real_distribution<double> al(0.0, 1.0), be(0.0, 2.0);
    return make_bernstein(al(g), 0.05 + be(g), random_measure(g));
}

inline GeneratorRepr random_generator(std::mt19937& g, bool brfp0 = false) {
    std::uniform_real_distribution<double> qd(0.0, 1.0), ad(-1.5, 1.5), bd(0.0, 1.0);
    double q = brfp0 ? 0.0 : (qd(g) < 0.5 ? 0.0 : qd(g));
    return make_generator(q, ad(g), bd(g), random_measure(g));
}

inline HerglotzField random_field(std::mt19937& g, int max_slices = 4, bool brfp0 = false,
                                  double span = 2.0) {
    std::uniform_int_distribution<int> count(1, max_slices);
    int m = count(g);
    std::vector<double> bps{0.0};
    std::uniform_real_distribution<double> u(0.2, 1.0);
    for (int i = 0; i < m; ++i) bps.push_back(bps.back() + u(g));
    double scale = span / bps.back();
    for (double& t : bps) t *= scale;
    std::vector<GeneratorRepr> slices;
    for (int i = 0; i < m; ++i) slices.push_back(random_generator(g, brfp0));
    return make_field(std::move(bps), std::move(slices));
}

/// Atom-only fields: every right-hand-side evaluation is a finite sum, which
/// keeps the heavy randomized suites fast.
inline HerglotzField random_fast_field(std::mt19937& g, int max_slices = 4, bool brfp0 = false,
                                       double span = 2.0) {
    std::uniform_int_distribution<int> count(1, max_slices);
    int m = count(g);
    std::vector<double> bps{0.0};
    std::uniform_real_distribution<double> u(0.2, 1.0);
    for (int i = 0; i < m; ++i) bps.push_back(bps.back() + u(g));
    double scale = span / bps.back();
    for (double& t : bps) t *= scale;
    std::vector<GeneratorRepr> slices;
    std::uniform_real_distribution<double> qd(0.0, 1.0), ad(-1.0, 1.0), bd(0.0, 1.0);
    for (int i = 0; i < m; ++i) {
        double q = brfp0 ? 0.0 : (qd(g) < 0.5 ? 0.0 : qd(g));
        slices.push_back(make_generator(q, ad(g), bd(g), random_atom_measure(g)));
    }
    return make_field(std::move(bps), std::move(slices));
}

/// Fields with a fixed point at 0 and gently sized coefficients, so that
/// radial finite differences at h ~ 1e-4..1e-3 sit inside the Taylor range.
inline HerglotzField random_brfp0_field(std::mt19937& g, int max_slices = 3) {
    std::uniform_int_distribution<int> count(1, max_slices);
    int m = count(g);
    std::vector<double> bps{0.0};
    std::uniform_real_distribution<double> u(0.3, 0.8);
    for (int i = 0; i < m; ++i) bps.push_back(bps.back() + u(g));
    std::vector<GeneratorRepr> slices;
    std::uniform_real_distribution<double> ad(-0.3, 0.8), bd(0.0, 0.6), loc(0.1, 2.5),
        wt(0.02, 0.3);
    std::uniform_int_distribution<int> na(0, 2);
    for (int i = 0; i < m; ++i) {
        JumpMeasure pi;
        int n = na(g);
        for (int k = 0; k < n; ++k) pi.atoms.push_back({loc(g), wt(g)});
        slices.push_back(make_generator(0.0, ad(g), bd(g), normalized(std::move(pi))));
    }
    return make_field(std::move(bps), std::move(slices));
}

}  // namespace testsupport
