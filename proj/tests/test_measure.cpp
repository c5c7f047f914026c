#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "loewner/measure.hpp"
#include "support.hpp"

using namespace loewner;
using Catch::Approx;

namespace {

// brute-force Simpson oracle for compact panels, independent of the
// production quadrature path
Cplx simpson_piece(const DensityPanel& p, KernelId k, Cplx z, double lo, double hi,
                   int n = 40000) {
    auto density = [&](double lam) {
        switch (p.kind) {
            case PanelKind::power_law: return p.c * std::pow(lam, p.p);
            case PanelKind::exponential: return p.c * std::exp(-p.r * lam);
            default: return 0.0;
        }
    };
    Cplx acc = 0.0;
    double h = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
        double lam = lo + i * h;
        double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * density(lam) * kernel_value(k, lam, z);
    }
    return acc * (h / 3.0);
}

Cplx simpson_oracle(const DensityPanel& p, KernelId k, Cplx z, double lo, double hi) {
    if (k != KernelId::k4 || hi <= 1.0 || lo >= 1.0) return simpson_piece(p, k, z, lo, hi);
    // K4 jumps by z at lambda = 1; integrate the two smooth branches
    // (K5 below 1, the negated K1 above it)
    Cplx below = simpson_piece(p, KernelId::k5, z, lo, 1.0);
    Cplx above = -simpson_piece(p, KernelId::k1, z, 1.0, hi);
    return below + above;
}

}  // namespace

TEST_CASE("normalization sorts and merges atoms") {
    JumpMeasure m = normalized({{{2.0, 1.0}, {0.5, 0.25}, {2.0, 0.5}, {3.0, 0.0}}, {}});
    REQUIRE(m.atoms.size() == 2);
    CHECK(m.atoms[0].x == 0.5);
    CHECK(m.atoms[1].x == 2.0);
    CHECK(m.atoms[1].w == 1.5);
    CHECK_THROWS_AS(normalized({{{-1.0, 1.0}}, {}}), domain_error);
    CHECK_THROWS_AS(normalized({{{1.0, -1.0}}, {}}), domain_error);
}

TEST_CASE("panel validation") {
    DensityPanel p;
    p.kind = PanelKind::power_law;
    p.p = -0.5;  // not integrable against an unbounded support
    p.c = 1.0;
    p.a = 1.0;
    p.b = kInf;
    CHECK_THROWS_AS(validate_panel(p), domain_error);
    p.p = -1.5;
    CHECK_NOTHROW(validate_panel(p));

    DensityPanel t;
    t.kind = PanelKind::tabulated;
    t.nodes = {1.0, 2.0};
    t.values = {1.0, -0.5};
    CHECK_THROWS_AS(validate_panel(t), domain_error);
}

TEST_CASE("moments of atoms and parametric panels") {
    CHECK(moment(single_atom(2.0, 3.0), 1) == Approx(6.0));

    DensityPanel tail;
    tail.kind = PanelKind::power_law;
    tail.p = -2.5;
    tail.c = 1.0;
    tail.a = 1.0;
    tail.b = kInf;
    JumpMeasure mt = normalized({{}, {tail}});
    // integral_1^inf lambda^{-1.5} = 2
    CHECK(moment(mt, 1, MomentRegion::tail) == Approx(2.0).epsilon(1e-13));
    CHECK(moment(mt, 2, MomentRegion::tail) == kInf);

    DensityPanel head;
    head.kind = PanelKind::power_law;
    head.p = -2.5;
    head.c = 1.0;
    head.a = 0.0;
    head.b = 1.0;
    JumpMeasure mh = normalized({{}, {head}});
    CHECK(moment(mh, 1, MomentRegion::near_zero) == kInf);
    CHECK(moment(mh, 2, MomentRegion::near_zero) == Approx(2.0).epsilon(1e-13));

    DensityPanel ex;
    ex.kind = PanelKind::exponential;
    ex.r = 2.0;
    ex.c = 3.0;
    ex.a = 0.0;
    ex.b = kInf;
    JumpMeasure me = normalized({{}, {ex}});
    // 3 * integral lambda e^{-2 lambda} = 3/4
    CHECK(moment(me, 1) == Approx(0.75).epsilon(1e-13));
    // 3 * 2/8
    CHECK(moment(me, 2) == Approx(0.75).epsilon(1e-13));

    // atom at exactly 1 belongs to the tail region
    JumpMeasure m1 = single_atom(1.0, 2.0);
    CHECK(moment(m1, 1, MomentRegion::tail) == 2.0);
    CHECK(moment(m1, 1, MomentRegion::near_zero) == 0.0);
}

TEST_CASE("integrability classes with witnesses") {
    JumpMeasure empty;
    CHECK(check_class(empty, IntegrabilityClass::bernstein).holds);
    CHECK(check_class(empty, IntegrabilityClass::generator).holds);
    CHECK(check_class(empty, IntegrabilityClass::brfp0).holds);

    DensityPanel stable;  // alpha = 0.5 tail/head exponent
    stable.kind = PanelKind::power_law;
    stable.p = -2.5;
    stable.c = 1.0;
    stable.a = 0.0;
    stable.b = kInf;
    JumpMeasure ms = normalized({{}, {stable}});
    CHECK(check_class(ms, IntegrabilityClass::generator).holds);
    CHECK(check_class(ms, IntegrabilityClass::brfp0).holds);
    ClassCheck cc = check_class(ms, IntegrabilityClass::bernstein);
    CHECK(!cc.holds);
    CHECK(cc.witness == "first moment near 0 diverges");

    DensityPanel hard;  // lambda^{-2} near zero: not even generator... still generator
    hard.kind = PanelKind::power_law;
    hard.p = -2.0;
    hard.c = 1.0;
    hard.a = 0.0;
    hard.b = 1.0;
    JumpMeasure mhard = normalized({{}, {hard}});
    CHECK(check_class(mhard, IntegrabilityClass::generator).holds);
    CHECK(!check_class(mhard, IntegrabilityClass::bernstein).holds);

    DensityPanel heavy;  // tail first moment diverges
    heavy.kind = PanelKind::power_law;
    heavy.p = -1.5;
    heavy.c = 1.0;
    heavy.a = 1.0;
    heavy.b = kInf;
    JumpMeasure mheavy = normalized({{}, {heavy}});
    CHECK(check_class(mheavy, IntegrabilityClass::bernstein).holds);
    ClassCheck bc = check_class(mheavy, IntegrabilityClass::brfp0);
    CHECK(!bc.holds);
    CHECK(bc.witness == "first moment at the tail diverges");
}

TEST_CASE("kernel values at atoms") {
    double e1 = std::exp(-1.0);
    JumpMeasure d1 = single_atom(1.0);

    auto r = integrate_kernel(d1, KernelId::k1, {1, 0});
    REQUIRE(r.ok());
    CHECK(r.value.real() == Approx(1.0 - e1).epsilon(1e-15));

    // the open-interval indicator vanishes at the atom location 1
    auto r4 = integrate_kernel(d1, KernelId::k4, {1, 0});
    REQUIRE(r4.ok());
    CHECK(r4.value.real() == Approx(e1 - 1.0).epsilon(1e-15));

    JumpMeasure empty;
    for (KernelId k : {KernelId::k1, KernelId::k2, KernelId::k3, KernelId::k4, KernelId::k5}) {
        auto re = integrate_kernel(empty, k, {0.3, 2.0});
        REQUIRE(re.ok());
        CHECK(re.value == Cplx(0, 0));
    }
}

TEST_CASE("kernel identity: K4 = K5 - lambda z above 1, K4 = K5 below 1") {
    std::mt19937 g(5);
    for (int it = 0; it < 50; ++it) {
        std::uniform_real_distribution<double> loc(0.05, 6.0);
        double lam = loc(g);
        Cplx z = testsupport::random_h_point(g);
        Cplx k4 = kernel_value(KernelId::k4, lam, z);
        Cplx k5 = kernel_value(KernelId::k5, lam, z);
        Cplx expect = lam < 1.0 ? k5 : k5 - lam * z;
        CHECK(std::abs(k4 - expect) <= 1e-13 * (1.0 + std::abs(k5)));
    }
}

TEST_CASE("integrate_kernel is linear in the measure") {
    std::mt19937 g(17);
    for (int it = 0; it < 30; ++it) {
        JumpMeasure m1 = testsupport::random_measure(g);
        JumpMeasure m2 = testsupport::random_measure(g);
        std::uniform_real_distribution<double> cd(0.1, 2.0);
        double c1 = cd(g), c2 = cd(g);
        Cplx z = testsupport::random_h_point(g);
        JumpMeasure sum = measure_add(m1, m2, c1, c2);
        for (KernelId k : {KernelId::k1, KernelId::k4}) {
            Cplx lhs = integrate_kernel(sum, k, z).value;
            Cplx rhs = c1 * integrate_kernel(m1, k, z).value + c2 * integrate_kernel(m2, k, z).value;
            CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + std::abs(rhs) + 1e-12));
        }
    }
}

TEST_CASE("K1 on the positive axis is real, nonnegative, nondecreasing") {
    std::mt19937 g(23);
    for (int it = 0; it < 10; ++it) {
        JumpMeasure m = testsupport::random_measure(g);
        double prev = -1e-14;
        for (int i = 1; i <= 20; ++i) {
            double x = 0.25 * i;
            auto r = integrate_kernel(m, KernelId::k1, {x, 0});
            REQUIRE(r.ok());
            CHECK(std::abs(r.value.imag()) < 1e-13);
            CHECK(r.value.real() >= prev - 1e-12);
            prev = r.value.real();
        }
    }
}

TEST_CASE("compact panels agree with a brute-force oracle") {
    DensityPanel pw;
    pw.kind = PanelKind::power_law;
    pw.p = -1.25;
    pw.c = 0.8;
    pw.a = 0.3;
    pw.b = 5.0;

    DensityPanel ex;
    ex.kind = PanelKind::exponential;
    ex.r = 1.5;
    ex.c = 0.7;
    ex.a = 0.2;
    ex.b = 4.0;

    for (Cplx z : {Cplx(1.0, 0.0), Cplx(0.4, 1.3), Cplx(2.0, -0.8)}) {
        for (KernelId k : {KernelId::k1, KernelId::k2, KernelId::k4, KernelId::k5}) {
            for (const DensityPanel& p : {pw, ex}) {
                JumpMeasure m = normalized({{}, {p}});
                Cplx got = integrate_kernel(m, k, z).value;
                Cplx want = simpson_oracle(p, k, z, p.a, p.b);
                CHECK(std::abs(got - want) <= 1e-9 * (1.0 + std::abs(want)));
            }
        }
    }
}

TEST_CASE("unbounded exponential panel: analytic tail vs closed form") {
    // K1 against c e^{-r lambda} on (0, inf):
    //   c [ 1/r - 1/(r + z) ]
    DensityPanel ex;
    ex.kind = PanelKind::exponential;
    ex.r = 2.0;
    ex.c = 1.3;
    ex.a = 0.0;
    ex.b = kInf;
    JumpMeasure m = normalized({{}, {ex}});
    for (Cplx z : {Cplx(1.0, 0.0), Cplx(0.5, 2.0), Cplx(0.0, 1.0)}) {
        Cplx want = ex.c * (1.0 / ex.r - 1.0 / (ex.r + z));
        Cplx got = integrate_kernel(m, KernelId::k1, z).value;
        CHECK(std::abs(got - want) <= 1e-12 * (1.0 + std::abs(want)));
    }
}

TEST_CASE("stable-exponent normalization against the Gamma closed form") {
    // integral (e^{-zx} - 1 + zx) x^{-2-alpha} dx = Gamma(-1-alpha) z^{1+alpha}
    for (double alpha : {0.25, 0.5, 0.75}) {
        DensityPanel p;
        p.kind = PanelKind::power_law;
        p.p = -2.0 - alpha;
        p.c = 1.0;
        p.a = 0.0;
        p.b = kInf;
        JumpMeasure m = normalized({{}, {p}});
        double gamma = std::tgamma(-1.0 - alpha);
        REQUIRE(gamma > 0.0);
        for (Cplx z : {Cplx(1.0, 0.0), Cplx(0.3, 0.0), Cplx(2.0, 1.0), Cplx(0.7, -1.8)}) {
            Cplx want = gamma * std::pow(z, 1.0 + alpha);
            Cplx got = integrate_kernel(m, KernelId::k5, z).value;
            CHECK(std::abs(got - want) <= 1e-9 * std::abs(want));
        }
    }
}

TEST_CASE("doubling the panel order moves the stable integral very little") {
    DensityPanel p;
    p.kind = PanelKind::power_law;
    p.p = -2.5;
    p.c = 1.0;
    p.a = 0.0;
    p.b = kInf;
    JumpMeasure m = normalized({{}, {p}});
    QuadratureConfig c16, c32;
    c32.panel_order = 32;
    for (Cplx z : {Cplx(1.0, 0.0), Cplx(0.5, 1.5)}) {
        Cplx v16 = integrate_kernel(m, KernelId::k4, z, c16).value;
        Cplx v32 = integrate_kernel(m, KernelId::k4, z, c32).value;
        CHECK(std::abs(v16 - v32) <= 10.0 * c16.tail_rel_tol * std::abs(v16));
    }
}

TEST_CASE("divergent integrals carry a witness") {
    DensityPanel heavy;  // tail first moment diverges
    heavy.kind = PanelKind::power_law;
    heavy.p = -1.5;
    heavy.c = 1.0;
    heavy.a = 1.0;
    heavy.b = kInf;
    JumpMeasure m = normalized({{}, {heavy}});
    auto r = integrate_kernel(m, KernelId::k5, {1, 0});
    REQUIRE(!r.ok());
    CHECK(r.witness == "first moment at the tail");

    DensityPanel hd;  // first moment near zero diverges
    hd.kind = PanelKind::power_law;
    hd.p = -2.0;
    hd.c = 1.0;
    hd.a = 0.0;
    hd.b = 1.0;
    JumpMeasure mh = normalized({{}, {hd}});
    auto r1 = integrate_kernel(mh, KernelId::k1, {1, 0});
    REQUIRE(!r1.ok());
    CHECK(r1.witness == "first moment near 0");
}

TEST_CASE("tabulated panels integrate and take moments") {
    DensityPanel t;
    t.kind = PanelKind::tabulated;
    t.nodes = {1.0, 2.0, 3.0};
    t.values = {1.0, 1.0, 1.0};  // uniform density on [1, 3]
    JumpMeasure m = normalized({{}, {t}});
    CHECK(moment(m, 0) == Approx(2.0).epsilon(1e-12));
    CHECK(moment(m, 1) == Approx(4.0).epsilon(1e-12));

    // K2 against the uniform density: integral_1^3 lambda e^{-lambda} dlambda
    double want = (1.0 + 1.0) * std::exp(-1.0) - (3.0 + 1.0) * std::exp(-3.0);
    Cplx got = integrate_kernel(m, KernelId::k2, {1, 0}).value;
    CHECK(got.real() == Approx(want).epsilon(1e-10));
}

TEST_CASE("tabulated panel at complex abscissae") {
    DensityPanel t;
    t.kind = PanelKind::tabulated;
    t.nodes = {0.5, 1.5, 4.0};
    t.values = {0.2, 1.0, 0.0};
    JumpMeasure m = normalized({{}, {t}});
    // oracle: piecewise-linear density integrated by fine Simpson per segment
    for (Cplx z : {Cplx(0.7, 2.0), Cplx(0.1, -3.0)}) {
        for (KernelId k : {KernelId::k1, KernelId::k2}) {
            Cplx want = 0.0;
            for (std::size_t seg = 0; seg + 1 < t.nodes.size(); ++seg) {
                double x0 = t.nodes[seg], x1 = t.nodes[seg + 1];
                double v0 = t.values[seg], v1 = t.values[seg + 1];
                const int n = 20000;
                Cplx acc = 0.0;
                for (int i = 0; i <= n; ++i) {
                    double lam = x0 + (x1 - x0) * i / n;
                    double dens = v0 + (v1 - v0) * (lam - x0) / (x1 - x0);
                    double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                    acc += w * dens * kernel_value(k, lam, z);
                }
                want += acc * ((x1 - x0) / n / 3.0);
            }
            Cplx got = integrate_kernel(m, k, z).value;
            CHECK(std::abs(got - want) <= 1e-9 * (1.0 + std::abs(want)));
        }
    }
}

TEST_CASE("power panel with sub-unit support touching zero") {
    DensityPanel p;
    p.kind = PanelKind::power_law;
    p.p = -1.5;
    p.c = 1.0;
    p.a = 0.0;
    p.b = 0.25;
    JumpMeasure m = normalized({{}, {p}});
    // K2 against lambda^{-1.5} on (0, 1/4]: integral lambda^{-0.5} e^{-lambda z}
    Cplx z(2.0, 1.0);
    const int n = 400000;  // integrable singularity: use a u = sqrt(lambda) substitution
    Cplx want = 0.0;
    for (int i = 0; i <= n; ++i) {
        double u = 0.5 * i / n;
        double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        want += w * 2.0 * std::exp(-u * u * z);  // dlambda = 2u du, integrand u^{-1} e^{-l z} u
    }
    want *= (0.5 / n) / 3.0;
    Cplx got = integrate_kernel(m, KernelId::k2, z).value;
    CHECK(std::abs(got - want) <= 1e-9 * (1.0 + std::abs(want)));
}

TEST_CASE("power tails on the imaginary axis are tolerance-consistent") {
    DensityPanel tail;
    tail.kind = PanelKind::power_law;
    tail.p = -1.5;
    tail.c = 1.0;
    tail.a = 1.0;
    tail.b = kInf;
    JumpMeasure m = normalized({{}, {tail}});
    QuadratureConfig loose, tight;
    loose.tail_rel_tol = 1e-8;
    for (Cplx z : {Cplx(0.0, 1.0), Cplx(0.0, -2.5), Cplx(1e-8, 0.3)}) {
        Cplx a = integrate_kernel(m, KernelId::k1, z, loose).value;
        Cplx b = integrate_kernel(m, KernelId::k1, z, tight).value;
        CHECK(std::abs(a - b) <= 1e-7 * (1.0 + std::abs(b)));
        CHECK(std::abs(b.real()) > 0.0);  // genuinely nonzero value
    }
}

TEST_CASE("kernels at the origin abscissa") {
    // K4 and K5 vanish identically at z = 0, even on unbounded panels
    DensityPanel p;
    p.kind = PanelKind::power_law;
    p.p = -2.5;
    p.c = 1.0;
    p.a = 0.0;
    p.b = kInf;
    JumpMeasure m = normalized({{{0.5, 1.0}}, {p}});
    for (KernelId k : {KernelId::k4, KernelId::k5}) {
        auto r = integrate_kernel(m, k, {0, 0});
        REQUIRE(r.ok());
        CHECK(r.value == Cplx(0, 0));
    }
    // likewise K1 on a bernstein-class unbounded tail
    DensityPanel tail;
    tail.kind = PanelKind::power_law;
    tail.p = -1.5;
    tail.c = 1.0;
    tail.a = 1.0;
    tail.b = kInf;
    auto r1 = integrate_kernel(normalized({{}, {tail}}), KernelId::k1, {0, 0});
    REQUIRE(r1.ok());
    CHECK(r1.value == Cplx(0, 0));
    // but on a non-bernstein measure K1 stays divergent regardless of z
    auto rd = integrate_kernel(m, KernelId::k1, {0, 0});
    CHECK(!rd.ok());
    // K2 at z = 0 is the plain first moment when it exists
    auto r2 = integrate_kernel(single_atom(2.0, 3.0), KernelId::k2, {0, 0});
    REQUIRE(r2.ok());
    CHECK(r2.value.real() == Approx(6.0));
    // and divergent when the tail first moment is infinite
    DensityPanel heavy;
    heavy.kind = PanelKind::power_law;
    heavy.p = -1.5;
    heavy.c = 1.0;
    heavy.a = 1.0;
    heavy.b = kInf;
    auto rdiv = integrate_kernel(normalized({{}, {heavy}}), KernelId::k2, {0, 0});
    CHECK(!rdiv.ok());
}

TEST_CASE("higher exponential-power kernels (derivative kernels)") {
    JumpMeasure d1 = single_atom(1.0);
    for (int n = 1; n <= 4; ++n) {
        auto r = integrate_exp_power(d1, n, {0.5, 0.0});
        REQUIRE(r.ok());
        CHECK(r.value.real() == Approx(std::exp(-0.5)).epsilon(1e-14));
    }
    // against a stable head: integral_0^inf lambda^3 e^{-lambda} lambda^{-2.5}
    //                       = Gamma(1.5) = sqrt(pi)/2
    DensityPanel p;
    p.kind = PanelKind::power_law;
    p.p = -2.5;
    p.c = 1.0;
    p.a = 0.0;
    p.b = kInf;
    JumpMeasure ms = normalized({{}, {p}});
    auto r3 = integrate_exp_power(ms, 3, {1.0, 0.0});
    REQUIRE(r3.ok());
    CHECK(r3.value.real() == Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-9));
}
