#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "loewner/flow.hpp"
#include "support.hpp"

using namespace loewner;
using Catch::Approx;

namespace {
Cplx riccati_oracle(double a, double b, double t, Cplx z) {
    if (a == 0.0) return z / (1.0 + b * t * z);
    double e = std::exp(-a * t);
    return e * z / (1.0 + (b / a) * (1.0 - e) * z);
}
}  // namespace

TEST_CASE("elementary closed-form flows") {
    CHECK(flow(make_generator(0, 1, 0), 1.0, {1, 0}).w.real() ==
          Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(flow(make_generator(0, 0, 1), 1.0, {1, 0}).w.real() == Approx(0.5).epsilon(1e-14));
    CHECK(flow(make_generator(2, 0, 0), 3.0, {1, 0}).w.real() == Approx(7.0));
    CHECK(flow(make_generator(0, 1, 1), 1.0, {1, 0}).w.real() ==
          Approx(std::exp(-1.0) / (2.0 - std::exp(-1.0))).epsilon(1e-14));
    CHECK(flow(make_generator(0, 1, 1), 1.0, {1, 0}).used_closed_form);

    // zero generator: identity for every t
    GeneratorRepr zero = cone_scale(make_generator(3, -1, 2), 0.0);
    CHECK(flow(zero, 17.0, {2, 3}).w == Cplx(2, 3));
}

TEST_CASE("generic ODE path agrees with the closed forms") {
    std::mt19937 g(3);
    std::uniform_real_distribution<double> ad(0.2, 2.0), td(0.1, 3.0);
    for (int it = 0; it < 8; ++it) {
        double t = td(g);
        Cplx z = testsupport::random_h_point(g, 3.0, 2.0);
        GeneratorRepr cases[] = {
            make_generator(0, ad(g), 0), make_generator(0, 0, ad(g)),
            make_generator(ad(g), 0, 0), make_generator(0, ad(g), ad(g))};
        for (const GeneratorRepr& gen : cases) {
            Cplx closed = flow(gen, t, z).w;
            Cplx ode = flow_ode(gen, t, z).w;
            CHECK(std::abs(closed - ode) <= 1e-9 * (1.0 + std::abs(closed)));
        }
    }
}

TEST_CASE("flow with a jump measure stays in the half-plane") {
    std::mt19937 g(7);
    for (int it = 0; it < 10; ++it) {
        GeneratorRepr gen = testsupport::random_generator(g);
        for (double t : {0.1, 1.0, 5.0}) {
            Cplx z = testsupport::random_h_point(g);
            FlowResult r = flow(gen, t, z);
            CHECK(r.w.real() > 0.0);
        }
    }
}

TEST_CASE("julia monotonicity for flows fixing infinity") {
    // phi'(infinity) <= 0 pushes points away from the boundary
    std::mt19937 g(9);
    for (int it = 0; it < 10; ++it) {
        std::uniform_real_distribution<double> qd(0.0, 2.0);
        JumpMeasure pi = testsupport::random_atom_measure(g);
        // pick a so that phi'(inf) = a + near-zero first moment <= 0
        double a = -qd(g) - moment(pi, 1, MomentRegion::near_zero);
        GeneratorRepr gen = make_generator(qd(g), a, 0.0, pi);
        GeneratorClassification cl = classify(gen);
        REQUIRE(cl.has_brfp_inf);
        REQUIRE(cl.phi_prime_inf <= 0.0);
        Cplx z = testsupport::random_h_point(g);
        for (double t : {0.3, 1.0, 4.0})
            CHECK(flow(gen, t, z).w.real() >= z.real() - 1e-10);
    }
}

TEST_CASE("euler iterates") {
    BernsteinRepr id = bernstein_identity();
    CHECK(euler_flow(id, 1.0, 1, {1, 0}).real() == Approx(2.0));
    CHECK(euler_flow(id, 1.0, 2, {1, 0}).real() == Approx(2.25));

    // exact (up to summation roundoff) for constant f
    BernsteinRepr c = make_bernstein(1.5, 0.0);
    CHECK(std::abs(euler_flow(c, 2.0, 7, {1, 1}) - Cplx(4, 1)) < 1e-14);
}

TEST_CASE("euler converges at first order") {
    BernsteinRepr id = bernstein_identity();
    const double e = std::exp(1.0);
    double prev = kInf;
    for (int n : {16, 32, 64, 128, 256}) {
        double err = std::abs(euler_flow(id, 1.0, n, {1, 0}).real() - e);
        CHECK(err < prev);
        prev = err;
    }
    for (int n : {64, 128, 256}) {
        double e1 = std::abs(euler_flow(id, 1.0, n, {1, 0}).real() - e);
        double e2 = std::abs(euler_flow(id, 1.0, 2 * n, {1, 0}).real() - e);
        double ratio = e2 / e1;
        CHECK(ratio >= 0.4);
        CHECK(ratio <= 0.6);
    }

    // converges to the ODE flow of phi = -f for measure-backed f as well
    BernsteinRepr f = make_bernstein(0.2, 0.5, single_atom(1.5, 0.8));
    Cplx z(1.0, 0.5);
    Cplx target = flow(from_bernstein(f), 1.0, z).w;
    double last = kInf;
    for (int n : {32, 128, 512}) {
        double err = std::abs(euler_flow(f, 1.0, n, z) - target);
        CHECK(err < last);
        last = err;
    }
    CHECK(last <= 5e-3);
}

TEST_CASE("trotter splitting") {
    GeneratorRepr lin = make_generator(0, 1, 0);
    // commuting linear factors compose exactly
    CHECK(trotter_flow(lin, lin, 1.0, 5, {1, 0}).real() ==
          Approx(std::exp(-2.0)).epsilon(1e-13));

    // identity factor
    GeneratorRepr zero = cone_scale(lin, 0.0);
    GeneratorRepr quad = make_generator(0, 0, 1);
    for (int n : {1, 4, 16})
        CHECK(std::abs(trotter_flow(quad, zero, 1.0, n, {1, 0}) - flow(quad, 1.0, {1, 0}).w) <
              1e-13);

    // error against the Riccati closed form decreases with n
    Cplx target = riccati_oracle(1.0, 1.0, 1.0, {1, 0});
    double prev = kInf;
    for (int n : {64, 128, 256, 512}) {
        double err = std::abs(trotter_flow(lin, quad, 1.0, n, {1, 0}) - target);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev <= 5e-3);
}

TEST_CASE("koenigs integrals") {
    CHECK(koenigs(bernstein_identity(), {std::exp(1.0), 0}).real() == Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(koenigs(make_bernstein(1.0, 0.0), {4, 0}) - Cplx(3, 0)) < 1e-12);
    CHECK(std::abs(koenigs(make_bernstein(1.0, 1.0), {1, 0})) == 0.0);

    // log with a complex endpoint
    Cplx z(2.0, 1.5);
    CHECK(std::abs(koenigs(bernstein_identity(), z) - std::log(z)) < 1e-12);
}

TEST_CASE("abel equation residuals") {
    CHECK(abel_residual(bernstein_identity(), 1.0, {1, 0}) < 1e-9);
    CHECK(abel_residual(make_bernstein(1.0, 0.0), 2.0, {1, 0}) < 1e-10);
    CHECK(abel_residual(make_bernstein(0.3, 0.7, single_atom(2.0)), 0.0, {2, 1}) == 0.0);

    std::mt19937 g(15);
    for (int it = 0; it < 8; ++it) {
        BernsteinRepr f = testsupport::random_bernstein(g);
        std::uniform_real_distribution<double> td(0.1, 2.0);
        Cplx z = testsupport::random_h_point(g, 3.0, 1.0);
        CHECK(abel_residual(f, td(g), z) <= 1e-7);
    }
}

TEST_CASE("semigroup identity v_s o v_t = v_{s+t}") {
    GeneratorRepr quad = make_generator(0, 0, 1);
    CHECK(semigroup_residual(quad, 1.0, 1.0, {1, 0}) < 1e-10);
    // both sides equal 1/3
    CHECK(flow(quad, 2.0, {1, 0}).w.real() == Approx(1.0 / 3.0));

    GeneratorRepr ric = make_generator(0, 1, 1);
    CHECK(semigroup_residual(ric, 0.7, 1.3, {2, 1}) <= 1e-8);

    std::mt19937 g(21);
    for (int it = 0; it < 10; ++it) {
        GeneratorRepr gen = testsupport::random_generator(g);
        std::uniform_real_distribution<double> td(0.0, 1.5);
        CHECK(semigroup_residual(gen, td(g), td(g), testsupport::random_h_point(g)) <= 1e-7);
    }
}

TEST_CASE("flows preserve the Bernstein class at test scale") {
    std::mt19937 g(27);
    OdeConfig tight;
    tight.rtol = 1e-12;
    tight.atol = 1e-14;
    for (int it = 0; it < 4; ++it) {
        GeneratorRepr gen = make_generator(0, 0, 0, testsupport::random_atom_measure(g));
        std::uniform_real_distribution<double> ad(-0.8, 0.8), bd(0.0, 0.8);
        gen.a = ad(g);
        gen.b = bd(g);
        for (double t : {0.1, 1.0, 10.0}) {
            auto r = is_bernstein_numeric(
                [&](double x) { return flow(gen, t, {x, 0}, tight).w.real(); },
                default_membership_grid(), 6);
            CHECK(r.pass);
        }
    }
}
