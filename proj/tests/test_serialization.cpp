#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "loewner/serialization.hpp"
#include "support.hpp"

using namespace loewner;
using Catch::Approx;

TEST_CASE("measure round trip") {
    DensityPanel pw;
    pw.kind = PanelKind::power_law;
    pw.p = -2.5;
    pw.c = 1.0;
    pw.a = 0.0;
    pw.b = kInf;
    DensityPanel ex;
    ex.kind = PanelKind::exponential;
    ex.r = 1.5;
    ex.c = 0.3;
    ex.a = 0.1;
    ex.b = 7.0;
    DensityPanel tab;
    tab.kind = PanelKind::tabulated;
    tab.nodes = {1.0, 2.0, 3.0};
    tab.values = {0.5, 1.0, 0.25};
    JumpMeasure m = normalized({{{0.5, 1.0}, {2.0, 0.75}}, {pw, ex, tab}});

    json j = json::parse(to_json(m).dump());
    JumpMeasure back = normalized(parse_measure(j));
    REQUIRE(back.atoms.size() == 2);
    CHECK(back.atoms[1].w == 0.75);
    REQUIRE(back.panels.size() == 3);
    CHECK(back.panels[0].p == -2.5);
    CHECK(std::isinf(back.panels[0].b));
    CHECK(back.panels[1].r == 1.5);
    CHECK(back.panels[2].nodes.size() == 3);
}

TEST_CASE("strict parsing rejects unknown and missing keys") {
    CHECK_THROWS_AS(parse_measure(json::parse(R"({"atoms":[],"panels":[],"extra":1})")),
                    parse_error);
    CHECK_THROWS_AS(parse_measure(json::parse(R"({"atoms":[]})")), parse_error);
    CHECK_THROWS_AS(parse_measure(json::parse(R"({"atoms":[{"x":1}],"panels":[]})")),
                    parse_error);
    CHECK_THROWS_AS(
        parse_measure(json::parse(R"({"atoms":[],"panels":[{"kind":"gaussian","c":1}]})")),
        parse_error);
    CHECK_THROWS_AS(parse_generator(json::parse(R"({"q":0,"a":1,"b":0})")), parse_error);
    CHECK_THROWS_AS(
        parse_generator(json::parse(
            R"({"q":0,"a":1,"b":0,"pi":{"atoms":[],"panels":[]},"zz":0})")),
        parse_error);

    // "b":"inf" and omitted b both mean an unbounded support
    JumpMeasure m1 = parse_measure(
        json::parse(R"({"atoms":[],"panels":[{"kind":"power_law","p":-3,"c":1,"a":1,"b":"inf"}]})"));
    JumpMeasure m2 = parse_measure(
        json::parse(R"({"atoms":[],"panels":[{"kind":"power_law","p":-3,"c":1,"a":1}]})"));
    CHECK(std::isinf(m1.panels[0].b));
    CHECK(std::isinf(m2.panels[0].b));
}

TEST_CASE("representation round trips preserve evaluation") {
    std::mt19937 g(91);
    for (int it = 0; it < 10; ++it) {
        BernsteinRepr f = testsupport::random_bernstein(g);
        BernsteinRepr f2 = parse_bernstein(json::parse(to_json(f).dump()));
        GeneratorRepr gen = testsupport::random_generator(g);
        GeneratorRepr gen2 = parse_generator(json::parse(to_json(gen).dump()));
        Cplx z = testsupport::random_h_point(g);
        CHECK(std::abs(eval(f, z) - eval(f2, z)) < 1e-13);
        CHECK(std::abs(eval_gen(gen, z) - eval_gen(gen2, z)) < 1e-13);
    }
}

TEST_CASE("form discriminators") {
    LeGallRepr l{1.5, 0.5, single_atom(2.0)};
    LeGallRepr l2 = parse_legall(json::parse(to_json(l).dump()));
    CHECK(l2.c == 1.5);
    CHECK(l2.b == 0.5);

    SubordinatorGenRepr s{0.5, -1.0, single_atom(1.0)};
    SubordinatorGenRepr s2 = parse_subordinator(json::parse(to_json(s).dump()));
    CHECK(s2.q == 0.5);
    CHECK(s2.c == -1.0);

    CHECK_THROWS_AS(parse_legall(json::parse(to_json(s).dump())), parse_error);
}

TEST_CASE("field round trip") {
    std::mt19937 g(93);
    HerglotzField F = testsupport::random_field(g, 3);
    HerglotzField F2 = parse_field(json::parse(to_json(F).dump()));
    validate(F2);
    CHECK(F2.breakpoints == F.breakpoints);
    REQUIRE(F2.num_slices() == F.num_slices());
    Cplx z = testsupport::random_h_point(g);
    CHECK(std::abs(evolve(F, 0, F.span(), z) - evolve(F2, 0, F2.span(), z)) < 1e-10);
}

TEST_CASE("mechanism parsing") {
    MechanismSpec m1 = parse_mechanism(json::parse(R"({"kind":"feller","b":2})"));
    CHECK(m1.kind == MechanismSpec::Kind::feller);
    CHECK(m1.b == 2.0);

    MechanismSpec m2 = parse_mechanism(json::parse(R"({"kind":"stable","alpha":0.5,"scale":1})"));
    CHECK(m2.alpha == 0.5);

    MechanismSpec m3 = parse_mechanism(
        json::parse(R"({"kind":"compound_poisson","rate":2,"jump_atoms":[{"x":1,"w":1}]})"));
    CHECK(m3.rate == 2.0);
    REQUIRE(m3.jump_atoms.size() == 1);

    CHECK_THROWS_AS(parse_mechanism(json::parse(R"({"kind":"feller"})")), parse_error);
    CHECK_THROWS_AS(parse_mechanism(json::parse(R"({"kind":"feller","b":1,"c":2})")), parse_error);
    CHECK_THROWS_AS(parse_mechanism(json::parse(R"({"kind":"weibull","k":1})")), parse_error);
}

TEST_CASE("deterministic 17-digit emission") {
    ordered_json j{{"v", std::exp(-1.0)}, {"w", 1.0}, {"inf", kInf}};
    std::ostringstream o1, o2;
    write_json(j, o1);
    write_json(j, o2);
    CHECK(o1.str() == o2.str());
    CHECK(o1.str() == R"({"v":0.36787944117144233,"w":1,"inf":"inf"})");
}
