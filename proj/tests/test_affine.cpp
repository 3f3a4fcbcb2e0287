#include "doctest.h"

#include "affsurf/affine.hpp"
#include "prop.hpp"

using namespace affsurf;

TEST_CASE("compose examples")
{
    AffMap r = compose({1.0, 0.0}, {2.0, 3.0});
    CHECK(r.a == cx(2.0));
    CHECK(r.b == cx(3.0));

    AffMap f{2.0, 1.0}, g{3.0, 0.0};
    AffMap fg = compose(f, g);
    for (cx z : {cx(0.0), cx(1.0)})
        CHECK(std::abs(fg(z) - f(g(z))) < 1e-15);
    CHECK(fg.a == cx(6.0));
    CHECK(fg.b == cx(1.0));

    AffMap h{std::exp(-kTwoPi * kI * 1.0), cx(0.3, -2.0)};
    CHECK(classify_map(compose(h, h)).tag == MapTag::Translation);
}

TEST_CASE("invert")
{
    AffMap inv = invert({2.0, 4.0});
    CHECK(std::abs(inv.a - 0.5) < 1e-15);
    CHECK(std::abs(inv.b + 2.0) < 1e-15);
    for (cx z : {cx(0.0), cx(1.5, -2.0)})
        CHECK(std::abs(compose({2.0, 4.0}, inv)(z) - z) < 1e-12);
    CHECK(near(invert({1.0, 0.0}), AffMap{1.0, 0.0}, 0.0));
    CHECK(near(invert({1.0, cx(2.0, 1.0)}), AffMap{1.0, cx(-2.0, -1.0)}, 1e-15));
    CHECK_THROWS_AS(invert({cx(0.0), 1.0}), Error);
}

TEST_CASE("classify_map")
{
    CHECK(classify_map({1.0, 0.0}).tag == MapTag::Identity);
    CHECK(classify_map({1.0, 0.5}).tag == MapTag::Translation);
    MapKind d = classify_map({2.0, 0.0});
    CHECK(d.tag == MapTag::Dilation);
    CHECK(d.factor == doctest::Approx(2.0));
    CHECK(std::abs(d.fixed_point) < 1e-15);
    MapKind s = classify_map({kI, 0.0});
    CHECK(s.tag == MapTag::Spiral);
    CHECK(s.arg == doctest::Approx(kPi / 2));
    CHECK(s.factor == doctest::Approx(1.0));
    MapKind t = classify_map({3.0, 4.0});
    CHECK(std::abs(t.fixed_point - cx(-2.0)) < 1e-14);
}

TEST_CASE("log gluing")
{
    CHECK(std::abs(log_glue_apply({0.0, 0.0}, cx(0.3, 4.0)) - cx(0.3, 4.0)) < 1e-15);
    CHECK(std::abs(log_glue_apply({0.0, 1.0}, 0.0) - std::log(2.0)) < 1e-15);
    CHECK(std::log(2.0) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK_THROWS_AS(log_glue_apply({0.0, -2.0}, std::log(2.0)), Error);

    LogGlue g{cx(0.2, 1.1), cx(-0.7, 0.4)};
    LogGlue gi = log_glue_inverse(g);
    for (double x : {1.0, 2.0, 5.0})
        for (double y : {-7.0, 0.0, 3.3}) {
            cx z(x, y);
            CHECK(std::abs(log_glue_apply(gi, log_glue_apply(g, z)) - z) < 1e-12);
        }
}

TEST_CASE("property: associativity and inverse round trip")
{
    prop::for_all(200, 11, [](prop::Gen& g, int) {
        AffMap f{g.nonzero(0.2, 4.0), g.complex_box(5)}, h{g.nonzero(0.2, 4.0), g.complex_box(5)},
            k{g.nonzero(0.2, 4.0), g.complex_box(5)};
        AffMap l = compose(compose(f, h), k), r = compose(f, compose(h, k));
        AffMap id = compose(f, invert(f));
        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            cx z = g.complex_box(3);
            worst = std::max(worst, std::abs(l(z) - r(z)));
            worst = std::max(worst, std::abs(id(z) - z));
        }
        CHECK(worst < 1e-10);
    });
}

TEST_CASE("property: developed action of G")
{
    prop::for_all(200, 12, [](prop::Gen& g, int) {
        LogGlue lg{g.complex_box(2), g.nonzero(0.1, 5.0)};
        double base = std::log(std::abs(lg.b / std::exp(lg.s))) + 2.0;
        cx z(base + g.uniform(0.0, 6.0), g.uniform(-20.0, 20.0));
        cx lhs = std::exp(log_glue_apply(lg, z));
        cx rhs = std::exp(lg.s) * std::exp(z) + lg.b;
        CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(std::exp(z))));
        cx shifted = log_glue_apply(lg, z + kTwoPi * kI);
        CHECK(std::abs(shifted - log_glue_apply(lg, z) - kTwoPi * kI) < 1e-10);
    });
}
