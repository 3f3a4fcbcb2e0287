#include "doctest.h"

#include "affsurf/fuchsian.hpp"
#include "oracles.hpp"
#include "prop.hpp"

using namespace affsurf;

namespace {

LaurentSeries series(int lo, std::vector<cx> c) { return {lo, std::move(c)}; }

PowerSeries random_jet(prop::Gen& g)
{
    PowerSeries p(4, cx(0.0, 0.0));
    p[1] = g.nonzero(0.5, 2.0);
    p[2] = g.complex_box(0.3);
    p[3] = g.complex_box(0.3);
    return p;
}

LaurentSeries random_gamma(prop::Gen& g, int d, int N)
{
    LaurentSeries s;
    s.lo = -d;
    s.c.assign(N + d + 1, cx(0.0, 0.0));
    for (auto& c : s.c)
        c = g.complex_box(1.0);
    s.c[0] = g.nonzero(0.5, 2.0);
    return s;
}

}  // namespace

TEST_CASE("classify_residue table")
{
    CHECK(classify_residue(0.0).tag == FuchsianTag::Erasable);
    CHECK(classify_residue({1.0, 0.3}).tag == FuchsianTag::ReebPlus);
    CHECK(classify_residue({1.0, -0.3}).tag == FuchsianTag::ReebMinus);
    CHECK(classify_residue(1.0).tag == FuchsianTag::Cylindrical);
    CHECK(classify_residue(3.0).tag == FuchsianTag::AmbiguousInteger);
    CHECK(classify_residue(0.5).tag == FuchsianTag::Conical);
    CHECK(classify_residue(0.5).angle == doctest::Approx(kPi));
    CHECK(classify_residue({2.5, 0.1}).tag == FuchsianTag::AntiConical);
    CHECK(classify_residue({3.0, 0.1}).tag == FuchsianTag::AntiConical);
    FuchsianClass hinted = classify_residue(3.0, true);
    CHECK(hinted.tag == FuchsianTag::AntiConical);
    CHECK(hinted.shifted == std::optional<bool>(true));
    CHECK(classify_residue(-1.0).tag == FuchsianTag::Conical);
}

TEST_CASE("property: classification is locally constant off the boundary set")
{
    prop::for_all(500, 21, [](prop::Gen& g, int) {
        cx rho = g.complex_box(4.0);
        if (std::abs(rho.real() - 1.0) < 1e-3 || std::abs(rho) < 1e-3)
            return;
        cx bump = g.complex_box(1e-12);
        CHECK(classify_residue(rho).tag == classify_residue(rho + bump).tag);
    });
}

TEST_CASE("pullback examples")
{
    LaurentSeries gamma = series(-2, {1.0, 0.5, 2.0, -1.0});
    LaurentSeries same = pullback_gamma(gamma, {0.0, 1.0}, 1);
    for (int n = -2; n <= 1; ++n)
        CHECK(std::abs(same.at(n) - gamma.at(n)) < 1e-14);

    cx c(0.7, -0.2), a(1.3, 0.4);
    LaurentSeries simple = pullback_gamma(series(-1, {c}), {0.0, a}, 3);
    CHECK(std::abs(simple.at(-1) - c) < 1e-14);
    for (int n = 0; n <= 3; ++n)
        CHECK(std::abs(simple.at(n)) < 1e-14);

    LaurentSeries lead = pullback_gamma(series(-2, {1.0}), {0.0, a}, 2);
    CHECK(std::abs(lead.at(-2) - 1.0 / a) < 1e-14);

    CHECK_THROWS_AS(pullback_gamma(gamma, {0.0, 0.0, 1.0}, 2), Error);
}

TEST_CASE("pullback agrees with a Cauchy-integral oracle")
{
    prop::for_all(20, 22, [](prop::Gen& g, int) {
        int d = g.integer(1, 4);
        LaurentSeries gamma = random_gamma(g, d, 4);
        PowerSeries phi = random_jet(g);
        phi[2] *= 0.3;
        phi[3] *= 0.3;
        LaurentSeries pb = pullback_gamma(gamma, phi, 4);
        auto ref = oracle::pullback_by_cauchy(gamma, phi, -d, 4, 0.3, 1024);
        // The oracle sees the full composition; orders through 4 only depend on terms through 4.
        for (int n = -d; n <= 4; ++n)
            CHECK(std::abs(pb.at(n) - ref[n + d]) < 1e-7 * (1.0 + std::abs(ref[n + d])));
    });
}

TEST_CASE("normal form examples")
{
    NormalForm already = formal_normal_form(series(-2, {1.0, cx(0.3, 0.1)}), 6);
    CHECK(already.d == 2);
    CHECK(std::abs(already.phi[1] - 1.0) < 1e-14);
    for (std::size_t k = 2; k < already.phi.size(); ++k)
        CHECK(std::abs(already.phi[k]) < 1e-14);

    LaurentSeries g = series(-3, {4.0, 0.0, 5.0, 7.0, 1.0});
    NormalForm nf = formal_normal_form(g, 4);
    CHECK(nf.d == 3);
    CHECK(nf.residue_coeff == cx(5.0));
    LaurentSeries check = pullback_gamma(g, nf.phi, 4);
    CHECK(std::abs(check.at(-3) - 1.0) < 1e-10);
    CHECK(std::abs(check.at(-2)) < 1e-10);
    CHECK(std::abs(check.at(-1) - 5.0) < 1e-10);
    for (int n = 0; n <= 4; ++n)
        CHECK(std::abs(check.at(n)) < 1e-10);

    cx c(0.25, 0.5);
    NormalForm fuchs = formal_normal_form(series(-1, {c, 2.0, -1.0, 0.5}), 5);
    CHECK(fuchs.d == 1);
    LaurentSeries fc = pullback_gamma(series(-1, {c, 2.0, -1.0, 0.5}), fuchs.phi, 5);
    CHECK(std::abs(fc.at(-1) - c) < 1e-12);
    for (int n = 0; n <= 5; ++n)
        CHECK(std::abs(fc.at(n)) < 1e-10);
}

TEST_CASE("property: normal form reproduces X^-d + g_{-1}/X and round trips")
{
    prop::for_all(50, 23, [](prop::Gen& g, int) {
        int d = g.integer(2, 4);
        int N = d + 10;
        LaurentSeries gamma = random_gamma(g, d, N);
        NormalForm nf = formal_normal_form(gamma, N);
        REQUIRE(nf.d == d);
        LaurentSeries pb = to_double(pullback_gamma(to_quad(gamma), nf.phi_exact, N));
        for (int n = -d; n <= N; ++n)
            CHECK(std::abs(pb.at(n) - nf.normalized.at(n)) < 1e-10);
        PowerSeriesQ inv = series_reverse(nf.phi_exact, N + d + 3);
        LaurentSeries back = to_double(pullback_gamma(to_quad(nf.normalized), inv, N));
        for (int n = -d; n <= N; ++n)
            CHECK(std::abs(back.at(n) - gamma.at(n)) < 1e-9 * (1.0 + std::abs(gamma.at(n))));
    });
}

TEST_CASE("property: order and residue coefficient are formal invariants")
{
    prop::for_all(40, 24, [](prop::Gen& g, int) {
        int d = g.integer(1, 4);
        LaurentSeries gamma = random_gamma(g, d, d + 6);
        PowerSeries phi = random_jet(g);
        LaurentSeries pb = pullback_gamma(gamma, phi, d + 6);
        pb = trimmed(pb, 1e-14);
        CHECK(-pb.lo == d);
        CHECK(std::abs(pb.at(-1) - gamma.at(-1)) < 1e-10);
    });
}
