#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <tuple>

#include "affsurf/builders.hpp"
#include "affsurf/delaunay.hpp"
#include "affsurf/doublepole.hpp"
#include "oracles.hpp"
#include "prop.hpp"

using namespace affsurf;

namespace {

using Key = std::tuple<int, int, long, long>;

long quantize(double x) { return std::lround(x * 1e6); }

double angle_mod_pi(cx d)
{
    double a = std::fmod(std::arg(d) + kPi, kPi);
    if (a > kPi - 1e-7) a = 0.0;
    return a;
}

std::multiset<Key> segment_keys(const Surface& s, const std::vector<DelaunaySegment>& segs)
{
    std::multiset<Key> out;
    for (const auto& g : segs) {
        int i = s.singularities[g.record_a].mark, j = s.singularities[g.record_b].mark;
        cx d = g.witness.hits[1].position - g.witness.hits[0].position;
        out.insert({std::min(i, j), std::max(i, j), quantize(std::abs(d)), quantize(angle_mod_pi(d))});
    }
    return out;
}

std::multiset<Key> oracle_keys(const std::vector<oracle::PeriodicEdge>& edges)
{
    std::multiset<Key> out;
    for (const auto& e : edges)
        out.insert({std::min(e.i, e.j), std::max(e.i, e.j), quantize(e.length), quantize(angle_mod_pi(e.d))});
    return out;
}

bool point_like(const SingularityRecord& r)
{
    return r.order >= 2 || r.order == 0 || (r.order == 1 && r.residue.real() < 1.0 - 1e-9);
}

void check_decomposition(const Surface& s, const DelaunayDecomposition& d)
{
    ComplexityReport r = complexity_check(s, d);
    CHECK_FALSE(r.skipped);
    CHECK(r.identity_ok);
    CHECK(r.bound_ok);
    CHECK(segment_crossings(s, d.segments).empty());
    std::set<int> ends;
    for (const auto& g : d.segments) {
        CHECK(g.witness.type_a());
        ends.insert(g.record_a);
        ends.insert(g.record_b);
    }
    for (const auto& rec : s.singularities)
        if (point_like(rec)) CHECK(ends.count(rec.id) == 1);
    for (const auto& c : d.components)
        if (c.type == ComponentType::Polygon) CHECK(c.sides >= 3);
}

int count_type(const DelaunayDecomposition& d, ComponentType t)
{
    return static_cast<int>(std::count_if(d.components.begin(), d.components.end(),
                                          [&](const DelaunayComponent& c) { return c.type == t; }));
}

}  // namespace

TEST_CASE("exceptional models")
{
    auto tag = [](const Surface& s) { return is_exceptional(s); };
    ExceptionalTag e = tag(build_exp_affine_plane());
    CHECK(e.exceptional);
    CHECK(e.tag == "infinite-angle-cone");
    CHECK(tag(build_flat_torus(1.0, kI)).tag == "translation-torus");
    CHECK(tag(build_affine_torus(cx(1.0, 0.0), cx(0.0, kTwoPi))).tag == "affine-torus");
    CHECK(tag(build_translation_cylinder()).tag == "translation-cylinder");
    CHECK(tag(build_reeb_cylinder(2.0)).tag == "affine-cylinder");
    CHECK(tag(build_plane()).tag == "whole-plane");
    CHECK(tag(build_plane({0.0})).tag == "whole-plane");
    CHECK_FALSE(tag(build_cushion()).exceptional);
    CHECK(tag(build_cushion()).tag.empty());
    CHECK_FALSE(tag(build_flat_torus(1.0, kI, {0.0})).exceptional);
}

TEST_CASE("exceptional surfaces are refused")
{
    Surface e = build_exp_affine_plane();
    try {
        delaunay_segments(e);
        FAIL("expected ExceptionalSkip");
    } catch (const Error& err) {
        CHECK(err.kind() == "ExceptionalSkip");
    }
    ComplexityReport r = complexity_check(e, {});
    CHECK(r.skipped);
    CHECK(r.skip_reason == "ExceptionalSkip");
}

TEST_CASE("maximal disk on the square torus")
{
    Surface s = build_flat_torus(1.0, kI, {0.0});
    GrowResult g = grow_max_disk(s, {0, cx(0.5, 0.5)});
    auto [r, count] = oracle::periodic_empty_disk(1.0, kI, {0.0}, cx(0.5, 0.5));
    CHECK(r == doctest::Approx(0.70710678118654752).epsilon(1e-12));
    CHECK(count == 4);
    REQUIRE(g.outcome == DiskOutcome::Disk);
    CHECK(g.disk.radius == doctest::Approx(r).epsilon(1e-9));
    CHECK(g.disk.hits.size() == 4);
    CHECK(g.disk.rigid());

    auto off = oracle::periodic_empty_disk(1.0, kI, {0.0}, cx(0.3, 0.45));
    GrowResult h = grow_max_disk(s, {0, cx(0.3, 0.45)});
    REQUIRE(h.outcome == DiskOutcome::Disk);
    CHECK(h.disk.radius >= off.first - 1e-12);
    CHECK(h.disk.hits.size() >= 2);
}

TEST_CASE("maximal disk on the cushion")
{
    Surface s = build_cushion();
    GrowResult g = grow_max_disk(s, {0, cx(0.5, 0.5)});
    REQUIRE(g.outcome == DiskOutcome::Disk);
    CHECK(g.disk.radius == doctest::Approx(0.70710678118654752).epsilon(1e-9));
    CHECK(g.disk.hits.size() == 4);
}

TEST_CASE("seed on a singular point")
{
    Surface s = build_flat_torus(1.0, kI, {cx(0.5, 0.5)});
    CHECK_THROWS_WITH_AS(grow_max_disk(s, {0, cx(0.5, 0.5)}), doctest::Contains("singular"), Error);
}

TEST_CASE("pivoting on the square torus")
{
    Surface s = build_flat_torus(1.0, kI, {0.0});
    GrowResult g = grow_max_disk(s, {0, cx(0.5, 0.5)});
    REQUIRE(g.disk.hits.size() == 4);
    for (int e = 0; e < 4; ++e) {
        PivotResult p = pivot(s, g.disk, e);
        REQUIRE(p.outcome == DiskOutcome::Disk);
        CHECK(p.next.radius == doctest::Approx(g.disk.radius).epsilon(1e-8));
        CHECK(p.next.hits.size() == 4);
        CHECK(p.segment.length == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(p.segment.witness.type_a());
    }
    ImmersedDisk lone;
    CHECK_THROWS_AS(pivot(s, lone, 0), Error);
}

TEST_CASE("square torus with one mark")
{
    Surface s = build_flat_torus(1.0, kI, {0.0});
    DelaunayDecomposition d = delaunay_decomposition(s);
    auto edges = oracle::periodic_delaunay(1.0, kI, {0.0});
    CHECK(edges.size() == 2);
    REQUIRE(d.segments.size() == 2);
    CHECK(segment_keys(s, d.segments) == oracle_keys(edges));
    for (const auto& g : d.segments) CHECK(g.length == doctest::Approx(1.0).epsilon(1e-9));
    REQUIRE(d.components.size() == 1);
    CHECK(d.components[0].type == ComponentType::Polygon);
    CHECK(d.components[0].sides == 4);
    CHECK(d.t == 2);
    CHECK(d.beta == 0);
    check_decomposition(s, d);
}

TEST_CASE("hexagonal torus with one mark")
{
    cx w = std::polar(1.0, kPi / 3.0);
    Surface s = build_flat_torus(1.0, w, {0.0});
    DelaunayDecomposition d = delaunay_decomposition(s);
    auto edges = oracle::periodic_delaunay(1.0, w, {0.0});
    CHECK(edges.size() == 3);
    CHECK(d.segments.size() == 3);
    CHECK(segment_keys(s, d.segments) == oracle_keys(edges));
    CHECK(count_type(d, ComponentType::Polygon) == 2);
    CHECK(d.t == 2);
    CHECK(d.beta == 0);
    check_decomposition(s, d);
}

TEST_CASE("cushion")
{
    Surface s = build_cushion();
    DelaunayDecomposition d = delaunay_decomposition(s);
    std::vector<double> lengths = oracle::cushion_delaunay_lengths(1.0);
    CHECK(lengths.size() == 4);
    REQUIRE(d.segments.size() == lengths.size());
    for (const auto& g : d.segments) CHECK(g.length == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(count_type(d, ComponentType::Polygon) == 2);
    for (const auto& c : d.components) CHECK(c.sides == 4);
    CHECK(d.t == 4);
    CHECK(d.beta == 0);
    ComplexityReport r = complexity_check(s, d);
    CHECK(r.lhs == 4);
    CHECK(r.rhs == 4);
    check_decomposition(s, d);
}

TEST_CASE("random flat tori against the periodic oracle")
{
    prop::for_all(12, 2024, [](prop::Gen& g, int) {
        cx v(g.uniform(-0.4, 0.4), g.uniform(0.75, 1.3));
        int count = g.integer(1, 3);
        std::vector<cx> marks;
        for (int k = 0; k < count; ++k) marks.push_back(k == 0 ? cx(0.0, 0.0) : cx(g.uniform(0.1, 0.9), g.uniform(0.1, 0.6)));
        Surface s = build_flat_torus(1.0, v, marks);
        DelaunayDecomposition d = delaunay_decomposition(s);
        CHECK(segment_keys(s, d.segments) == oracle_keys(oracle::periodic_delaunay(1.0, v, marks)));
        check_decomposition(s, d);
    });
}

TEST_CASE("planes with marks have an anti-conical exterior")
{
    prop::for_all(6, 77, [](prop::Gen& g, int i) {
        std::vector<cx> marks;
        for (int k = 0; k < 2 + i % 3; ++k) marks.push_back(g.complex_box(1.0));
        Surface s = build_plane(marks);
        DelaunayDecomposition d = delaunay_decomposition(s);
        CHECK(count_type(d, ComponentType::AntiConical) == 1);
        check_decomposition(s, d);
    });
}

TEST_CASE("translation cylinder with a mark")
{
    Surface s = build_translation_cylinder();
    s.marks.push_back({0, cx(0.5, 0.5)});
    finalize(s);
    DelaunayDecomposition d = delaunay_decomposition(s);
    REQUIRE(d.segments.size() == 1);
    CHECK(d.segments[0].length == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(count_type(d, ComponentType::TranslationSemiInfinite) == 2);
    CHECK(d.beta == 2);
    CHECK(d.graph_core);
    check_decomposition(s, d);
}

TEST_CASE("strip and cylinder construction")
{
    Surface s = build_construction(1.0, false).surface;
    DelaunayDecomposition d = delaunay_decomposition(s);
    REQUIRE(d.segments.size() == 1);
    CHECK(d.segments[0].length == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d.segments[0].record_a == d.segments[0].record_b);
    CHECK(count_type(d, ComponentType::Swath) == 1);
    CHECK(count_type(d, ComponentType::TranslationSemiInfinite) == 1);
    CHECK(d.components.size() == 2);
    CHECK(d.t == 0);
    CHECK(d.beta == 2);
    CHECK(d.g == 0);
    CHECK(d.n == 3);
    check_decomposition(s, d);
}

TEST_CASE("exterior types across constructions")
{
    struct Case {
        cx res;
        bool centered;
        ComponentType exterior;
    };
    for (const Case& c : {Case{0.5, false, ComponentType::AntiConical}, Case{cx(1.0, 0.3), false, ComponentType::ReebSemiInfinite},
                          Case{2.0, false, ComponentType::TranslationSemiInfinite},
                          Case{cx(0.3, 0.0), true, ComponentType::AntiConical}}) {
        Surface s = build_construction(c.res, c.centered).surface;
        DelaunayDecomposition d = delaunay_decomposition(s);
        CHECK(count_type(d, c.exterior) == 1);
        CHECK(count_type(d, ComponentType::Swath) == 1);
        check_decomposition(s, d);
    }
}

TEST_CASE("seed in a Reeb end")
{
    Surface s = build_construction(cx(1.0, 0.3), false).surface;
    int c = -1;
    for (size_t i = 0; i < s.pieces.size(); ++i)
        if (s.pieces[i].id.rfind("C", 0) == 0 && s.pieces[i].depth(cx(-40.0, 0.2)) > 0.0) c = static_cast<int>(i);
    REQUIRE(c >= 0);
    GrowResult g = grow_max_disk(s, {c, cx(-40.0, 0.2)});
    CHECK(g.outcome == DiskOutcome::HalfPlaneRegime);
}

TEST_CASE("skew cone with a mark")
{
    Surface s = build_skew_cone(2.0, 1.0);
    s.marks.push_back({0, cx(0.5, 0.1)});
    finalize(s);
    DelaunayDecomposition d = delaunay_decomposition(s);
    CHECK(d.segments.size() == 2);
    CHECK(count_type(d, ComponentType::AntiConical) == 1);
    CHECK(count_type(d, ComponentType::Polygon) == 1);
    check_decomposition(s, d);
}

TEST_CASE("pivot budget")
{
    Surface s = build_flat_torus(1.0, cx(0.2, 1.1), {0.0, cx(0.4, 0.3), cx(0.7, 0.6)});
    DelaunayOptions opt;
    opt.max_pivots = 1;
    CHECK_THROWS_WITH_AS(delaunay_segments(s, opt), doctest::Contains("budget"), Error);
    setenv("AFFSURF_BUDGET_PIVOTS", "7", 1);
    CHECK(delaunay_options_from_env().max_pivots == 7);
    unsetenv("AFFSURF_BUDGET_PIVOTS");
    CHECK(delaunay_options_from_env().max_pivots == DelaunayOptions{}.max_pivots);
}
