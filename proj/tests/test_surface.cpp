#include "doctest.h"

#include <iomanip>
#include <sstream>

#include "affsurf/builders.hpp"
#include "affsurf/graft.hpp"
#include "affsurf/io.hpp"
#include "affsurf/irregular.hpp"
#include "oracles.hpp"
#include "prop.hpp"

using namespace affsurf;

namespace {

bool has_issue(const ValidationReport& r, const std::string& kind)
{
    for (const auto& i : r.issues)
        if (i.kind == kind) return true;
    return false;
}

cx tip_residue(double s, double alpha) { return 1.0 - (std::log(s) + kI * alpha) / (kTwoPi * kI); }

int count_order(const Surface& s, int order)
{
    int k = 0;
    for (const auto& r : s.singularities) k += r.order == order;
    return k;
}

}  // namespace

TEST_CASE("edges come in boundary order from the smallest normal")
{
    Piece p;
    p.id = "sq";
    p.halfplanes = {halfplane(cx(0.0, 1.0), -kI), halfplane(0.0, 1.0), halfplane(1.0, -1.0), halfplane(0.0, kI)};
    derive_edges(p);
    REQUIRE(p.edges.size() == 4);
    CHECK(std::abs(p.halfplanes[p.edges[0].halfplane].n - cx(-1.0, 0.0)) < 1e-15);
    CHECK(std::abs(p.halfplanes[p.edges[1].halfplane].n - cx(0.0, -1.0)) < 1e-15);
    CHECK(std::abs(p.halfplanes[p.edges[2].halfplane].n - cx(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(p.halfplanes[p.edges[3].halfplane].n - cx(0.0, 1.0)) < 1e-15);
    for (size_t k = 0; k < 4; ++k) {
        const Edge& a = p.edges[k];
        const Edge& b = p.edges[(k + 1) % 4];
        CHECK(std::abs(a.at(a.t1) - b.at(b.t0)) < 1e-14);
    }
}

TEST_CASE("redundant and empty half-planes")
{
    Piece p;
    p.id = "r";
    p.halfplanes = {halfplane(0.0, kI), halfplane(cx(0.0, -1.0), kI)};
    derive_edges(p);
    CHECK(p.edges.size() == 1);
    Piece q;
    q.id = "e";
    q.halfplanes = {halfplane(0.0, kI), halfplane(cx(0.0, -1.0), -kI)};
    CHECK_THROWS_AS(derive_edges(q), Error);
}

TEST_CASE("flat torus")
{
    Surface t = build_flat_torus(1.0, kI);
    auto rep = validate(t);
    CHECK(rep.ok);
    CHECK(rep.genus == 1);
    CHECK(rep.n == 0);
    CHECK(std::abs(rep.residue_sum) < 1e-12);

    Surface m = build_flat_torus(1.0, kI, {cx(0.3, 0.4)});
    CHECK(validate(m).ok);
    CHECK(m.n == 1);
    CHECK(2 * m.genus + m.n == 3);

    Surface hex = build_flat_torus(1.0, std::exp(kI * kPi / 3.0));
    CHECK(validate(hex).ok);
    CHECK(hex.genus == 1);

    Surface at_vertex = build_flat_torus(1.0, kI, {cx(0.0, 0.0)});
    CHECK(validate(at_vertex).ok);
    REQUIRE(at_vertex.singularities.size() == 1);
    CHECK(at_vertex.singularities[0].cycle >= 0);
    CHECK(at_vertex.singularities[0].order == 0);

    CHECK_THROWS_AS(build_flat_torus(1.0, 2.0), Error);
}

TEST_CASE("cushion")
{
    Surface c = build_cushion(1.0);
    auto rep = validate(c);
    CHECK(rep.ok);
    CHECK(rep.genus == 0);
    auto res = vertex_residues(c);
    REQUIRE(res.size() == 4);
    for (const auto& r : res) {
        CHECK(std::abs(r.residue - 0.5) < 1e-12);
        CHECK(std::abs(r.cone_angle - kPi) < 1e-12);
    }
    CHECK(std::abs(rep.residue_sum - 2.0) < 1e-12);
    auto angles = oracle::flat_vertex_angles(c);
    REQUIRE(angles.size() == 4);
    for (double a : angles) CHECK(std::abs(a - kPi) < 1e-12);
}

TEST_CASE("skew cone residues")
{
    Surface c = build_skew_cone(3.0, kPi / 6.0);
    CHECK(validate(c).ok);
    REQUIRE(c.singularities.size() == 2);
    cx tip = c.singularities[0].residue, inf = c.singularities[1].residue;
    if (c.cycles[c.singularities[0].cycle].finite == false) std::swap(tip, inf);
    CHECK(std::abs(tip - cx(0.916667, 0.174850)) < 1e-6);
    CHECK(std::abs(tip - tip_residue(3.0, kPi / 6.0)) < 1e-12);
    CHECK(std::abs(inf - (2.0 - tip_residue(3.0, kPi / 6.0))) < 1e-12);

    Surface plane = build_skew_cone(1.0, kTwoPi);
    CHECK(validate(plane).ok);
    CHECK(count_order(plane, 0) == 1);
    CHECK(std::abs(residue_sum(plane) - 2.0) < 1e-12);

    Surface big = build_skew_cone(1.0, 4.0 * kPi);
    CHECK(validate(big).ok);
    bool found = false;
    for (const auto& r : big.singularities) found = found || std::abs(r.residue + 1.0) < 1e-12;
    CHECK(found);
}

TEST_CASE("skew cone residues on random parameters")
{
    prop::for_all(40, 7, [](prop::Gen& g, int) {
        double s = std::exp(g.uniform(-2.0, 2.0));
        double alpha = g.uniform(0.05, 7.0 * kPi);
        Surface c = build_skew_cone(s, alpha);
        auto rep = validate(c);
        CHECK(rep.ok);
        CHECK(std::abs(rep.residue_sum - 2.0) < 1e-9);
        for (const auto& r : c.singularities) {
            cx want = c.cycles[r.cycle].finite ? tip_residue(s, alpha) : 2.0 - tip_residue(s, alpha);
            CHECK(std::abs(r.residue - want) < 1e-10);
        }
        for (const auto& cyc : c.cycles)
            if (cyc.finite) CHECK(std::abs(cyc.holonomy(cyc.developed_vertex) - cyc.developed_vertex) < 1e-12);
    });
}

TEST_CASE("truncated skew cone with a dilation has mismatched radii")
{
    Surface bad = build_skew_cone(3.0, kPi / 6.0, Truncation{0.5, 2.0});
    CHECK(has_issue(validate(bad), "MismatchedEdge"));
    Surface good = build_skew_cone(1.0, kPi / 6.0, Truncation{0.5, 2.0});
    auto rep = validate(good);
    CHECK(rep.ok);
    CHECK(rep.has_boundary);
}

TEST_CASE("exp-affine plane")
{
    Surface e = build_exp_affine_plane();
    auto rep = validate(e);
    CHECK(rep.ok);
    CHECK(rep.n == 2);
    REQUIRE(e.singularities.size() == 1);
    CHECK(e.singularities[0].order == 2);
    CHECK(std::abs(e.singularities[0].residue - 2.0) < 1e-12);
    CHECK(e.singularities[0].centered.value_or(false));
}

TEST_CASE("cylinders and tori")
{
    Surface c = build_translation_cylinder();
    CHECK(validate(c).ok);
    REQUIRE(c.singularities.size() == 2);
    for (const auto& r : c.singularities) CHECK(std::abs(r.residue - 1.0) < 1e-12);

    Surface a = build_affine_torus(kTwoPi * kI * 0.3, std::log(2.0));
    auto rep = validate(a);
    CHECK(rep.ok);
    CHECK(rep.genus == 1);
    CHECK(a.singularities.empty());

    Surface r = build_reeb_cylinder(3.0);
    CHECK(validate(r).ok);
    REQUIRE(r.singularities.size() == 2);
    double l = std::log(3.0) / kTwoPi;
    double im0 = r.singularities[0].residue.imag(), im1 = r.singularities[1].residue.imag();
    CHECK(std::abs(std::abs(im0) - l) < 1e-12);
    CHECK(std::abs(im0 + im1) < 1e-12);
    for (const auto& s : r.singularities) CHECK(std::abs(s.residue.real() - 1.0) < 1e-12);

    Surface p = build_plane({cx(0.0, 0.0), cx(1.0, 0.5)});
    CHECK(validate(p).ok);
    CHECK(p.n == 3);
}

TEST_CASE("random flat tori with marks validate")
{
    prop::for_all(30, 11, [](prop::Gen& g, int) {
        cx u = g.nonzero(0.5, 2.0);
        cx v = u * std::polar(g.uniform(0.5, 2.0), g.uniform(0.3, kPi - 0.3));
        std::vector<cx> marks;
        int k = g.integer(0, 5);
        for (int i = 0; i < k; ++i) marks.push_back(g.complex_box(3.0));
        Surface t = build_flat_torus(u, v, marks);
        auto rep = validate(t);
        CHECK(rep.ok);
        CHECK(rep.genus == 1);
        CHECK(rep.n == k);
    });
}

TEST_CASE("pairing maps are inverse to each other")
{
    Surface c = build_cushion(1.3);
    for (size_t k = 0; k < c.pairings.size(); ++k) {
        AffMap f = pairing_map(c, static_cast<int>(k), 1);
        AffMap g = pairing_map(c, static_cast<int>(k), 2);
        CHECK(near(compose(g, f), AffMap{}, 1e-10));
    }
}

TEST_CASE("file round trip reproduces reports")
{
    std::vector<Surface> all = {build_flat_torus(1.0, cx(0.3, 1.1), {cx(0.2, 0.3)}),
                                build_skew_cone(2.0, kPi / 3),
                                build_skew_cone(2.0, kPi / 3, Truncation{0.5, 2.0}),
                                build_exp_affine_plane(),
                                build_translation_cylinder(2.0, 1.5),
                                build_affine_torus(kTwoPi * kI * 0.3, std::log(2.0)),
                                build_cushion(1.0),
                                build_plane({0.0}),
                                build_reeb_cylinder(2.0),
                                graft_sector(build_skew_cone(3.0, kPi / 6), {0, 0.0, std::polar(1.0, kPi / 12)}, kInfiniteAngle),
                                model_to_surface(build_canonical_model({3, cx(1.2, 0.1), {0.5, cx(0.0, 1.0)}, 0.3}))};
    for (const auto& s : all) {
        INFO(s.name);
        json doc = surface_to_json(s);
        Surface back = surface_from_json(json::parse(doc.dump()));
        CHECK(surface_to_json(back).dump() == doc.dump());
        CHECK(report_to_json(validate(back)).dump() == report_to_json(validate(s)).dump());
        CHECK(records_to_json(back).dump() == records_to_json(s).dump());
    }
}

TEST_CASE("file reader accepts decimal strings and rejects malformed documents")
{
    json doc = surface_to_json(build_flat_torus(1.0, kI));
    for (auto& p : doc["pieces"])
        for (auto& h : p["halfplanes"]) {
            std::ostringstream re, im;
            re << std::setprecision(17) << h["p"][0].get<double>();
            im << std::scientific << std::setprecision(17) << h["p"][1].get<double>();
            h["p"] = json::array({re.str(), im.str()});
        }
    Surface t = surface_from_json(doc);
    CHECK(t.pieces.size() == 1);
    CHECK(validate(t).ok);
    CHECK(std::abs(t.pieces[0].halfplanes[2].p - cx(1.0, 1.0)) < 1e-15);
    CHECK_THROWS_AS(surface_from_json(json{{"version", "affsurf-v0"}}), Error);
    json bad = surface_to_json(build_flat_torus(1.0, kI));
    bad["pairings"][0]["s1"]["edge"] = 7;
    CHECK_THROWS_AS(surface_from_json(bad), Error);
}
