#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "affsurf/doublepole.hpp"
#include "affsurf/graft.hpp"
#include "prop.hpp"

using namespace affsurf;

namespace {

bool near(cx a, cx b, double eps = 1e-9) { return std::abs(a - b) <= eps * std::max(1.0, std::abs(b)); }

// Every roster entry matched by a distinct record of the same order and residue.
bool roster_matches(const Surface& s, const std::vector<RosterEntry>& roster)
{
    std::vector<VertexResidue> vr = vertex_residues(s);
    std::vector<bool> used(vr.size(), false);
    int singular = 0;
    for (const auto& v : vr)
        if (v.order != 0) ++singular;
    if (singular != static_cast<int>(roster.size())) return false;
    for (const auto& e : roster) {
        bool found = false;
        for (size_t k = 0; k < vr.size() && !found; ++k)
            if (!used[k] && std::max(vr[k].order, 1) == e.order && near(vr[k].residue, e.residue)) used[k] = found = true;
        if (!found) return false;
    }
    return true;
}

const SingularityRecord* double_pole(const Surface& s)
{
    for (const auto& r : s.singularities)
        if (r.order == 2) return &r;
    return nullptr;
}

void check_construction(cx res, bool centered)
{
    CAPTURE(res);
    CAPTURE(centered);
    Construction c = build_construction(res, centered);
    ValidationReport rep = validate(c.surface);
    CHECK(rep.ok);
    CHECK(rep.genus == 0);
    CHECK(near(residue_sum(c.surface), 2.0));
    CHECK(roster_matches(c.surface, c.roster));
    REQUIRE(!c.roster.empty());
    CHECK(c.roster[0].order == 2);
    CHECK(near(c.roster[0].residue, res));
    CHECK(static_cast<int>(c.roster.size()) - 1 == min_fuchsian_count(res, centered));
    const SingularityRecord* p = double_pole(c.surface);
    REQUIRE(p != nullptr);
    CHECK(p->centered.value_or(!centered) == centered);
}

}  // namespace

TEST_CASE("strip and cylinder surface")
{
    Surface s = build_strip_cylinder();
    ValidationReport rep = validate(s);
    CHECK(rep.ok);
    CHECK(rep.n == 3);
    CHECK(rep.genus == 0);
    const SingularityRecord* p = double_pole(s);
    REQUIRE(p != nullptr);
    CHECK(near(p->residue, 1.0));
    CHECK(near(residue_sum(s), 2.0));

    Surface m = build_strip_cylinder(2.0, true);
    CHECK(validate(m).ok);
    CHECK(m.marks.size() == 1);
    CHECK_THROWS_AS(build_strip_cylinder(0.0), Error);
}

TEST_CASE("construction examples")
{
    Construction e = build_construction(2.0, true);
    CHECK(e.recipe == "exp-affine-plane");
    CHECK(e.roster.size() == 1);
    check_construction(2.0, true);

    Construction a = build_construction(cx(0.25, -0.5), false);
    REQUIRE(a.roster.size() == 2);
    CHECK(near(a.roster[1].residue, cx(1.75, 0.5)));
    check_construction(cx(0.25, -0.5), false);

    Construction b = build_construction(4.0, false);
    REQUIRE(b.roster.size() == 3);
    CHECK(near(b.roster[1].residue, -3.0));
    CHECK(near(b.roster[2].residue, 1.0));
    check_construction(4.0, false);
}

TEST_CASE("every table row")
{
    for (cx res : {cx(1.0, 0.0), cx(0.5, 0.0), cx(1.0, 0.3), cx(-1.2, 0.7), cx(2.0, 0.0), cx(3.0, 0.0), cx(1.7, 0.2),
                   cx(2.5, -1.0), cx(0.3, 0.0), cx(5.0, 0.0)})
        for (bool centered : {false, true}) check_construction(res, centered);
}

TEST_CASE("random residues round-trip")
{
    prop::for_all(16, 6401, [](prop::Gen& g, int i) {
        cx res(g.uniform(-1.5, 3.5), i % 3 == 0 ? 0.0 : g.uniform(-1.0, 1.0));
        check_construction(res, i % 2 == 0);
    });
}

TEST_CASE("too few Fuchsian points")
{
    CHECK_THROWS_WITH_AS(build_construction(5.0, false, 1), doctest::Contains("Fuchsian"), Error);
    CHECK_THROWS_AS(build_construction(cx(1.5, 1.0), true, 1), Error);
    CHECK_NOTHROW(build_construction(cx(1.5, 1.0), true, 2));
    CHECK_NOTHROW(build_construction(2.0, true, 0));
    try {
        build_construction(3.0, false, 0);
        FAIL("expected UnrealizableCase");
    } catch (const Error& e) {
        CHECK(e.kind() == "UnrealizableCase");
    }
}

TEST_CASE("graft from a focus")
{
    Surface s = build_strip_cylinder();
    int c = s.piece_index("C");
    Slit slit{c, cx(0.0, 0.75), -1.0};
    CHECK_THROWS_AS(graft_sector(s, slit, kPi), Error);
    GraftOptions opt;
    opt.any_start = true;
    Surface t = graft_sector(s, slit, kPi, 1.0, opt);
    CHECK(validate(t).ok);
    CHECK(near(double_pole(t)->residue, 0.5));

    // zero angle: the banks are reglued by the dilation
    Surface r = graft_sector(s, slit, 0.0, 3.0, opt);
    CHECK(validate(r).ok);
    cx shift = std::log(3.0) / (kTwoPi * kI);
    CHECK(near(double_pole(r)->residue, 1.0 - shift));
    CHECK(near(residue_sum(r), 2.0));
    CHECK_THROWS_AS(graft_sector(s, slit, 0.0, 1.0, opt), Error);
}
