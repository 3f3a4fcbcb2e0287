#include "doctest.h"

#include "affsurf/builders.hpp"
#include "affsurf/geodesics.hpp"
#include "prop.hpp"

using namespace affsurf;

namespace {

int record_at_corner(const Surface& s, int piece, cx z)
{
    for (const auto& a : s.apexes[piece])
        if (!a.focus && std::abs(a.z - z) < 1e-12) return a.record;
    return -1;
}

}  // namespace

TEST_CASE("rational geodesic on the square torus closes up")
{
    Surface t = build_flat_torus(1.0, kI);
    TraceResult r = trace(t, {0, cx(0.5, 0.5), cx(1.0, 1.0), 0.0});
    CHECK(r.termination == Termination::ClosedUp);
    CHECK(std::abs(r.holonomy_factor - 1.0) < 1e-12);
    CHECK(std::abs(r.period - std::sqrt(2.0)) < 1e-9);

    TraceResult r2 = trace(t, {0, cx(0.3, 0.1), cx(2.0, 1.0), 0.0});
    CHECK(r2.termination == Termination::ClosedUp);
    CHECK(std::abs(r2.period - std::sqrt(5.0)) < 1e-9);
}

TEST_CASE("irrational geodesic runs into the crossing cap")
{
    Surface t = build_flat_torus(1.0, kI);
    TraceOptions o;
    o.max_crossings = 500;
    TraceResult r = trace(t, {0, cx(0.5, 0.5), cx(1.0, std::sqrt(2.0)), 0.0}, o);
    CHECK(r.termination == Termination::CrossingsCapped);
    CHECK(r.crossings == 500);
}

TEST_CASE("exp-affine plane: horizontal geodesic reaches the focus at t = 1")
{
    Surface e = build_exp_affine_plane();
    TraceResult r = trace(e, {0, cx(0.0, 0.0), cx(-1.0, 0.0), 0.0});
    CHECK(r.termination == Termination::HitApex);
    CHECK(r.apex_focus);
    CHECK(std::abs(r.time - 1.0) < 1e-12);
    CHECK(r.apex_record == 0);

    TraceResult f = trace(e, {0, cx(0.0, 0.0), cx(1.0, 0.0), 0.0});
    CHECK(f.termination == Termination::Escaped);
}

TEST_CASE("exp-affine plane: right half-planes trap geodesics")
{
    Surface e = build_exp_affine_plane();
    prop::for_all(50, 3, [&](prop::Gen& g, int) {
        double c = g.uniform(-2.0, 2.0);
        cx z(c, g.uniform(-10.0, 10.0));
        // entering: developed radial speed positive at the boundary
        cx v = std::polar(1.0, g.uniform(-kPi / 2 + 1e-3, kPi / 2 - 1e-3));
        TraceOptions o;
        o.t_max = std::exp(g.uniform(-2.0, 10.0));
        TraceResult r = trace(e, {0, z, v, 0.0}, o);
        for (const auto& seg : r.path)
            for (cx w : seg.points) CHECK(w.real() >= c - 1e-9);
    });
}

TEST_CASE("geodesic into a cushion corner hits it")
{
    Surface c = build_cushion(1.0);
    TraceResult r = trace(c, {0, cx(0.5, 0.5), cx(0.5, 0.5), 0.0});
    CHECK(r.termination == Termination::HitApex);
    CHECK(r.apex_record == record_at_corner(c, 0, cx(1.0, 1.0)));
    CHECK(std::abs(r.time - 1.0) < 1e-12);
}

TEST_CASE("time reversal retraces the path")
{
    Surface c = build_cushion(1.0);
    prop::for_all(30, 5, [&](prop::Gen& g, int) {
        GeodesicState st{g.integer(0, 1), cx(g.uniform(0.05, 0.95), g.uniform(0.05, 0.95)), g.nonzero(0.5, 2.0), 0.0};
        TraceOptions o;
        o.t_max = g.uniform(1.0, 8.0);
        o.detect_closing = false;
        TraceResult fwd = trace(c, st, o);
        if (fwd.termination != Termination::TimedOut) return;
        GeodesicState back = fwd.final_state;
        back.v = -back.v;
        back.t = 0.0;
        TraceResult rev = trace(c, back, o);
        REQUIRE(rev.termination == Termination::TimedOut);
        CHECK(rev.final_state.piece == st.piece);
        CHECK(std::abs(rev.final_state.z - st.z) < 1e-9);
        CHECK(std::abs(rev.final_state.v + st.v) < 1e-9);
    });
}

TEST_CASE("holonomy of loops")
{
    Surface c = build_cushion(1.0);
    // contractible loop inside the front square
    Loop tri{{0, cx(0.3, 0.3), cx(0.2, 0.0), 0.0}, {1.0, std::polar(1.0, 2 * kPi / 3), std::polar(1.0, 2 * kPi / 3)}};
    Holonomy h = holonomy(c, tri);
    CHECK(near(h.affine, AffMap{}, 1e-12));
    CHECK(std::abs(turning_number(c, tri) - 1.0) < 1e-12);

    // around the corner (0,0) of the front: left into the back square, then down through the bottom
    Loop around{{0, cx(0.2, 0.1), cx(-0.4, 0.0), 0.0}, {1.0, cx(0.0, 0.5)}};
    Holonomy ha = holonomy(c, around);
    CHECK(std::abs(ha.linear - cx(-1.0, 0.0)) < 1e-12);
    CHECK(std::abs(turning_number(c, around) - 0.5) < 1e-12);
}

TEST_CASE("loop around two cushion corners has turning number 0")
{
    Surface c = build_cushion(1.0);
    Loop loop{{0, cx(0.5, 0.2), cx(-0.7, 0.0), 0.0},
              {1.0, cx(0.0, 0.4 / 0.7), cx(0.0, -2.5), cx(0.0, -0.4), cx(0.0, 0.75)}};
    CHECK(std::abs(turning_number(c, loop)) < 1e-12);
    CHECK(std::abs(holonomy(c, loop).linear - 1.0) < 1e-12);
}

TEST_CASE("holonomy and turning around a corner do not depend on the loop")
{
    Surface c = build_cushion(1.0);
    prop::for_all(40, 13, [&](prop::Gen& g, int) {
        double a = g.uniform(0.05, 0.9), b = g.uniform(0.05, 0.9);
        Loop loop{{0, cx(a, b), cx(-2.0 * a, 0.0), 0.0}, {1.0, cx(0.0, b / a)}};
        CHECK(std::abs(holonomy(c, loop).linear + 1.0) < 1e-9);
        CHECK(std::abs(turning_number(c, loop) - 0.5) < 1e-9);
    });
}

TEST_CASE("loop around a skew-cone tip")
{
    double s = 3.0, alpha = kPi / 6.0;
    Surface cone = build_skew_cone(s, alpha);
    cx mu = std::polar(s, alpha);
    cx p = std::polar(1.0, alpha / 2.0);
    cx a = 0.5 * p;
    cx v0 = mu * a - p;
    Loop loop{{0, p, v0, 0.0}, {1.0, (p - a) / (v0 / mu)}};
    Holonomy h = holonomy(cone, loop);
    CHECK(std::abs(std::abs(std::log(std::abs(h.linear))) - std::log(s)) < 1e-12);
    CHECK(std::abs(std::abs(std::arg(h.linear)) - alpha) < 1e-12);
    CHECK(std::abs(h.affine(0.0)) < 1e-12);
    CHECK(std::abs(turning_number(cone, loop) - alpha / kTwoPi) < 1e-12);
}

TEST_CASE("turning numbers reject cusps and open loops")
{
    Surface t = build_flat_torus(1.0, kI);
    Loop cusp{{0, cx(0.5, 0.5), cx(0.1, 0.0), 0.0}, {1.0, -1.0}};
    CHECK_THROWS_AS(turning_number(t, cusp), Error);
    Loop open{{0, cx(0.5, 0.5), cx(0.1, 0.0), 0.0}, {1.0, kI}};
    CHECK_THROWS_AS(holonomy(t, open), Error);
}

TEST_CASE("cylinders")
{
    Surface t = build_flat_torus(1.0, kI);
    GeodesicState st{0, cx(0.5, 0.5), cx(1.0, 0.0), 0.0};
    TraceResult r = trace(t, st);
    REQUIRE(r.termination == Termination::ClosedUp);
    Cylinder c = extend_cylinder(t, st, r);
    CHECK(c.kind == CylinderKind::Translation);
    CHECK(c.closes_on_itself);
    CHECK(std::abs(c.extent - 1.0) < 1e-9);

    Surface cu = build_cushion(1.0);
    GeodesicState sc{0, cx(0.5, 0.5), cx(1.0, 0.0), 0.0};
    TraceResult rc = trace(cu, sc);
    REQUIRE(rc.termination == Termination::ClosedUp);
    CHECK(std::abs(rc.period - 2.0) < 1e-9);
    Cylinder cc = extend_cylinder(cu, sc, rc);
    CHECK_FALSE(cc.closes_on_itself);
    CHECK(std::abs(cc.extent_plus - 0.5) < 1e-8);
    CHECK(std::abs(cc.extent_minus - 0.5) < 1e-8);
    CHECK(cc.boundary_records.size() == 2);

    Surface a = build_affine_torus(kTwoPi * kI * 0.3, std::log(2.0));
    GeodesicState sa{0, cx(0.3, 0.5), cx(1.0, 0.0), 0.0};
    TraceResult ra = trace(a, sa);
    REQUIRE(ra.termination == Termination::ClosedUp);
    CHECK(std::abs(ra.holonomy_factor - 1.0) > 0.1);
    Cylinder ca = extend_cylinder(a, sa, ra);
    CHECK(ca.kind == CylinderKind::Dilation);
    CHECK(std::abs(ca.factor - 1.0) > 0.1);
}
