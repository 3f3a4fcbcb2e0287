#include <cmath>
#include <limits>

#include "affsurf/builders.hpp"
#include "affsurf/doublepole.hpp"
#include "affsurf/graft.hpp"

namespace affsurf {

namespace {

void set_centered(Surface& s, bool centered)
{
    for (auto& h : s.hints)
        if (h.order == 2) h.centered = centered;
    finalize(s);
}

int focus_piece(const Surface& s) { return s.piece_index("C"); }

}  // namespace

Surface build_strip_cylinder(double h, bool midpoint_mark)
{
    if (!(h > 0.0)) throw Error("InvalidArgument", "strip height must be positive");
    Surface s;
    s.name = "strip-cylinder";
    HalfPlane sl = halfplane(0.0, 1.0);
    sl.breaks = {cx(0.0, h / 4.0), cx(0.0, h / 2.0)};
    s.pieces.push_back(make_piece("S", PieceKind::Flat, {sl, halfplane(0.0, kI), halfplane(cx(0.0, h), -kI)}));
    HalfPlane cr = halfplane(0.0, -1.0);
    cr.breaks = {cx(0.0, h / 4.0), cx(0.0, 3.0 * h / 4.0)};
    s.pieces.push_back(make_piece("C", PieceKind::Flat, {cr, halfplane(0.0, kI), halfplane(cx(0.0, h), -kI)}));
    s.pieces.push_back(make_piece("U", PieceKind::Log, {halfplane(0.0, kI)}));
    s.pieces.push_back(make_piece("D", PieceKind::Log, {halfplane(0.0, -kI)}));
    const int S = 0, C = 1, U = 2, D = 3;
    add_pairing(s, S, 2, U, 0, translation(cx(0.0, -h)), {{cx(1.0, h), 0.0}});
    add_pairing(s, S, 1, D, 0, AffMap{}, {{cx(1.0, 0.0), 0.0}});
    add_pairing(s, C, 1, C, 2, translation(cx(0.0, h)));
    // the right edge of C runs upward, the left edge of S downward
    add_pairing(s, C, 0, S, 0, translation(cx(0.0, h / 4.0)), {}, 0, 1);
    add_pairing(s, C, 0, S, 0, translation(cx(0.0, h / 4.0)), {}, 1, 0);
    add_pairing(s, C, 0, S, 0, translation(cx(0.0, -3.0 * h / 4.0)), {}, 2, 2);
    if (midpoint_mark) s.marks.push_back({S, cx(0.0, h / 2.0)});
    CycleHint hint;
    hint.piece = U;
    hint.order = 2;
    hint.centered = false;
    hint.label = "p";
    s.hints.push_back(hint);
    finalize(s);
    return s;
}

Construction build_construction(cx res, bool centered, int max_fuchsian)
{
    const double eps = 1e-9;
    const bool integral = std::abs(res.imag()) <= eps && std::abs(res.real() - std::round(res.real())) <= eps;
    const bool from_two = integral && std::round(res.real()) >= 2.0;
    int need = min_fuchsian_count(res, centered);
    if (max_fuchsian >= 0 && max_fuchsian < need)
        throw Error("UnrealizableCase", "the obstruction needs more Fuchsian points");
    Construction out;
    out.roster.push_back({2, res});
    GraftOptions focus_start;
    focus_start.any_start = true;
    const double h = 1.0;
    const cx focus(0.0, 3.0 * h / 4.0);
    const cx mid(0.0, h / 2.0);

    if (centered && integral && std::round(res.real()) == 2.0) {
        out.recipe = "exp-affine-plane";
        out.surface = build_exp_affine_plane();
        return out;
    }
    if ((centered && from_two) || (!centered && !from_two && res.real() > 1.0 + eps)) {
        // skew cone with a Fuchsian tip, then an infinite graft from a regular point
        cx tip = 2.0 - res;
        double alpha = kTwoPi * (1.0 - tip.real());
        double s_factor = std::exp(kTwoPi * tip.imag());
        Surface cone = build_skew_cone(s_factor, alpha);
        double beta = alpha / std::max(1, static_cast<int>(std::ceil(alpha / (kPi / 2.0) - 1e-12)));
        cx dir = std::exp(kI * (beta / 2.0));
        cone.marks.push_back({0, dir});
        finalize(cone);
        out.surface = graft_sector(cone, {0, dir, dir}, std::numeric_limits<double>::infinity());
        set_centered(out.surface, centered);
        out.surface.name = "construction";
        out.recipe = "skew-cone-graft";
        out.roster.push_back({1, tip});
        return out;
    }
    Surface base = build_strip_cylinder(h, !(!centered && !from_two));
    if (!centered && !from_two) {
        // Re res <= 1: the cylinder end takes residue 2 - res
        double theta = kTwoPi * (1.0 - res.real());
        double s_factor = std::exp(kTwoPi * res.imag());
        out.recipe = "strip-cylinder";
        if (std::abs(theta) > eps || std::abs(s_factor - 1.0) > eps) {
            if (theta < -eps) throw Error("InvalidArgument", "residue out of range for this recipe");
            base = graft_sector(base, {focus_piece(base), focus, -1.0}, std::max(theta, 0.0), s_factor, focus_start);
            out.recipe = "strip-cylinder-graft";
        }
        set_centered(base, false);
        base.name = "construction";
        out.surface = std::move(base);
        out.roster.push_back({1, 2.0 - res});
        return out;
    }
    if (!centered) {
        // res in {2, 3, ...}: a cone at the midpoint takes 1 - res
        double theta = kTwoPi * (res.real() - 1.0);
        base = graft_sector(base, {base.piece_index("S"), mid, 1.0}, theta);
        set_centered(base, false);
        base.name = "construction";
        out.surface = std::move(base);
        out.recipe = "strip-cylinder-midpoint";
        out.roster.push_back({1, 1.0 - res});
        out.roster.push_back({1, 1.0});
        return out;
    }
    // centered, res outside {2, 3, ...}
    int k = std::max(1, static_cast<int>(std::ceil(res.real() - 0.5 - eps)));
    base = graft_sector(base, {base.piece_index("S"), mid, 1.0}, kTwoPi * k - kPi);
    double a = k + 0.5 - res.real();
    double s_factor = std::exp(kTwoPi * res.imag());
    if (a > eps || std::abs(s_factor - 1.0) > eps)
        base = graft_sector(base, {focus_piece(base), focus, -1.0}, kTwoPi * std::max(a, 0.0), s_factor, focus_start);
    set_centered(base, true);
    base.name = "construction";
    out.surface = std::move(base);
    out.recipe = "strip-cylinder-centered";
    out.roster.push_back({1, 0.5 - k});
    out.roster.push_back({1, 1.5 + k - res});
    return out;
}

}  // namespace affsurf
