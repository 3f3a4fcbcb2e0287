#include "affsurf/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace affsurf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(cx a, cx b) { return a.real() * b.real() + a.imag() * b.imag(); }

int prev_side(const Piece& p, int k)
{
    int S = static_cast<int>(p.sides.size());
    return (k - 1 + S) % S;
}

int next_side(const Piece& p, int k)
{
    int S = static_cast<int>(p.sides.size());
    return (k + 1) % S;
}

double side_len(const Piece& p, int k) { return p.sides[k].t1 - p.sides[k].t0; }

double wrap_positive(double a)
{
    if (a < -1e-9) a += kTwoPi;
    return std::max(a, 0.0);
}

// Branch-consistent log of D(dev_A(z)), pinned by the anchor pair (za, zb).
cx lift_log(const Piece& a, const AffMap& d, cx za, cx zb, cx z)
{
    if (a.kind == PieceKind::Log && d.b == cx(0.0, 0.0)) return zb + (z - za);
    if (a.kind == PieceKind::Flat) return zb + std::log(d(z) / d(za));
    cx w = zb;
    cx prev = d(std::exp(za));
    int steps = 1 + static_cast<int>(std::abs(z - za) / 0.25);
    for (int i = 1; i <= steps; ++i) {
        cx zi = za + (z - za) * (static_cast<double>(i) / steps);
        cx cur = d(std::exp(zi));
        w += std::log(cur / prev);
        prev = cur;
    }
    return w;
}

cx far_head(const Piece& p, int k, double far)
{
    const SideGeom& s = p.sides[k];
    double t = (s.tail_finite() ? s.t0 : 0.0) + far;
    return p.edges[s.edge].at(t);
}

cx far_tail(const Piece& p, int k, double far)
{
    const SideGeom& s = p.sides[k];
    double t = (s.head_finite() ? s.t1 : 0.0) - far;
    return p.edges[s.edge].at(t);
}

void add_issue(Surface& s, const std::string& kind, const std::string& detail)
{
    s.build_issues.push_back({kind, detail});
}

}  // namespace

CornerGeom corner_geom(const Piece& p, int side)
{
    CornerGeom g;
    if (side < 0) {
        g.finite = false;
        g.angle = kTwoPi;
        return g;
    }
    const SideGeom& s = p.sides[side];
    g.in_side = prev_side(p, side);
    g.d_out = p.edges[s.edge].dir;
    g.d_in = p.edges[p.sides[g.in_side].edge].dir;
    g.finite = s.tail_finite();
    if (g.finite) {
        g.vertex = p.edges[s.edge].at(s.t0);
        bool breakpoint = p.edges[s.edge].first_side != side;
        g.angle = breakpoint ? kPi : std::arg(-g.d_in / g.d_out);
        if (g.angle <= 0.0) g.angle += kTwoPi;
    } else {
        g.angle = wrap_positive(std::arg(-g.d_out / g.d_in));
    }
    return g;
}

bool end_contains_direction(const Piece& p, int side, cx direction)
{
    if (side < 0) return true;
    CornerGeom g = corner_geom(p, side);
    if (g.finite) return false;
    double a = wrap_positive(std::arg(direction / g.d_in));
    return a <= g.angle + 1e-9;
}

int Surface::piece_index(const std::string& id) const
{
    for (size_t i = 0; i < pieces.size(); ++i)
        if (pieces[i].id == id) return static_cast<int>(i);
    return -1;
}

double Surface::scale() const
{
    double m = 1.0;
    for (const auto& p : pieces) m = std::max(m, p.scale);
    return m;
}

AffMap pairing_map(const Surface& s, int pairing, int which)
{
    const Pairing& pr = s.pairings[pairing];
    return which == 1 ? pr.dev : invert(pr.dev);
}

Placement transfer(const Surface& s, int pairing, int which, cx z, cx v)
{
    const Pairing& pr = s.pairings[pairing];
    int src = which == 1 ? pr.p1 : pr.p2;
    int dst = which == 1 ? pr.p2 : pr.p1;
    AffMap d = pairing_map(s, pairing, which);
    const Piece& a = s.pieces[src];
    const Piece& b = s.pieces[dst];
    cx zeta = a.dev(z);
    cx vz = d.a * a.dev_deriv(z) * v;
    cx img = d(zeta);
    if (b.kind == PieceKind::Flat) return {dst, img, vz};
    if (pr.anchors.empty()) throw Error("MissingAnchor", "log side without a branch anchor");
    cx za = which == 1 ? pr.anchors[0].z1 : pr.anchors[0].z2;
    cx zb = which == 1 ? pr.anchors[0].z2 : pr.anchors[0].z1;
    cx w = lift_log(a, d, za, zb, z);
    return {dst, w, vz / img};
}

void finalize(Surface& s)
{
    s.build_issues.clear();
    for (auto& p : s.pieces) derive_edges(p);

    const int P = static_cast<int>(s.pieces.size());
    s.side_pair.assign(P, {});
    for (int i = 0; i < P; ++i) s.side_pair[i].assign(s.pieces[i].sides.size(), PairRef{});

    for (size_t k = 0; k < s.pairings.size(); ++k) {
        Pairing& pr = s.pairings[k];
        auto check = [&](int piece, int side) {
            if (piece < 0 || piece >= P || side < 0 ||
                side >= static_cast<int>(s.pieces[piece].sides.size()))
                throw Error("InvalidSurface", "pairing " + std::to_string(k) + " refers to a missing side");
        };
        check(pr.p1, pr.s1);
        check(pr.p2, pr.s2);
        if (std::abs(pr.dev.a) <= tol().eps_zero)
            throw Error("DegenerateMap", "pairing " + std::to_string(k) + " has a degenerate map");
        for (int which : {1, 2}) {
            int piece = which == 1 ? pr.p1 : pr.p2;
            int side = which == 1 ? pr.s1 : pr.s2;
            PairRef& ref = s.side_pair[piece][side];
            if (ref.pairing >= 0)
                add_issue(s, "MismatchedEdge",
                          "side " + std::to_string(side) + " of piece " + s.pieces[piece].id +
                              " is paired twice");
            else
                ref = {static_cast<int>(k), which};
        }
        const Piece& a = s.pieces[pr.p1];
        const Piece& b = s.pieces[pr.p2];
        if (pr.anchors.empty() && (a.kind == PieceKind::Log || b.kind == PieceKind::Log)) {
            cx z1 = a.side_point(pr.s1, 0.5);
            cx img = pr.dev(a.dev(z1));
            cx z2 = img;
            if (b.kind == PieceKind::Log) {
                cx base = std::log(img);
                cx target = b.side_point(pr.s2, 0.5);
                double kk = std::round((target.imag() - base.imag()) / kTwoPi);
                z2 = base + cx(0.0, kTwoPi * kk);
            }
            pr.anchors.push_back({z1, z2});
        }
    }

    s.has_boundary = false;
    for (int i = 0; i < P; ++i)
        for (const auto& r : s.side_pair[i])
            if (r.pairing < 0) s.has_boundary = true;

    // vertex cycles
    s.cycles.clear();
    s.corner_cycle.assign(P, {});
    for (int i = 0; i < P; ++i)
        s.corner_cycle[i].assign(std::max<size_t>(1, s.pieces[i].sides.size()), -1);

    auto other = [&](const PairRef& r, int& piece, int& side) {
        const Pairing& pr = s.pairings[r.pairing];
        piece = r.which == 1 ? pr.p2 : pr.p1;
        side = r.which == 1 ? pr.s2 : pr.s1;
    };

    for (int i = 0; i < P; ++i) {
        const Piece& pc = s.pieces[i];
        if (pc.sides.empty()) {
            VertexCycle c;
            c.corners.push_back({i, -1});
            c.finite = false;
            c.omega = -kTwoPi;
            c.residue = 2.0;
            s.corner_cycle[i][0] = static_cast<int>(s.cycles.size());
            s.cycles.push_back(c);
            continue;
        }
        for (int k = 0; k < static_cast<int>(pc.sides.size()); ++k) {
            if (s.corner_cycle[i][k] >= 0) continue;
            int id = static_cast<int>(s.cycles.size());
            VertexCycle c;
            CornerRef cur{i, k};
            bool closed = true;
            while (true) {
                c.corners.push_back(cur);
                s.corner_cycle[cur.piece][cur.side] = id;
                const Piece& cp = s.pieces[cur.piece];
                int in = prev_side(cp, cur.side);
                const PairRef& r = s.side_pair[cur.piece][in];
                if (r.pairing < 0) {
                    closed = false;
                    break;
                }
                CornerRef nx;
                other(r, nx.piece, nx.side);
                if (nx.piece == i && nx.side == k) break;
                if (s.corner_cycle[nx.piece][nx.side] >= 0) {
                    add_issue(s, "OpenVertexCycle", "corner cycle through piece " + cp.id + " does not close");
                    closed = false;
                    break;
                }
                cur = nx;
            }
            if (!closed) {
                CornerRef back{i, k};
                while (true) {
                    const PairRef& r = s.side_pair[back.piece][back.side];
                    if (r.pairing < 0) break;
                    int q, sq;
                    other(r, q, sq);
                    CornerRef pv{q, next_side(s.pieces[q], sq)};
                    if (s.corner_cycle[pv.piece][pv.side] >= 0) break;
                    s.corner_cycle[pv.piece][pv.side] = id;
                    c.corners.insert(c.corners.begin(), pv);
                    back = pv;
                }
            }
            c.closed = closed;
            for (const auto& cr : c.corners)
                if (!s.pieces[cr.piece].sides[cr.side].tail_finite()) c.finite = false;
            s.cycles.push_back(c);
        }
    }

    // turning and holonomy of a small loop around each closed cycle
    for (auto& c : s.cycles) {
        if (!c.closed || c.corners[0].side < 0) continue;
        const int m = static_cast<int>(c.corners.size());
        const Piece& p0 = s.pieces[c.corners[0].piece];
        CornerGeom g0 = corner_geom(p0, c.corners[0].side);
        double far = 10.0 * p0.scale;
        cx start;
        if (g0.finite) {
            double delta = 0.25 * std::min({side_len(p0, c.corners[0].side), side_len(p0, g0.in_side), p0.scale});
            start = g0.vertex + delta * g0.d_out;
        } else {
            start = far_tail(p0, c.corners[0].side, far);
        }
        cx cur = start;
        double omega = 0.0;
        AffMap chain;
        for (int idx = 0; idx < m; ++idx) {
            const Piece& pc = s.pieces[c.corners[idx].piece];
            CornerGeom g = corner_geom(pc, c.corners[idx].side);
            cx q;
            if (g.finite) {
                double delta = std::min(std::abs(cur - g.vertex), 0.5 * side_len(pc, g.in_side));
                q = g.vertex - delta * g.d_in;
                omega += g.angle;
            } else {
                q = far_head(pc, g.in_side, 10.0 * pc.scale);
                omega -= g.angle;
            }
            if (pc.kind == PieceKind::Log) omega += (q - cur).imag();
            const PairRef& r = s.side_pair[c.corners[idx].piece][g.in_side];
            Placement nx = transfer(s, r.pairing, r.which, q);
            chain = compose(pairing_map(s, r.pairing, r.which), chain);
            cur = nx.z;
        }
        if (p0.kind == PieceKind::Log) omega += (start - cur).imag();
        c.omega = omega;
        c.holonomy = invert(chain);
        c.residue = cx(1.0 - omega / kTwoPi, std::log(std::abs(c.holonomy.a)) / kTwoPi);
        if (g0.finite) {
            c.developed_vertex = p0.dev(g0.vertex);
            c.scale = p0.kind == PieceKind::Flat ? p0.scale
                                                 : std::abs(c.developed_vertex) * std::max(1.0, p0.scale);
        }
    }

    // records
    s.singularities.clear();
    auto hint_cycle = [&](const CycleHint& h) -> int {
        if (h.piece < 0 || h.piece >= P) return -1;
        const Piece& pc = s.pieces[h.piece];
        if (pc.sides.empty()) return s.corner_cycle[h.piece][0];
        for (int k = 0; k < static_cast<int>(pc.sides.size()); ++k) {
            CornerGeom g = corner_geom(pc, k);
            if (h.at_infinity && !g.finite && end_contains_direction(pc, k, h.direction))
                return s.corner_cycle[h.piece][k];
            if (!h.at_infinity && g.finite && std::abs(g.vertex - h.point) <= 1e-7 * pc.scale)
                return s.corner_cycle[h.piece][k];
        }
        return -1;
    };
    std::vector<int> hint_of(s.cycles.size(), -1);
    for (size_t h = 0; h < s.hints.size(); ++h) {
        if (s.hints[h].residue) continue;
        int cyc = hint_cycle(s.hints[h]);
        if (cyc < 0)
            add_issue(s, "InvalidHint", "record hint does not match a corner");
        else
            hint_of[cyc] = static_cast<int>(h);
    }

    std::vector<char> hint_used(s.hints.size(), 0);
    for (size_t h = 0; h < s.hints.size(); ++h) {
        const CycleHint& hh = s.hints[h];
        if (!hh.residue || hint_used[h]) continue;
        SingularityRecord rec;
        rec.id = static_cast<int>(s.singularities.size());
        rec.order = hh.order;
        rec.residue = *hh.residue;
        rec.cone_angle = kTwoPi * (1.0 - rec.residue.real());
        rec.dilation = std::exp(kTwoPi * rec.residue.imag());
        rec.centered = hh.centered;
        rec.shifted = hh.shifted;
        rec.label = hh.label;
        rec.family_u = hh.family_u;
        rec.family_b = hh.family_b;
        for (size_t k = h; k < s.hints.size(); ++k) {
            if (!s.hints[k].residue || s.hints[k].label != hh.label) continue;
            hint_used[k] = 1;
            int cyc = hint_cycle(s.hints[k]);
            if (cyc < 0) {
                add_issue(s, "InvalidHint", "record hint does not match a corner");
                continue;
            }
            if (rec.cycle < 0) rec.cycle = cyc;
            s.cycles[cyc].record = rec.id;
        }
        s.singularities.push_back(rec);
    }

    for (size_t ci = 0; ci < s.cycles.size(); ++ci) {
        VertexCycle& c = s.cycles[ci];
        if (!c.closed || c.record >= 0) continue;
        bool singular = !c.finite || std::abs(c.residue) > 1e-9 ||
                        !near(c.holonomy, AffMap{}, 1e-9) || hint_of[ci] >= 0;
        if (!singular) continue;
        SingularityRecord rec;
        rec.id = static_cast<int>(s.singularities.size());
        rec.cycle = static_cast<int>(ci);
        rec.residue = c.residue;
        rec.cone_angle = c.omega;
        rec.dilation = std::abs(c.holonomy.a);
        rec.order = std::abs(c.residue) <= 1e-9 && c.finite ? 0 : 1;
        double re = c.residue.real();
        if (!c.finite && std::abs(c.residue.imag()) <= 1e-9 && re > 1.5 &&
            std::abs(re - std::round(re)) <= 1e-9)
            rec.shifted = classify_map(c.holonomy).tag != MapTag::Identity;
        if (hint_of[ci] >= 0) {
            const CycleHint& h = s.hints[hint_of[ci]];
            rec.order = h.order;
            rec.centered = h.centered;
            if (h.shifted) rec.shifted = h.shifted;
            rec.label = h.label;
            rec.family_u = h.family_u;
            rec.family_b = h.family_b;
        }
        c.record = rec.id;
        s.singularities.push_back(rec);
    }

    for (size_t mi = 0; mi < s.marks.size(); ++mi) {
        const Mark& mk = s.marks[mi];
        if (mk.piece < 0 || mk.piece >= P) throw Error("InvalidSurface", "mark in a missing piece");
        const Piece& pc = s.pieces[mk.piece];
        int cyc = -1;
        for (int k = 0; k < static_cast<int>(pc.sides.size()); ++k) {
            CornerGeom g = corner_geom(pc, k);
            if (g.finite && std::abs(g.vertex - mk.z) <= 1e-9 * pc.scale) cyc = s.corner_cycle[mk.piece][k];
        }
        if (cyc < 0 && pc.depth(mk.z) <= 0.0)
            throw Error("InvalidSurface", "mark outside its piece");
        if (cyc >= 0 && s.cycles[cyc].record >= 0) {
            s.singularities[s.cycles[cyc].record].mark = static_cast<int>(mi);
            continue;
        }
        SingularityRecord rec;
        rec.id = static_cast<int>(s.singularities.size());
        rec.order = 0;
        rec.cycle = cyc;
        rec.mark = static_cast<int>(mi);
        rec.cone_angle = kTwoPi;
        if (cyc >= 0) s.cycles[cyc].record = rec.id;
        s.singularities.push_back(rec);
    }

    s.n = 0;
    for (const auto& r : s.singularities) s.n += std::max(r.order, 1);

    s.genus = 0;
    if (!s.has_boundary) {
        int chi = static_cast<int>(s.cycles.size()) - static_cast<int>(s.pairings.size()) + P;
        if ((2 - chi) % 2 != 0 || chi > 2)
            add_issue(s, "OpenVertexCycle", "cell counts give a non-orientable Euler characteristic");
        else
            s.genus = (2 - chi) / 2;
    }

    // apexes
    s.apexes.assign(P, {});
    for (int i = 0; i < P; ++i) {
        const Piece& pc = s.pieces[i];
        for (int k = 0; k < static_cast<int>(pc.sides.size()); ++k) {
            CornerGeom g = corner_geom(pc, k);
            int cyc = s.corner_cycle[i][k];
            if (!g.finite || cyc < 0 || s.cycles[cyc].record < 0) continue;
            bool dup = false;
            for (const auto& a : s.apexes[i])
                if (!a.focus && std::abs(a.z - g.vertex) <= 1e-12 * pc.scale) dup = true;
            if (!dup) s.apexes[i].push_back({s.cycles[cyc].record, i, g.vertex, false, cyc});
        }
        if (pc.kind == PieceKind::Log && pc.unbounded_toward(cx(-1.0, 0.0))) {
            int cyc = -1;
            if (pc.sides.empty())
                cyc = s.corner_cycle[i][0];
            else
                for (int k = 0; k < static_cast<int>(pc.sides.size()); ++k)
                    if (end_contains_direction(pc, k, cx(-1.0, 0.0))) cyc = s.corner_cycle[i][k];
            int rec = cyc >= 0 ? s.cycles[cyc].record : -1;
            s.apexes[i].push_back({rec, i, cx(0.0, 0.0), true, cyc});
        }
    }
    for (const auto& r : s.singularities)
        if (r.cycle < 0 && r.mark >= 0) {
            const Mark& mk = s.marks[r.mark];
            s.apexes[mk.piece].push_back({r.id, mk.piece, mk.z, false, -1});
        }
}

ValidationReport validate(const Surface& s)
{
    ValidationReport rep;
    rep.genus = s.genus;
    rep.n = s.n;
    rep.has_boundary = s.has_boundary;
    rep.issues = s.build_issues;

    for (size_t k = 0; k < s.pairings.size(); ++k) {
        const Pairing& pr = s.pairings[k];
        const Piece& a = s.pieces[pr.p1];
        const Piece& b = s.pieces[pr.p2];
        const SideGeom& sa = a.sides[pr.s1];
        const SideGeom& sb = b.sides[pr.s2];
        const Edge& eb = b.edges[sb.edge];
        cx nb = b.halfplanes[eb.halfplane].n;
        std::ostringstream where;
        where << "pairing " << k << " (" << a.id << ":" << pr.s1 << " -> " << b.id << ":" << pr.s2 << ")";
        bool bad = false;
        std::vector<double> params;
        try {
            for (double f : {0.2, 0.5, 0.8}) {
                cx z = a.side_point(pr.s1, f);
                Placement pl = transfer(s, static_cast<int>(k), 1, z);
                double t = tol().eps_geom * (1.0 + std::abs(pl.z) + b.scale);
                if (std::abs(dot(nb, pl.z - eb.origin)) > t) bad = true;
                double tb = dot(pl.z - eb.origin, eb.dir);
                if (tb < sb.t0 - t || tb > sb.t1 + t) bad = true;
                params.push_back(tb);
            }
            if (!(params[0] > params[2])) bad = true;
            // a log side running to Re w = -infinity ends at the developed origin
            auto dev_finite = [](const Piece& p, const SideGeom& sg, bool tail) {
                if (tail ? sg.tail_finite() : sg.head_finite()) return true;
                cx d = p.edges[sg.edge].dir * (tail ? -1.0 : 1.0);
                return p.kind == PieceKind::Log && d.real() < -1e-12;
            };
            if (dev_finite(a, sa, true) != dev_finite(b, sb, false) || dev_finite(a, sa, false) != dev_finite(b, sb, true))
                bad = true;
            if (!bad && sa.tail_finite()) {
                Placement pl = transfer(s, static_cast<int>(k), 1, a.edges[sa.edge].at(sa.t0));
                cx target = eb.at(sb.t1);
                if (std::abs(b.dev(pl.z) - b.dev(target)) >
                    tol().eps_geom * (1.0 + std::abs(b.dev(target)) + b.scale))
                    bad = true;
            }
            if (!bad && sa.head_finite()) {
                Placement pl = transfer(s, static_cast<int>(k), 1, a.edges[sa.edge].at(sa.t1));
                cx target = eb.at(sb.t0);
                if (std::abs(b.dev(pl.z) - b.dev(target)) >
                    tol().eps_geom * (1.0 + std::abs(b.dev(target)) + b.scale))
                    bad = true;
            }
        } catch (const Error& e) {
            bad = true;
        }
        if (bad) rep.issues.push_back({"MismatchedEdge", where.str() + " does not map its side onto its partner"});
    }

    for (size_t ci = 0; ci < s.cycles.size(); ++ci) {
        const VertexCycle& c = s.cycles[ci];
        if (!c.closed) {
            if (!s.allow_boundary)
                rep.issues.push_back({"OpenVertexCycle", "vertex cycle " + std::to_string(ci) + " meets a free side"});
            continue;
        }
        if (c.finite) {
            cx dv = c.developed_vertex;
            if (std::abs(c.holonomy(dv) - dv) > tol().eps_geom * std::max(1.0, c.scale))
                rep.issues.push_back({"OpenVertexCycle", "holonomy of vertex cycle " + std::to_string(ci) +
                                                             " does not fix its vertex"});
            double lin = std::arg(c.holonomy.a);
            double diff = std::remainder(lin - c.omega, kTwoPi);
            if (std::abs(diff) > 1e-6)
                rep.issues.push_back({"OpenVertexCycle", "rotation of vertex cycle " + std::to_string(ci) +
                                                             " disagrees with its angle"});
        }
    }

    for (size_t k = 0; k < s.overlaps.size(); ++k) {
        const Overlap& ov = s.overlaps[k];
        const Piece& a = s.pieces[ov.p1];
        const Piece& b = s.pieces[ov.p2];
        bool meets = false;
        for (double r : {0.0, 1.0, 4.0, 16.0, 64.0, 256.0, 1024.0}) {
            for (int j = 0; j < 16 && !meets; ++j) {
                cx z = a.interior + r * a.scale * std::polar(1.0, kTwoPi * j / 16.0);
                if (a.depth(z) <= 0.0) continue;
                try {
                    if (b.depth(log_glue_apply(ov.glue, z)) > 0.0) meets = true;
                } catch (const Error&) {
                }
            }
            if (meets) break;
        }
        if (!meets)
            rep.issues.push_back({"MismatchedEdge", "overlap " + std::to_string(k) + " (" + a.id + " -> " + b.id +
                                                        ") has no common points"});
    }

    rep.residue_sum = residue_sum(s);
    if (!s.has_boundary) {
        double target = 2.0 - 2.0 * s.genus;
        if (std::abs(rep.residue_sum - target) > 1e-9)
            rep.issues.push_back({"ResidueSumViolation", "residue sum differs from 2-2g"});
    } else if (!s.allow_boundary) {
        rep.issues.push_back({"OpenVertexCycle", "surface has unpaired sides"});
    }
    rep.ok = rep.issues.empty();
    return rep;
}

std::vector<VertexResidue> vertex_residues(const Surface& s)
{
    std::vector<VertexResidue> out;
    for (const auto& c : s.cycles)
        if (!c.closed && !s.allow_boundary) throw Error("OpenVertexCycle", "surface has an open vertex cycle");
    for (const auto& r : s.singularities)
        out.push_back({r.id, r.cycle, r.order, r.residue, r.cone_angle, r.dilation});
    return out;
}

cx residue_sum(const Surface& s)
{
    cx acc{0.0, 0.0};
    for (const auto& r : s.singularities) acc += r.residue;
    return acc;
}

}  // namespace affsurf
