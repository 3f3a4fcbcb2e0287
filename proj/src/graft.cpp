#include "affsurf/graft.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "affsurf/builders.hpp"
#include "affsurf/geodesics.hpp"

namespace affsurf {

namespace {

double dot(cx a, cx b) { return a.real() * b.real() + a.imag() * b.imag(); }
double cross(cx a, cx b) { return (std::conj(a) * b).imag(); }

struct Chord {
    int piece = -1;
    cx a;       // entry point (the start of the slit for the first chord)
    cx u;       // unit direction, piece coordinates
    double len; // infinite for the last chord
    AffMap chart;  // developed coordinates of the start piece -> this piece
};

struct CellInfo {
    int old_piece = -1;
    int old_halfplanes = 0;
    std::vector<int> cut_of;  // per extra half-plane: chord index
    std::vector<bool> right_of;
};

double dist_to_side(const Piece& p, int k, cx z)
{
    const SideGeom& sg = p.sides[k];
    const Edge& e = p.edges[sg.edge];
    double t = std::clamp(dot(z - e.origin, e.dir), sg.t0, sg.t1);
    return std::abs(z - e.at(t));
}

int nearest_side(const Piece& p, cx z, int halfplane = -1)
{
    int best = -1;
    double bd = 1e300;
    for (int k = 0; k < static_cast<int>(p.sides.size()); ++k) {
        if (halfplane >= 0 && p.edges[p.sides[k].edge].halfplane != halfplane) continue;
        double d = dist_to_side(p, k, z);
        if (d < bd) {
            bd = d;
            best = k;
        }
    }
    return best;
}

// Parameter range of the line a + t u inside the piece.
void clip_line(const Piece& p, cx a, cx u, double& lo, double& hi)
{
    lo = -1e300;
    hi = 1e300;
    for (const auto& h : p.halfplanes) {
        double nd = dot(h.n, u);
        double off = dot(h.n, a - h.p);
        if (std::abs(nd) < 1e-14) continue;
        double t = -off / nd;
        if (nd > 0.0)
            lo = std::max(lo, t);
        else
            hi = std::min(hi, t);
    }
}

bool segments_cross(const Chord& c1, const Chord& c2, double eps)
{
    double den = cross(c1.u, c2.u);
    if (std::abs(den) < 1e-14) {
        if (std::abs(cross(c1.u, c2.a - c1.a)) > eps) return false;
        double s0 = dot(c2.a - c1.a, c1.u);
        double s1 = s0 + c2.len * dot(c2.u, c1.u);
        double lo = std::min(s0, s1), hi = std::max(s0, s1);
        return hi > eps && lo < c1.len - eps;
    }
    double t = cross(c2.a - c1.a, c2.u) / den;
    double v = cross(c2.a - c1.a, c1.u) / den;
    return t > eps && t < c1.len - eps && v > eps && v < c2.len - eps;
}

bool is_conical(const SingularityRecord& r)
{
    return r.order == 0 || (r.order == 1 && r.residue.real() < 1.0 - 1e-9);
}

// Vertex cycle at the corner containing a hint.
int hint_cycle(const Surface& s, const CycleHint& h)
{
    const Piece& p = s.pieces[h.piece];
    if (p.sides.empty()) return s.corner_cycle[h.piece].empty() ? -1 : s.corner_cycle[h.piece][0];
    for (int k = 0; k < static_cast<int>(p.sides.size()); ++k) {
        CornerGeom g = corner_geom(p, k);
        if (h.at_infinity ? (!g.finite && end_contains_direction(p, k, h.direction))
                          : (g.finite && std::abs(g.vertex - h.point) <= 1e-9 * p.scale))
            return s.corner_cycle[h.piece][k];
    }
    return -1;
}

}  // namespace

Surface graft_sector(const Surface& s, const Slit& slit, double theta, double dilation, const GraftOptions& gopt)
{
    const bool infinite = std::isinf(theta);
    const bool reglue = theta == 0.0 && dilation > 0.0 && dilation != 1.0;
    if (!(theta > 0.0 || reglue) || (!infinite && !(dilation > 0.0)))
        throw Error("InvalidArgument", "graft needs theta > 0 and a positive dilation");
    if (slit.piece < 0 || slit.piece >= static_cast<int>(s.pieces.size()))
        throw Error("SlitNotGeodesic", "slit piece does not exist");
    const Piece& p0 = s.pieces[slit.piece];

    // first endpoint: a conical singularity
    int s1_record = -1;
    for (const auto& a : s.apexes[slit.piece])
        if (!a.focus && std::abs(a.z - slit.start) <= 1e-9 * p0.scale) s1_record = a.record;
    if (s1_record < 0 || (!gopt.any_start && !is_conical(s.singularities[s1_record])))
        throw Error("BadEndpointType", "slit must start at a conical singularity");
    if (!(std::abs(slit.direction) > tol().eps_zero)) throw Error("SlitNotGeodesic", "slit direction vanishes");
    if (p0.kind != PieceKind::Flat) throw Error("SlitNotGeodesic", "slit must run through flat pieces");
    const cx u0 = slit.direction / std::abs(slit.direction);
    if (!(p0.depth(slit.start + 1e-6 * p0.scale * u0) > 1e-9 * p0.scale))
        throw Error("SlitNotGeodesic", "slit direction leaves the piece");
    const bool from_mark = p0.depth(slit.start) > 1e-9 * p0.scale;

    TraceOptions opt;
    opt.detect_closing = false;
    TraceResult tr = trace(s, {slit.piece, slit.start, u0, 0.0}, opt);
    if (tr.termination == Termination::HitApex && !tr.apex_focus)
        throw Error("BadEndpointType", "slit ends at a conical singularity");
    if (tr.termination != Termination::Escaped)
        throw Error("SlitNotGeodesic", "slit does not converge to a singularity (" + to_string(tr.termination) + ")");
    const int s2_cycle = tr.escape_cycle;
    if (s2_cycle < 0) throw Error("BadEndpointType", "slit does not end at a singularity");
    const int s2_record = s.cycles[s2_cycle].record;
    const int d2 = s2_record >= 0 ? std::max(1, s.singularities[s2_record].order) : 1;

    std::vector<Chord> chords;
    for (size_t k = 0; k < tr.path.size(); ++k) {
        const auto& seg = tr.path[k];
        if (s.pieces[seg.piece].kind != PieceKind::Flat)
            throw Error("SlitNotGeodesic", "slit must run through flat pieces");
        Chord c;
        c.piece = seg.piece;
        c.a = seg.points.front();
        c.u = seg.chart.a * u0 / std::abs(seg.chart.a);
        c.len = k + 1 < tr.path.size() ? std::abs(seg.points.back() - seg.points.front()) : 1e300;
        c.chart = seg.chart;
        chords.push_back(c);
    }
    if (reglue && chords.size() != 1)
        throw Error("InvalidArgument", "a zero-angle graft needs a slit inside one piece");
    for (size_t i = 0; i < chords.size(); ++i)
        for (size_t j = i + 1; j < chords.size(); ++j)
            if (chords[i].piece == chords[j].piece &&
                segments_cross(chords[i], chords[j], 1e-9 * s.pieces[chords[i].piece].scale))
                throw Error("SlitSelfCrossing", "slit crosses itself");

    // slit parameter: distance from the start in the start chart
    auto slit_param = [&](const Chord& c, cx z) { return dot(invert(c.chart)(z) - slit.start, u0); };

    const int P = static_cast<int>(s.pieces.size());
    std::vector<std::vector<int>> cuts(P);
    for (size_t k = 0; k < chords.size(); ++k) cuts[chords[k].piece].push_back(static_cast<int>(k));

    // matching breakpoints on partner sides of every cut endpoint
    std::vector<std::vector<std::vector<cx>>> extra(P);
    for (int p = 0; p < P; ++p) extra[p].assign(s.pieces[p].halfplanes.size(), {});
    for (int p = 0; p < P; ++p) {
        const Piece& pc = s.pieces[p];
        for (int k : cuts[p]) {
            double lo, hi;
            clip_line(pc, chords[k].a, chords[k].u, lo, hi);
            for (double t : {lo, hi}) {
                if (std::abs(t) > 1e200) continue;
                cx e = chords[k].a + t * chords[k].u;
                int sd = nearest_side(pc, e);
                if (sd < 0 || dist_to_side(pc, sd, e) > 1e-9 * pc.scale) continue;
                const PairRef& r = s.side_pair[p][sd];
                if (r.pairing < 0) continue;
                Placement q = transfer(s, r.pairing, r.which, e);
                const Pairing& pr = s.pairings[r.pairing];
                int qs = r.which == 1 ? pr.s2 : pr.s1;
                const Piece& qp = s.pieces[q.piece];
                extra[q.piece][qp.edges[qp.sides[qs].edge].halfplane].push_back(q.z);
            }
        }
    }

    Surface out;
    out.name = s.name + "+graft";
    out.allow_boundary = s.allow_boundary;
    std::vector<CellInfo> info;
    std::vector<std::vector<int>> cells_of(P);
    for (int p = 0; p < P; ++p) {
        Piece base = s.pieces[p];
        for (size_t h = 0; h < base.halfplanes.size(); ++h)
            for (cx b : extra[p][h]) base.halfplanes[h].breaks.push_back(b);
        const int m = static_cast<int>(cuts[p].size());
        const int H = static_cast<int>(base.halfplanes.size());
        for (int mask = 0; mask < (1 << m); ++mask) {
            Piece c = base;
            CellInfo ci;
            ci.old_piece = p;
            ci.old_halfplanes = H;
            for (int j = 0; j < m; ++j) {
                const Chord& ch = chords[cuts[p][j]];
                bool right = (mask >> j) & 1;
                HalfPlane hp = halfplane(ch.a, right ? -kI * ch.u : kI * ch.u);
                if (from_mark && cuts[p][j] == 0) hp.breaks.push_back(slit.start);
                c.halfplanes.push_back(hp);
                ci.cut_of.push_back(cuts[p][j]);
                ci.right_of.push_back(right);
            }
            if (m > 0) c.id = base.id + "." + std::to_string(mask);
            try {
                derive_edges(c);
            } catch (const Error&) {
                continue;
            }
            cells_of[p].push_back(static_cast<int>(out.pieces.size()));
            out.pieces.push_back(std::move(c));
            info.push_back(ci);
        }
    }
    const int n_cells = static_cast<int>(out.pieces.size());

    auto locate = [&](int old_piece, cx z) {
        int best = -1;
        double bd = -1e300;
        for (int c : cells_of[old_piece]) {
            double d = out.pieces[c].depth(z);
            if (d > bd) {
                bd = d;
                best = c;
            }
        }
        return best;
    };

    // the inserted sector: K flat sub-sectors, or two log half-planes
    std::vector<double> radii;  // slit parameters of the chord entries after the first
    for (size_t k = 1; k < chords.size(); ++k) radii.push_back(slit_param(chords[k], chords[k].a));
    int K = 0;
    cx muk = 1.0;
    int first_sector = n_cells, last_sector = n_cells;
    if (reglue) {
    } else if (!infinite) {
        K = std::max(1, static_cast<int>(std::ceil(theta / (kPi / 2.0) - 1e-12)));
        double beta = theta / K;
        muk = std::pow(dilation, 1.0 / K) * std::exp(kI * beta);
        cx e = std::exp(kI * beta);
        for (int j = 0; j < K; ++j) {
            HalfPlane r0 = halfplane(0.0, kI), rb = halfplane(0.0, -kI * e);
            if (j == 0)
                for (double r : radii) r0.breaks.push_back(r);
            if (j == K - 1)
                for (double r : radii) rb.breaks.push_back(muk * r);
            Piece sp;
            sp.id = "graft" + std::to_string(j);
            sp.kind = PieceKind::Flat;
            sp.halfplanes = {r0, rb};
            derive_edges(sp);
            out.pieces.push_back(std::move(sp));
        }
        last_sector = n_cells + K - 1;
        for (int j = 0; j + 1 < K; ++j) {
            Piece& a = out.pieces[n_cells + j];
            Piece& b = out.pieces[n_cells + j + 1];
            out.pairings.push_back({n_cells + j, side_index(a, 1), n_cells + j + 1, side_index(b, 0), AffMap{1.0 / muk, 0.0}, {}});
        }
    } else {
        for (int j = 0; j < 2; ++j) {
            HalfPlane h = halfplane(0.0, j == 0 ? kI : -kI);
            for (double r : radii) h.breaks.push_back(std::log(r));
            Piece sp;
            sp.id = j == 0 ? "graft-up" : "graft-down";
            sp.kind = PieceKind::Log;
            sp.halfplanes = {h};
            derive_edges(sp);
            out.pieces.push_back(std::move(sp));
        }
        last_sector = n_cells + 1;
    }

    std::vector<std::set<int>> done(out.pieces.size());
    for (int c = 0; c < n_cells; ++c) {
        const Piece& pc = out.pieces[c];
        const CellInfo& ci = info[c];
        const Piece& old = s.pieces[ci.old_piece];
        for (int k = 0; k < static_cast<int>(pc.sides.size()); ++k) {
            if (done[c].count(k)) continue;
            cx m = pc.side_point(k, 0.5);
            int hp = pc.edges[pc.sides[k].edge].halfplane;
            if (hp < ci.old_halfplanes) {
                int os = nearest_side(old, m, hp);
                const PairRef& r = s.side_pair[ci.old_piece][os];
                if (r.pairing < 0) continue;
                Placement q = transfer(s, r.pairing, r.which, m);
                int nc = locate(q.piece, q.z);
                int ns = nearest_side(out.pieces[nc], q.z);
                std::vector<Anchor> anchors;
                if (pc.kind == PieceKind::Log || out.pieces[nc].kind == PieceKind::Log) anchors.push_back({m, q.z});
                out.pairings.push_back({c, k, nc, ns, pairing_map(s, r.pairing, r.which), anchors});
                done[c].insert(k);
                done[nc].insert(ns);
                continue;
            }
            int j = hp - ci.old_halfplanes;
            const Chord& ch = chords[ci.cut_of[j]];
            bool right = ci.right_of[j];
            double along = dot(m - ch.a, ch.u);
            if (along < 0.0) {
                // behind a slit that starts at a marked point: the two cells stay glued
                for (int c2 : cells_of[ci.old_piece]) {
                    if (c2 == c) continue;
                    int s2 = nearest_side(out.pieces[c2], m);
                    if (s2 < 0 || dist_to_side(out.pieces[c2], s2, m) > 1e-9 * pc.scale) continue;
                    out.pairings.push_back({c, k, c2, s2, AffMap{}, {}});
                    done[c].insert(k);
                    done[c2].insert(s2);
                    break;
                }
                continue;
            }
            double r = slit_param(ch, m);
            AffMap f{ch.chart.a * u0, ch.chart(slit.start)};  // sector coordinates -> cell
            if (reglue) {
                if (!right) continue;
                for (int c2 : cells_of[ci.old_piece]) {
                    if (c2 == c || info[c2].right_of[j]) continue;
                    int s2 = nearest_side(out.pieces[c2], m, hp);
                    AffMap g = compose(f, compose(AffMap{1.0 / dilation, 0.0}, invert(f)));
                    out.pairings.push_back({c, k, c2, s2, g, {}});
                    done[c].insert(k);
                    done[c2].insert(s2);
                    break;
                }
                continue;
            }
            int sp;
            cx x;
            std::vector<Anchor> anchors;
            if (!infinite) {
                sp = right ? first_sector : last_sector;
                x = right ? cx(r, 0.0) : muk * r;
                if (!right) f = compose(f, AffMap{1.0 / muk, 0.0});
            } else {
                sp = right ? first_sector : last_sector;
                x = std::log(r);
                anchors.push_back({x, m});
            }
            int ss = nearest_side(out.pieces[sp], x, right || infinite ? 0 : 1);
            out.pairings.push_back({sp, ss, c, k, f, anchors});
            done[c].insert(k);
            done[sp].insert(ss);
        }
    }

    auto remap_point = [&](int old_piece, cx z) { return locate(old_piece, z); };
    auto same_as_s1 = [&](const Mark& mk) {
        return mk.piece == slit.piece && std::abs(mk.z - slit.start) <= 1e-9 * p0.scale;
    };
    for (const auto& mk : s.marks) {
        if (infinite && same_as_s1(mk)) continue;
        out.marks.push_back({remap_point(mk.piece, mk.z), mk.z});
    }
    for (const auto& h : s.hints) {
        if (infinite && hint_cycle(s, h) == s2_cycle) continue;
        CycleHint nh = h;
        if (h.at_infinity) {
            nh.piece = cells_of[h.piece].empty() ? -1 : cells_of[h.piece][0];
            for (int c : cells_of[h.piece])
                if (out.pieces[c].unbounded_toward(h.direction)) {
                    nh.piece = c;
                    break;
                }
        } else {
            nh.piece = remap_point(h.piece, h.point);
        }
        out.hints.push_back(nh);
    }
    if (infinite) {
        CycleHint h;
        h.piece = first_sector;
        h.at_infinity = true;
        h.direction = kI;
        h.order = d2 + 1;
        if (s2_record >= 0) h.label = s.singularities[s2_record].label;
        out.hints.push_back(h);
    }
    for (const auto& ov : s.overlaps) out.overlaps.push_back({cells_of[ov.p1][0], cells_of[ov.p2][0], ov.glue});
    for (const auto& t : s.traps) {
        TrapRegion nt = t;
        for (auto* parts : {&nt.entry, &nt.hold}) {
            std::vector<TrapPart> np;
            for (const auto& part : *parts)
                for (int c : cells_of[part.piece]) {
                    TrapPart q = part;
                    q.piece = c;
                    np.push_back(q);
                }
            *parts = np;
        }
        out.traps.push_back(nt);
    }
    finalize(out);
    return out;
}

}  // namespace affsurf
