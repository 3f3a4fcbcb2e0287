#include "affsurf/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace affsurf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(cx a, cx b) { return a.real() * b.real() + a.imag() * b.imag(); }

}  // namespace

EdgeShape Edge::shape() const
{
    if (std::isfinite(t0) && std::isfinite(t1)) return EdgeShape::Segment;
    if (std::isfinite(t0) || std::isfinite(t1)) return EdgeShape::Ray;
    return EdgeShape::Line;
}

double Piece::depth(cx z) const
{
    double d = kInf;
    for (const auto& h : halfplanes)
        d = std::min(d, dot(h.n, z - h.p));
    return d;
}

bool Piece::unbounded_toward(cx direction) const
{
    for (const auto& h : halfplanes)
        if (dot(h.n, direction) < -1e-12 * std::abs(direction)) return false;
    return true;
}

cx Piece::side_point(int side, double frac) const
{
    const SideGeom& s = sides[side];
    const Edge& e = edges[s.edge];
    double l = scale;
    double t;
    if (s.tail_finite() && s.head_finite())
        t = s.t0 + frac * (s.t1 - s.t0);
    else if (s.head_finite())
        t = s.t1 - l * (1.0 - frac) / frac;
    else if (s.tail_finite())
        t = s.t0 + l * frac / (1.0 - frac);
    else
        t = l * (frac - 0.5) / (frac * (1.0 - frac));
    return e.at(t);
}

void derive_edges(Piece& piece)
{
    auto& hps = piece.halfplanes;
    for (auto& h : hps) {
        double m = std::abs(h.n);
        if (!(m > tol().eps_zero) || !finite(h.p))
            throw Error("InvalidPiece", "piece " + piece.id + " has a degenerate half-plane");
        h.n /= m;
    }

    piece.edges.clear();
    piece.sides.clear();
    const int H = static_cast<int>(hps.size());
    const double eps = tol().eps_geom;

    for (int i = 0; i < H; ++i) {
        cx d = -kI * hps[i].n;
        double lo = -kInf, hi = kInf;
        bool empty = false;
        for (int j = 0; j < H && !empty; ++j) {
            if (j == i) continue;
            double nd = dot(hps[j].n, d);
            double rhs = dot(hps[j].n, hps[j].p - hps[i].p);
            if (std::abs(nd) < 1e-14) {
                double off = -rhs;  // signed distance of line i inside j
                if (off < -eps) {
                    empty = true;
                } else if (off <= eps) {
                    if (dot(hps[j].n, hps[i].n) > 0.0) {
                        if (j < i) empty = true;  // duplicate line, keep the first
                    } else {
                        throw Error("EmptyPiece", "piece " + piece.id + " has empty interior");
                    }
                }
                continue;
            }
            double t = rhs / nd;
            if (nd > 0.0)
                lo = std::max(lo, t);
            else
                hi = std::min(hi, t);
        }
        if (empty) continue;
        double span_tol = 1e-12 * (1.0 + (std::isfinite(lo) ? std::abs(lo) : 0.0) +
                                   (std::isfinite(hi) ? std::abs(hi) : 0.0));
        if (!(hi - lo > span_tol)) continue;
        Edge e;
        e.halfplane = i;
        e.origin = hps[i].p;
        e.dir = d;
        e.t0 = lo;
        e.t1 = hi;
        piece.edges.push_back(e);
    }

    if (!piece.edges.empty()) {
        // boundary order: start at the lexicographically smallest normal, then ccw by normal angle
        auto normal = [&](const Edge& e) { return hps[e.halfplane].n; };
        cx start = normal(piece.edges[0]);
        for (const auto& e : piece.edges) {
            cx n = normal(e);
            if (n.real() < start.real() - 1e-12 ||
                (std::abs(n.real() - start.real()) <= 1e-12 && n.imag() < start.imag()))
                start = n;
        }
        auto key = [&](const Edge& e) {
            double a = std::arg(normal(e) / start);
            if (a < -1e-12) a += kTwoPi;
            return std::max(a, 0.0);
        };
        std::stable_sort(piece.edges.begin(), piece.edges.end(),
                         [&](const Edge& a, const Edge& b) { return key(a) < key(b); });
    }

    // scale: diameter of the finite vertices, else 1
    std::vector<cx> verts;
    for (const auto& e : piece.edges) {
        if (std::isfinite(e.t0)) verts.push_back(e.at(e.t0));
        if (std::isfinite(e.t1)) verts.push_back(e.at(e.t1));
    }
    double diam = 0.0;
    for (size_t a = 0; a < verts.size(); ++a)
        for (size_t b = a + 1; b < verts.size(); ++b)
            diam = std::max(diam, std::abs(verts[a] - verts[b]));
    // strips: width between parallel opposite edges
    for (size_t a = 0; a < piece.edges.size(); ++a)
        for (size_t b = a + 1; b < piece.edges.size(); ++b) {
            const auto& ha = hps[piece.edges[a].halfplane];
            const auto& hb = hps[piece.edges[b].halfplane];
            if (std::abs(ha.n + hb.n) < 1e-12) diam = std::max(diam, dot(ha.n, hb.p - ha.p));
        }
    piece.scale = diam > tol().eps_geom ? diam : 1.0;

    // sides
    for (size_t k = 0; k < piece.edges.size(); ++k) {
        Edge& e = piece.edges[k];
        e.breaks.clear();
        double bt = 1e-9 * piece.scale;
        for (cx b : hps[e.halfplane].breaks) {
            double t = dot(b - e.origin, e.dir);
            if (t > e.t0 + bt && t < e.t1 - bt) e.breaks.push_back(t);
        }
        std::sort(e.breaks.begin(), e.breaks.end());
        e.breaks.erase(std::unique(e.breaks.begin(), e.breaks.end(),
                                   [&](double x, double y) { return std::abs(x - y) <= bt; }),
                       e.breaks.end());
        e.first_side = static_cast<int>(piece.sides.size());
        double prev = e.t0;
        for (double t : e.breaks) {
            piece.sides.push_back({static_cast<int>(k), prev, t});
            prev = t;
        }
        piece.sides.push_back({static_cast<int>(k), prev, e.t1});
    }

    // interior point: best candidate by depth
    if (piece.edges.empty()) {
        if (!hps.empty()) throw Error("EmptyPiece", "piece " + piece.id + " has empty interior");
        piece.interior = 0.0;
        return;
    }
    std::vector<cx> cands;
    if (!verts.empty()) {
        cx c = 0.0;
        for (cx v : verts) c += v;
        cands.push_back(c / static_cast<double>(verts.size()));
    }
    for (const auto& e : piece.edges) {
        double t = std::isfinite(e.t0) && std::isfinite(e.t1) ? 0.5 * (e.t0 + e.t1)
                   : std::isfinite(e.t0)                       ? e.t0 + piece.scale
                   : std::isfinite(e.t1)                       ? e.t1 - piece.scale
                                                               : 0.0;
        cx m = e.at(t);
        cx n = hps[e.halfplane].n;
        for (double delta = piece.scale; delta > 1e-6 * piece.scale; delta *= 0.25)
            cands.push_back(m + delta * n);
    }
    double best = -kInf;
    for (cx c : cands) {
        double dd = piece.depth(c);
        if (dd > best) {
            best = dd;
            piece.interior = c;
        }
    }
    if (!(best > tol().eps_geom * 1e-3))
        throw Error("EmptyPiece", "piece " + piece.id + " has empty interior");
}

bool trap_contains(const std::vector<TrapPart>& parts, int piece, cx z, double eps)
{
    for (const auto& part : parts) {
        if (part.piece != piece) continue;
        bool in = true;
        for (const auto& h : part.constraints)
            if (dot(h.n, z - h.p) < -eps) {
                in = false;
                break;
            }
        if (in && part.outside_disk && std::abs(z - part.disk_center) < part.disk_radius - eps)
            in = false;
        if (in) return true;
    }
    return false;
}

}  // namespace affsurf

namespace affsurf {

int side_index(const Piece& p, int halfplane, int sub)
{
    for (const auto& e : p.edges)
        if (e.halfplane == halfplane) return e.first_side + sub;
    return -1;
}

void add_pairing(Surface& s, int p1, int hp1, int p2, int hp2, AffMap dev, std::vector<Anchor> anchors,
                 int sub1, int sub2)
{
    derive_edges(s.pieces[p1]);
    derive_edges(s.pieces[p2]);
    int s1 = side_index(s.pieces[p1], hp1, sub1);
    int s2 = side_index(s.pieces[p2], hp2, sub2);
    if (s1 < 0 || s2 < 0) throw Error("InvalidSurface", "pairing refers to a redundant half-plane");
    s.pairings.push_back({p1, s1, p2, s2, dev, std::move(anchors)});
}

}  // namespace affsurf
