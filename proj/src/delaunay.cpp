#include "affsurf/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>

#include "affsurf/geodesics.hpp"

namespace affsurf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSingRel = 1e-9;   // strictly inside below r (1 - kSingRel)
constexpr double kHitRel = 1e-7;    // boundary hit up to r (1 + kHitRel)

double dot(cx a, cx b) { return a.real() * b.real() + a.imag() * b.imag(); }
double cross(cx a, cx b) { return (std::conj(a) * b).imag(); }

int side_at(const Piece& p, int edge, cx w)
{
    const Edge& e = p.edges[edge];
    double t = dot(w - e.origin, e.dir);
    int best = e.first_side;
    for (int k = e.first_side; k < static_cast<int>(p.sides.size()) && p.sides[k].edge == edge; ++k)
        if (t >= p.sides[k].t0) best = k;
    return best;
}

void check_supported(const Surface& s)
{
    if (s.has_boundary) throw Error("SurfaceHasBoundary", "Delaunay decomposition needs a surface without boundary");
    for (const auto& p : s.pieces) {
        if (p.kind != PieceKind::Log) continue;
        for (const auto& h : p.halfplanes)
            if (std::abs(h.n.real()) > 1e-12)
                throw Error("UnsupportedPiece", "log piece " + p.id + " has a non-horizontal edge");
    }
}

// Inverse without the zero tolerance: developed charts may shrink a lot along a dilation.
AffMap inverse(const AffMap& f)
{
    cx ia = 1.0 / f.a;
    return {ia, -f.b * ia};
}

struct Root {
    int piece = -1;
    cx z;
    AffMap chart;
};

// Moves along the straight segment from `from_pt` (located at `from`) to `to_pt` in the disk plane.
bool locate(const Surface& s, const Root& from, cx from_pt, cx to_pt, Root& out)
{
    cx disp = to_pt - from_pt;
    const Piece& p = s.pieces[from.piece];
    if (std::abs(disp) <= 1e-11 * std::max(1.0, std::abs(from_pt))) {
        out = from;
        return true;
    }
    cx v = disp / from.chart.a / p.dev_deriv(from.z);
    TraceOptions o;
    o.t_max = 1.0;
    o.detect_closing = false;
    o.max_crossings = 100000;
    TraceResult r = trace(s, {from.piece, from.z, v, 0.0}, o);
    if (r.termination != Termination::TimedOut) return false;
    out.piece = r.final_state.piece;
    out.z = r.final_state.z;
    out.chart = compose(from.chart, inverse(r.chart));
    return true;
}

enum class DevStatus { Ok, Singular, Boundary, Budget };

struct Found {
    double dist;
    DiskHit hit;
};

struct DevResult {
    DevStatus status = DevStatus::Ok;
    std::vector<DiskCell> cells;
    std::vector<Found> points;
    double nearest = kInf;
};

double norm_angle(double a, double th0)
{
    double d = std::fmod(a - th0, kTwoPi);
    if (d < 0.0) d += kTwoPi;
    return th0 + d;
}

class Developer {
public:
    Developer(const Surface& s, const Root& root, cx c, double r, bool nearest, int max_cells)
        : s_(s), root_(root), c_(c), r_(r), nearest_(nearest), max_cells_(max_cells)
    {
        scale_ = s.scale();
        r_ex_ = nearest ? kInf : r * (1.0 + kHitRel) + 1e-12 * scale_;
    }

    DevResult run()
    {
        DevResult res;
        Cell root;
        root.piece = root_.piece;
        root.chart = root_.chart;
        root.inv = inverse(root_.chart);
        root.th0 = 0.0;
        root.th1 = kTwoPi;
        root.entry = -1;
        root.dist = 0.0;
        root.wc = root_.z;
        auto cmp = [](const Cell& a, const Cell& b) { return a.dist > b.dist; };
        std::priority_queue<Cell, std::vector<Cell>, decltype(cmp)> pq(cmp);
        pq.push(root);
        int processed = 0;
        while (!pq.empty()) {
            Cell cell = pq.top();
            pq.pop();
            if (nearest_ && std::isfinite(res.nearest) && cell.dist > res.nearest * (1.0 + kHitRel)) break;
            if (++processed > max_cells_) {
                res.status = DevStatus::Budget;
                return res;
            }
            res.cells.push_back({cell.piece, cell.chart, cell.th0, cell.th1, cell.entry});
            scan_points(cell, res);
            if (!nearest_ && res.status == DevStatus::Singular) return res;
            if (!expand(cell, pq, res)) return res;
        }
        if (nearest_) {
            std::vector<Found> keep;
            for (const auto& f : res.points)
                if (f.dist <= res.nearest * (1.0 + kHitRel) + 1e-12 * scale_) keep.push_back(f);
            res.points = keep;
        }
        return res;
    }

private:
    struct Cell {
        int piece = -1;
        AffMap chart, inv;
        double th0 = 0.0, th1 = 0.0;
        int entry = -1;
        double dist = 0.0;
        cx wc;
    };

    struct Line {
        cx p0, d;
    };

    const Surface& s_;
    Root root_;
    cx c_;
    double r_, r_ex_;
    bool nearest_;
    int max_cells_;
    double scale_ = 1.0;

    static cx dir(double th) { return std::polar(1.0, th); }

    Line edge_line(const Cell& cell, int edge) const
    {
        const Piece& p = s_.pieces[cell.piece];
        const Edge& e = p.edges[edge];
        if (p.kind == PieceKind::Flat) return {cell.chart(e.origin), cell.chart.a * e.dir};
        return {cell.chart.b, cell.chart.a * std::polar(1.0, e.origin.imag())};
    }

    // Line parameters of the side's ends.
    std::pair<double, double> side_extent(const Piece& p, int side) const
    {
        const SideGeom& sg = p.sides[side];
        if (p.kind == PieceKind::Flat) return {sg.t0, sg.t1};
        const Edge& e = p.edges[sg.edge];
        double x0 = e.origin.real();
        double a = std::exp(x0 + sg.t0 * e.dir.real());
        double b = std::exp(x0 + sg.t1 * e.dir.real());
        return {std::min(a, b), std::max(a, b)};
    }

    double t_in(const Cell& cell, double th) const
    {
        if (cell.entry < 0) return 0.0;
        Line l = edge_line(cell, cell.entry);
        double den = cross(dir(th), l.d);
        if (den == 0.0) return kInf;
        return std::max(0.0, cross(l.p0 - c_, l.d) / den);
    }

    struct Entry {
        cx zeta;  // piece-developed point where the ray enters
        cx w;
    };

    Entry entry_point(const Cell& cell, double th, double tin) const
    {
        cx zeta = cell.inv(c_ + tin * dir(th));
        const Piece& p = s_.pieces[cell.piece];
        if (p.kind == PieceKind::Flat) return {zeta, zeta};
        if (cell.entry < 0) return {zeta, cell.wc + std::log(zeta / std::exp(cell.wc))};
        double level = p.edges[cell.entry].origin.imag();
        return {zeta, cx(std::log(std::abs(zeta)), level)};
    }

    cx lift(const Cell& cell, const Entry& en, cx zeta) const
    {
        if (s_.pieces[cell.piece].kind == PieceKind::Flat) return zeta;
        return en.w + std::log(zeta / en.zeta);
    }

    struct Exit {
        double t = kInf;
        int edge = -1;
        int side = -1;
    };

    Exit exit(const Cell& cell, double th) const
    {
        const Piece& p = s_.pieces[cell.piece];
        Exit ex;
        double tin = t_in(cell, th);
        if (!std::isfinite(tin)) return ex;
        cx u = dir(th);
        cx z0 = cell.inv(c_);
        cx uz = cell.inv.a * u;
        if (p.kind == PieceKind::Flat) {
            for (size_t k = 0; k < p.edges.size(); ++k) {
                if (static_cast<int>(k) == cell.entry) continue;
                const HalfPlane& h = p.halfplanes[p.edges[k].halfplane];
                double nv = dot(h.n, uz);
                if (!(nv < -1e-15 * std::abs(uz))) continue;
                double t = -dot(h.n, z0 - h.p) / nv;
                if (t < tin - 1e-12 * (1.0 + tin)) continue;
                if (t < ex.t) ex = {t, static_cast<int>(k), -1};
            }
            if (ex.edge >= 0) ex.side = side_at(p, ex.edge, z0 + ex.t * uz);
            return ex;
        }
        Entry en = entry_point(cell, th, tin);
        for (size_t k = 0; k < p.edges.size(); ++k) {
            if (static_cast<int>(k) == cell.entry) continue;
            double level = p.edges[k].origin.imag();
            double delta = level - en.w.imag();
            if (std::abs(delta) >= kPi) continue;
            cx e = std::polar(1.0, std::arg(en.zeta) + delta);
            double den = cross(e, uz);
            if (den == 0.0) continue;
            double t = -cross(e, z0) / den;
            if (!(t > tin) || !std::isfinite(t)) continue;
            cx q = z0 + t * uz;
            if (dot(e, q) <= 0.0) continue;
            if (std::abs(std::arg(q / en.zeta) - delta) > 1e-6) continue;
            if (t < ex.t) ex = {t, static_cast<int>(k), -1};
        }
        if (ex.edge >= 0) {
            cx q = z0 + ex.t * uz;
            cx w(std::log(std::abs(q)), p.edges[ex.edge].origin.imag());
            ex.side = side_at(p, ex.edge, w);
        }
        return ex;
    }

    bool inside(const Cell& cell, double th, double tin, double t) const
    {
        const Piece& p = s_.pieces[cell.piece];
        cx zeta = cell.inv(c_ + t * dir(th));
        if (p.kind == PieceKind::Flat) return p.depth(zeta) >= -1e-9 * std::max(1.0, p.scale);
        Entry en = entry_point(cell, th, tin);
        cx w = lift(cell, en, zeta);
        return p.depth(w) >= -1e-9 * (1.0 + std::abs(w.imag()));
    }

    bool in_window(const Cell& cell, double a) const
    {
        if (cell.th1 - cell.th0 >= kTwoPi - 1e-15) return true;
        double x = norm_angle(a, cell.th0);
        return x <= cell.th1 + 1e-10 || x >= cell.th0 + kTwoPi - 1e-10;
    }

    void scan_points(const Cell& cell, DevResult& res) const
    {
        const Piece& p = s_.pieces[cell.piece];
        for (const auto& a : s_.apexes[cell.piece]) {
            if (a.record < 0) continue;
            cx P = a.focus ? cell.chart.b : cell.chart(p.dev(a.z));
            double d = std::abs(P - c_);
            if (d > r_ex_) continue;
            double ang = std::arg(P - c_);
            bool visible;
            if (d <= 1e-12 * scale_) {
                visible = cell.entry < 0;
            } else {
                if (!in_window(cell, ang)) continue;
                double tin = t_in(cell, ang);
                if (!(tin <= d * (1.0 + 1e-9) + 1e-13 * scale_)) continue;
                double ts = d > tin ? tin + (d - tin) * (1.0 - 1e-6) : d;
                visible = inside(cell, ang, tin, ts);
                if (visible && p.kind == PieceKind::Log && !a.focus) {
                    Entry en = entry_point(cell, ang, tin);
                    visible = std::abs(lift(cell, en, cell.inv(P)) - a.z) <= 1e-6 * (1.0 + std::abs(a.z));
                }
            }
            if (!visible) continue;
            bool dup = false;
            for (const auto& f : res.points)
                if (f.hit.record == a.record && std::abs(f.hit.position - P) <= 1e-9 * std::max(scale_, d)) dup = true;
            if (dup) continue;
            DiskHit h;
            h.angle = ang;
            h.record = a.record;
            h.piece = cell.piece;
            h.z = a.z;
            h.focus = a.focus;
            h.position = P;
            res.points.push_back({d, h});
            res.nearest = std::min(res.nearest, d);
            if (!nearest_ && d < r_ * (1.0 - kSingRel)) res.status = DevStatus::Singular;
        }
    }

    double line_param(const Line& l, double th) const
    {
        cx u = dir(th);
        double den = cross(l.d, u);
        if (den == 0.0) return kInf;
        double t = cross(l.p0 - c_, l.d) / cross(u, l.d);
        if (!(t >= -1e-12 * scale_)) return kInf;
        return cross(c_ - l.p0, u) / den;
    }

    double portion_distance(const Cell& cell, const Exit& ex, double a, double b, double mid) const
    {
        const Piece& p = s_.pieces[cell.piece];
        Line l = edge_line(cell, ex.edge);
        double sm = line_param(l, mid);
        auto end_param = [&](double th) {
            double v = line_param(l, th);
            if (std::isfinite(v)) return v;
            double near = line_param(l, th + 0.01 * (mid - th));
            if (!std::isfinite(near)) return sm;
            return near >= sm ? kInf : -kInf;
        };
        double sa = end_param(a), sb = end_param(b);
        auto [e0, e1] = side_extent(p, ex.side);
        double lo = std::max(std::min(sa, sb), e0);
        double hi = std::min(std::max(sa, sb), e1);
        if (!(lo <= hi)) lo = hi = std::clamp(sm, e0, e1);
        double sp = dot(c_ - l.p0, l.d) / std::norm(l.d);
        sp = std::clamp(sp, lo, hi);
        return std::abs(l.p0 + sp * l.d - c_);
    }

    template <class PQ>
    bool expand(const Cell& cell, PQ& pq, DevResult& res)
    {
        const Piece& p = s_.pieces[cell.piece];
        std::vector<double> crit = {cell.th0, cell.th1};
        auto add_crit = [&](cx P) {
            if (std::abs(P - c_) <= 1e-13 * scale_) return;
            double x = norm_angle(std::arg(P - c_), cell.th0);
            if (x > cell.th0 + 1e-13 && x < cell.th1 - 1e-13) crit.push_back(x);
        };
        auto add_dir = [&](cx d) {
            double x = norm_angle(std::arg(d), cell.th0);
            if (x > cell.th0 + 1e-13 && x < cell.th1 - 1e-13) crit.push_back(x);
        };
        for (const auto& e : p.edges) {
            if (std::isfinite(e.t0)) add_crit(cell.chart(p.dev(e.at(e.t0))));
            if (std::isfinite(e.t1)) add_crit(cell.chart(p.dev(e.at(e.t1))));
            for (double b : e.breaks) add_crit(cell.chart(p.dev(e.at(b))));
            // directions at infinity of unbounded edges
            if (p.kind == PieceKind::Flat) {
                if (!std::isfinite(e.t0)) add_dir(-cell.chart.a * e.dir);
                if (!std::isfinite(e.t1)) add_dir(cell.chart.a * e.dir);
            } else if ((e.dir.real() > 0.0 && !std::isfinite(e.t1)) || (e.dir.real() < 0.0 && !std::isfinite(e.t0))) {
                add_dir(cell.chart.a * std::polar(1.0, e.origin.imag()));
            }
        }
        if (p.kind == PieceKind::Log) add_crit(cell.chart.b);
        std::sort(crit.begin(), crit.end());

        struct Run {
            int side = -1;
            int edge = -1;
            double a = 0.0, b = 0.0;
            double dist = kInf;
        };
        std::vector<Run> runs;
        for (size_t k = 0; k + 1 < crit.size(); ++k) {
            double a = crit[k], b = crit[k + 1];
            if (b - a <= 1e-14) continue;
            double mid = 0.5 * (a + b);
            Exit ex = exit(cell, mid);
            if (ex.edge < 0) continue;
            double d = portion_distance(cell, ex, a, b, mid);
            if (!runs.empty() && runs.back().side == ex.side && std::abs(runs.back().b - a) <= 1e-14) {
                runs.back().b = b;
                runs.back().dist = std::min(runs.back().dist, d);
            } else {
                runs.push_back({ex.side, ex.edge, a, b, d});
            }
        }
        for (const auto& run : runs) {
            if (!(run.dist < r_ex_)) continue;
            const PairRef& pr = s_.side_pair[cell.piece][run.side];
            if (pr.pairing < 0) {
                if (!nearest_ && run.dist < r_ * (1.0 - kSingRel)) {
                    res.status = DevStatus::Boundary;
                    return false;
                }
                if (nearest_) {
                    res.status = DevStatus::Boundary;
                    return false;
                }
                continue;
            }
            const Pairing& pg = s_.pairings[pr.pairing];
            int dst = pr.which == 1 ? pg.p2 : pg.p1;
            int dside = pr.which == 1 ? pg.s2 : pg.s1;
            Cell ch;
            ch.piece = dst;
            ch.chart = compose(cell.chart, invert(pairing_map(s_, pr.pairing, pr.which)));
            double ga = std::abs(ch.chart.a);
            if (!(ga > 1e-150 && ga < 1e150)) {
                // cells piling up at a dilation fixed point
                res.status = DevStatus::Budget;
                return false;
            }
            ch.inv = inverse(ch.chart);
            ch.th0 = run.a;
            ch.th1 = run.b;
            ch.entry = s_.pieces[dst].sides[dside].edge;
            ch.dist = std::max(cell.dist, run.dist);
            pq.push(ch);
        }
        return true;
    }
};

struct Eval {
    bool valid = false;
    bool budget = false;
    ImmersedDisk disk;
};

ImmersedDisk make_disk(const Root& root, cx c, double r, DevResult&& dr)
{
    ImmersedDisk d;
    d.center_at = {root.piece, root.z};
    d.root_chart = root.chart;
    d.center = c;
    d.radius = r;
    d.cells = std::move(dr.cells);
    for (const auto& f : dr.points)
        if (f.dist >= r * (1.0 - kSingRel) && f.dist <= r * (1.0 + kHitRel) + 1e-12) d.hits.push_back(f.hit);
    std::sort(d.hits.begin(), d.hits.end(), [](const DiskHit& a, const DiskHit& b) { return a.angle < b.angle; });
    return d;
}

Eval evaluate(const Surface& s, const Root& anchor, cx anchor_pt, cx c, double r, const DelaunayOptions& opt)
{
    Eval ev;
    Root root;
    if (!locate(s, anchor, anchor_pt, c, root)) return ev;
    double ga = std::abs(root.chart.a);
    if (!(ga > 1e-150 && ga < 1e150)) {
        ev.budget = true;
        return ev;
    }
    Developer dv(s, root, c, r, false, opt.max_cells);
    DevResult dr = dv.run();
    if (dr.status == DevStatus::Budget) {
        ev.budget = true;
        return ev;
    }
    if (dr.status != DevStatus::Ok) return ev;
    ev.valid = true;
    ev.disk = make_disk(root, c, r, std::move(dr));
    return ev;
}

// One-parameter family of disks, monotone: valid up to a threshold, invalid beyond.
struct Family {
    cx base, dir;
    double half = 0.0;  // radius = sqrt(half^2 + tau^2) for pencils
    bool pinned = false;
    cx center(double tau) const { return base + tau * dir; }
    double radius(double tau) const { return pinned ? tau : std::hypot(half, tau); }
};

struct SweepResult {
    DiskOutcome outcome = DiskOutcome::Disk;
    double tau = 0.0;
    ImmersedDisk disk;
};

SweepResult sweep(const Surface& s, const Family& f, double tau0, const Root& anchor, cx anchor_pt,
                  double r0, const DelaunayOptions& opt)
{
    SweepResult sr;
    double cap = opt.escape_factor * std::max(s.scale(), r0);
    double lo = tau0;
    double step = std::max(0.25 * r0, 1e-6 * s.scale());
    double hi;
    ImmersedDisk best;
    bool have_best = false;
    while (true) {
        hi = lo + step;
        if (f.radius(hi) > cap) {
            sr.outcome = DiskOutcome::HalfPlaneRegime;
            sr.tau = hi;
            return sr;
        }
        Eval ev = evaluate(s, anchor, anchor_pt, f.center(hi), f.radius(hi), opt);
        if (ev.budget) {
            sr.outcome = DiskOutcome::HalfPlaneRegime;
            sr.tau = hi;
            return sr;
        }
        if (!ev.valid) break;
        lo = hi;
        best = std::move(ev.disk);
        have_best = true;
        step *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
        double scale = std::max(f.radius(lo), 1e-300);
        if (hi - lo <= 1e-11 * scale) break;
        double mid = 0.5 * (lo + hi);
        Eval ev = evaluate(s, anchor, anchor_pt, f.center(mid), f.radius(mid), opt);
        if (ev.valid) {
            lo = mid;
            best = std::move(ev.disk);
            have_best = true;
        } else {
            hi = mid;
        }
    }
    if (!have_best) {
        Eval ev = evaluate(s, anchor, anchor_pt, f.center(lo), f.radius(lo), opt);
        if (!ev.valid) throw Error("PivotFailed", "pencil start is not an immersed disk", true);
        best = std::move(ev.disk);
    }
    sr.tau = lo;
    sr.disk = std::move(best);
    return sr;
}

Root disk_root(const ImmersedDisk& d) { return {d.center_at.piece, d.center_at.z, d.root_chart}; }

struct Rep {
    int piece;
    cx z, v;
};

bool rep_less(const Rep& a, const Rep& b, double q)
{
    if (a.piece != b.piece) return a.piece < b.piece;
    double ar = std::round(a.z.real() / q), br = std::round(b.z.real() / q);
    if (ar != br) return ar < br;
    return std::round(a.z.imag() / q) < std::round(b.z.imag() / q);
}

// Canonical representative of a point lying on piece sides; v is carried along.
Rep normalize_point(const Surface& s, Rep r)
{
    std::vector<Rep> reps = {r};
    double q = 1e-7 * s.scale();
    for (size_t i = 0; i < reps.size() && reps.size() < 16; ++i) {
        const Piece& p = s.pieces[reps[i].piece];
        if (p.depth(reps[i].z) > 1e-9 * std::max(1.0, p.scale)) continue;
        for (int k = 0; k < static_cast<int>(p.sides.size()); ++k) {
            const SideGeom& sg = p.sides[k];
            const Edge& e = p.edges[sg.edge];
            double t = dot(reps[i].z - e.origin, e.dir);
            if (std::abs(cross(e.dir, reps[i].z - e.origin)) > 1e-9 * std::max(1.0, p.scale)) continue;
            if (t < sg.t0 - 1e-9 || t > sg.t1 + 1e-9) continue;
            const PairRef& pr = s.side_pair[reps[i].piece][k];
            if (pr.pairing < 0) continue;
            Placement pl = transfer(s, pr.pairing, pr.which, reps[i].z, reps[i].v);
            bool seen = false;
            for (const auto& x : reps)
                if (x.piece == pl.piece && std::abs(x.z - pl.z) <= 1e-8 * std::max(1.0, s.pieces[pl.piece].scale))
                    seen = true;
            if (!seen) reps.push_back({pl.piece, pl.z, pl.v});
        }
    }
    Rep best = reps[0];
    for (const auto& x : reps)
        if (rep_less(x, best, q)) best = x;
    return best;
}

std::vector<PathPart> trace_path(const Surface& s, const Root& at, cx from_pt, cx to_pt)
{
    const Piece& p = s.pieces[at.piece];
    cx v = (to_pt - from_pt) / at.chart.a / p.dev_deriv(at.z);
    TraceOptions o;
    o.t_max = 1.0 + 1e-6;
    o.detect_closing = false;
    o.max_crossings = 100000;
    TraceResult r = trace(s, {at.piece, at.z, v, 0.0}, o);
    std::vector<PathPart> parts;
    for (const auto& tp : r.path) {
        PathPart pp{tp.piece, tp.points};
        if (pp.points.empty()) continue;
        // slivers left at a corner where the trace ends
        double span = 0.0;
        for (cx z : pp.points) span = std::max(span, std::abs(z - pp.points.front()));
        if (!parts.empty() && span <= 1e-10 * std::max(1.0, std::abs(pp.points.front()))) continue;
        parts.push_back(std::move(pp));
    }
    return parts;
}

DelaunaySegment make_segment(const Surface& s, const ImmersedDisk& from, const DiskHit& a, const DiskHit& b,
                             const ImmersedDisk& witness)
{
    DelaunaySegment seg;
    seg.record_a = a.record;
    seg.record_b = b.record;
    seg.focus_a = a.focus;
    seg.focus_b = b.focus;
    seg.length = std::abs(b.position - a.position);
    seg.witness = witness;
    cx m = 0.5 * (a.position + b.position);
    Root mr;
    if (!locate(s, disk_root(from), from.center, m, mr))
        throw Error("PivotFailed", "segment midpoint is not reachable inside its disk", true);
    std::vector<PathPart> back = trace_path(s, mr, m, a.position);
    std::vector<PathPart> fwd = trace_path(s, mr, m, b.position);
    for (auto it = back.rbegin(); it != back.rend(); ++it) {
        PathPart pp = *it;
        std::reverse(pp.points.begin(), pp.points.end());
        seg.path.push_back(std::move(pp));
    }
    for (size_t k = 0; k < fwd.size(); ++k) {
        PathPart& pp = fwd[k];
        if (k == 0 && !seg.path.empty() && seg.path.back().piece == pp.piece && !pp.points.empty()) {
            auto& tail = seg.path.back().points;
            tail.insert(tail.end(), pp.points.begin() + 1, pp.points.end());
        } else {
            seg.path.push_back(std::move(pp));
        }
    }
    const Piece& pc = s.pieces[mr.piece];
    cx v = (b.position - a.position) / mr.chart.a / pc.dev_deriv(mr.z);
    v /= std::abs(v);
    Rep rep = normalize_point(s, {mr.piece, mr.z, v});
    rep.v /= std::abs(rep.v);
    if (rep.v.real() < -1e-12 || (std::abs(rep.v.real()) <= 1e-12 && rep.v.imag() < 0.0)) {
        rep.v = -rep.v;
        std::swap(seg.record_a, seg.record_b);
        std::swap(seg.focus_a, seg.focus_b);
        std::reverse(seg.path.begin(), seg.path.end());
        for (auto& pp : seg.path) std::reverse(pp.points.begin(), pp.points.end());
    }
    seg.midpoint = {rep.piece, rep.z};
    seg.direction = rep.v;
    return seg;
}

bool same_segment(const Surface& s, const DelaunaySegment& x, const DelaunaySegment& y)
{
    int xa = std::min(x.record_a, x.record_b), xb = std::max(x.record_a, x.record_b);
    int ya = std::min(y.record_a, y.record_b), yb = std::max(y.record_a, y.record_b);
    if (xa != ya || xb != yb) return false;
    if (x.midpoint.piece != y.midpoint.piece) return false;
    return std::abs(x.midpoint.z - y.midpoint.z) <= 1e-6 * std::max(1.0, s.pieces[x.midpoint.piece].scale);
}

bool same_disk(const Surface& s, const ImmersedDisk& x, const ImmersedDisk& y)
{
    if (x.hits.size() != y.hits.size()) return false;
    Rep a = normalize_point(s, {x.center_at.piece, x.center_at.z, 1.0});
    Rep b = normalize_point(s, {y.center_at.piece, y.center_at.z, 1.0});
    if (a.piece != b.piece) return false;
    return std::abs(a.z - b.z) <= 1e-6 * std::max(1.0, s.pieces[a.piece].scale);
}

// Witness disk with exactly the two hits a, b, strictly between the pencil ends.
ImmersedDisk witness_disk(const Surface& s, const Family& f, const Root& anchor, cx anchor_pt, double tau0,
                          double tau1, bool bounded, double r0, const DelaunayOptions& opt)
{
    double tau = bounded ? 0.5 * (tau0 + tau1) : tau0 + std::max(r0, f.half);
    for (int k = 0; k < 60; ++k) {
        Eval ev = evaluate(s, anchor, anchor_pt, f.center(tau), f.radius(tau), opt);
        if (ev.valid && ev.disk.hits.size() == 2) return ev.disk;
        tau = 0.5 * (tau0 + tau);
    }
    throw Error("PivotFailed", "no two-point disk in the pencil", true);
}

}  // namespace

ExceptionalTag is_exceptional(const Surface& s)
{
    ExceptionalTag t;
    if (2 * s.genus + s.n > 2) return t;
    t.exceptional = true;
    auto res_is = [](const SingularityRecord& r, double x) { return std::abs(r.residue - cx(x, 0.0)) <= 1e-9; };
    std::vector<const SingularityRecord*> poles;
    int marks = 0;
    for (const auto& r : s.singularities) {
        if (r.order == 0)
            ++marks;
        else
            poles.push_back(&r);
    }
    if (s.genus == 1) {
        bool translation = true;
        for (const auto& p : s.pieces) translation = translation && p.kind == PieceKind::Flat;
        for (const auto& pr : s.pairings) translation = translation && std::abs(pr.dev.a - 1.0) <= 1e-9;
        t.tag = translation ? "translation-torus" : "affine-torus";
        return t;
    }
    if (poles.size() == 1 && poles[0]->order >= 2) {
        t.tag = "infinite-angle-cone";
    } else if (poles.size() == 1 && res_is(*poles[0], 2.0)) {
        t.tag = "whole-plane";
    } else if (poles.size() == 2 && marks == 0) {
        t.tag = res_is(*poles[0], 1.0) && res_is(*poles[1], 1.0) ? "translation-cylinder" : "affine-cylinder";
    }
    return t;
}

DelaunayOptions delaunay_options_from_env()
{
    DelaunayOptions o;
    if (const char* b = std::getenv("AFFSURF_BUDGET_PIVOTS")) {
        char* end = nullptr;
        long v = std::strtol(b, &end, 10);
        if (end != b && v > 0) o.max_pivots = v;
    }
    return o;
}

GrowResult grow_max_disk(const Surface& s, SurfacePoint seed, const DelaunayOptions& opt)
{
    check_supported(s);
    if (seed.piece < 0 || seed.piece >= static_cast<int>(s.pieces.size()))
        throw Error("InvalidArgument", "seed piece does not exist");
    const Piece& p = s.pieces[seed.piece];
    if (!p.contains(seed.z, 1e-9 * std::max(1.0, p.scale)))
        throw Error("InvalidArgument", "seed lies outside its piece");
    Root root{seed.piece, seed.z, AffMap{}};
    cx c = p.dev(seed.z);

    GrowResult gr;
    Developer dv(s, root, c, 0.0, true, opt.max_cells);
    DevResult first = dv.run();
    if (first.status == DevStatus::Boundary) throw Error("SurfaceHasBoundary", "disk growth reached a free side");
    if (first.status == DevStatus::Budget || first.points.empty()) {
        gr.outcome = DiskOutcome::HalfPlaneRegime;
        return gr;
    }
    double r1 = first.nearest;
    if (r1 <= 1e-12 * std::max(s.scale(), std::abs(c)))
        throw Error("SeedOnSingularity", "seed sits on a singular point");

    ImmersedDisk d0 = make_disk(root, c, r1, std::move(first));
    if (d0.hits.size() >= 2) {
        Eval ev = evaluate(s, root, c, c, r1, opt);
        if (ev.valid) {
            gr.disk = std::move(ev.disk);
            return gr;
        }
        gr.disk = std::move(d0);
        return gr;
    }
    cx s1 = d0.hits[0].position;
    Family f;
    f.base = s1;
    f.dir = (c - s1) / std::abs(c - s1);
    f.pinned = true;
    SweepResult sr = sweep(s, f, r1, root, c, r1, opt);
    gr.outcome = sr.outcome;
    gr.disk = std::move(sr.disk);
    return gr;
}

PivotResult pivot(const Surface& s, const ImmersedDisk& disk, int egress, const DelaunayOptions& opt)
{
    check_supported(s);
    const int k = static_cast<int>(disk.hits.size());
    if (k < 2) throw Error("NoBoundedPencil", "pivoting needs two boundary hits");
    if (egress < 0 || egress >= k) throw Error("InvalidArgument", "egress index out of range");
    const DiskHit& a = disk.hits[egress];
    const DiskHit& b = disk.hits[(egress + 1) % k];
    cx m = 0.5 * (a.position + b.position);
    cx chord = b.position - a.position;
    double half = 0.5 * std::abs(chord);
    Family f;
    f.base = m;
    f.dir = -kI * chord / std::abs(chord);
    f.half = half;
    double tau0 = dot(disk.center - m, f.dir);

    Root mroot;
    if (!locate(s, disk_root(disk), disk.center, m, mroot))
        throw Error("PivotFailed", "chord midpoint is not reachable inside the disk", true);
    SweepResult sr = sweep(s, f, tau0, mroot, m, disk.radius, opt);

    PivotResult pr;
    pr.outcome = sr.outcome;
    bool bounded = sr.outcome == DiskOutcome::Disk;
    ImmersedDisk w = witness_disk(s, f, mroot, m, tau0, sr.tau, bounded, disk.radius, opt);
    pr.segment = make_segment(s, disk, a, b, w);
    if (bounded) pr.next = std::move(sr.disk);
    return pr;
}

namespace {

struct Traversal {
    const Surface& s;
    const DelaunayOptions& opt;
    std::vector<DelaunaySegment> segments;
    std::vector<ImmersedDisk> disks;
    long pivots = 0;

    void add_segment(DelaunaySegment&& seg)
    {
        for (const auto& x : segments)
            if (same_segment(s, x, seg)) return;
        segments.push_back(std::move(seg));
    }

    void run_from(ImmersedDisk&& d0)
    {
        for (const auto& x : disks)
            if (same_disk(s, x, d0)) return;
        std::vector<ImmersedDisk> queue;
        disks.push_back(d0);
        queue.push_back(std::move(d0));
        while (!queue.empty()) {
            ImmersedDisk d = std::move(queue.back());
            queue.pop_back();
            for (int e = 0; e < static_cast<int>(d.hits.size()); ++e) {
                if (++pivots > opt.max_pivots)
                    throw Error("SpineTraversalCapped", "pivot budget exceeded");
                PivotResult pr = pivot(s, d, e, opt);
                add_segment(std::move(pr.segment));
                if (pr.outcome != DiskOutcome::Disk) continue;
                bool seen = false;
                for (const auto& x : disks)
                    if (same_disk(s, x, pr.next)) seen = true;
                if (seen) continue;
                disks.push_back(pr.next);
                queue.push_back(std::move(pr.next));
            }
        }
    }
};

std::vector<SurfacePoint> apex_seeds(const Surface& s, const Apex& a, double step)
{
    std::vector<SurfacePoint> out;
    const Piece& p = s.pieces[a.piece];
    if (a.focus) {
        double lo = -kInf, hi = kInf;
        for (const auto& h : p.halfplanes) {
            if (h.n.imag() > 0.0) lo = std::max(lo, h.p.imag());
            if (h.n.imag() < 0.0) hi = std::min(hi, h.p.imag());
        }
        if (!std::isfinite(lo) && !std::isfinite(hi)) lo = -kPi, hi = kPi;
        if (!std::isfinite(lo)) lo = hi - kTwoPi;
        if (!std::isfinite(hi)) hi = lo + kTwoPi;
        int n = std::max(2, static_cast<int>(std::round((hi - lo) / step)));
        for (int j = 0; j < n; ++j) {
            cx w(-9.0, lo + (hi - lo) * (j + 0.5) / n);
            if (p.depth(w) > 1e-9) out.push_back({a.piece, w});
        }
        return out;
    }
    double delta = p.kind == PieceKind::Flat ? 1e-3 * p.scale : 1e-3;
    int n = static_cast<int>(std::round(kTwoPi / step));
    for (int j = 0; j < n; ++j) {
        cx w = a.z + delta * std::polar(1.0, (j + 0.5) * step);
        if (p.depth(w) > 1e-9 * std::max(1.0, p.scale)) out.push_back({a.piece, w});
    }
    return out;
}

bool all_apexes_hit(const Surface& s, const std::vector<DelaunaySegment>& segs, std::vector<int>& missing)
{
    missing.clear();
    for (const auto& r : s.singularities) {
        bool point_like = r.order >= 2 || r.order == 0 || (r.order == 1 && r.residue.real() < 1.0 - 1e-9);
        if (!point_like) continue;
        bool hit = false;
        for (const auto& g : segs) hit = hit || g.record_a == r.id || g.record_b == r.id;
        if (!hit) missing.push_back(r.id);
    }
    return missing.empty();
}

}  // namespace

std::vector<DelaunaySegment> delaunay_segments(const Surface& s, const DelaunayOptions& opt)
{
    ExceptionalTag ex = is_exceptional(s);
    if (ex.exceptional) throw Error("ExceptionalSkip", "no Delaunay decomposition on the " + ex.tag);
    check_supported(s);
    Traversal tr{s, opt, {}, {}, 0};
    std::vector<int> missing;
    // every apex at a coarse step, then the missing ones at the fine step
    bool first = true;
    for (double step : {kPi / 16.0, kPi / 64.0}) {
        for (size_t pi = 0; pi < s.pieces.size(); ++pi) {
            for (const auto& a : s.apexes[pi]) {
                if (a.record < 0) continue;
                all_apexes_hit(s, tr.segments, missing);
                bool needed = first || std::find(missing.begin(), missing.end(), a.record) != missing.end();
                if (!needed) continue;
                for (const auto& seed : apex_seeds(s, a, step)) {
                    GrowResult g;
                    try {
                        g = grow_max_disk(s, seed, opt);
                    } catch (const Error& e) {
                        if (e.kind() == "SeedOnSingularity") continue;
                        throw;
                    }
                    if (g.outcome != DiskOutcome::Disk || g.disk.hits.size() < 2) continue;
                    tr.run_from(std::move(g.disk));
                    if (first) continue;
                    all_apexes_hit(s, tr.segments, missing);
                    if (std::find(missing.begin(), missing.end(), a.record) == missing.end()) break;
                }
            }
        }
        first = false;
        if (all_apexes_hit(s, tr.segments, missing)) break;
    }
    std::vector<DelaunaySegment> out = std::move(tr.segments);
    std::sort(out.begin(), out.end(), [](const DelaunaySegment& x, const DelaunaySegment& y) {
        auto key = [](const DelaunaySegment& g) {
            return std::make_tuple(std::min(g.record_a, g.record_b), std::max(g.record_a, g.record_b),
                                   g.midpoint.piece, g.midpoint.z.real(), g.midpoint.z.imag());
        };
        return key(x) < key(y);
    });
    return out;
}

std::string to_string(ComponentType t)
{
    switch (t) {
    case ComponentType::Polygon: return "Polygon";
    case ComponentType::ReebFinite: return "ReebFinite";
    case ComponentType::ReebSemiInfinite: return "ReebSemiInfinite";
    case ComponentType::TranslationSemiInfinite: return "TranslationSemiInfinite";
    case ComponentType::AntiConical: return "AntiConical";
    case ComponentType::Swath: return "Swath";
    }
    return "?";
}

namespace {

// Orientation of the witness hits relative to the segment direction at the midpoint.
int witness_orientation(const Surface& s, const DelaunaySegment& seg)
{
    const ImmersedDisk& w = seg.witness;
    cx a = w.hits[0].position, b = w.hits[1].position;
    cx m = 0.5 * (a + b);
    Root mr;
    if (!locate(s, disk_root(w), w.center, m, mr))
        throw Error("PivotFailed", "witness midpoint is not reachable", true);
    const Piece& pc = s.pieces[mr.piece];
    cx v = (b - a) / mr.chart.a / pc.dev_deriv(mr.z);
    Rep rep = normalize_point(s, {mr.piece, mr.z, v / std::abs(v)});
    return dot(rep.v, seg.direction) >= 0.0 ? 1 : -1;
}

void add_unique(std::vector<int>& v, int x)
{
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

DelaunayDecomposition components(const Surface& s, const std::vector<DelaunaySegment>& segments,
                                 const DelaunayOptions& opt)
{
    check_supported(s);
    DelaunayDecomposition dd;
    dd.segments = segments;
    dd.g = s.genus;
    dd.n = s.n;

    // exterior components from the singularity records
    for (const auto& r : s.singularities) {
        DelaunayComponent c;
        c.record = r.id;
        if (r.order >= 2) {
            c.type = ComponentType::Swath;
            for (int j = 0; j < r.order - 1; ++j) dd.components.push_back(c);
            continue;
        }
        if (r.order != 1 || r.residue.real() < 1.0 - 1e-9) continue;
        if (std::abs(r.residue - cx(1.0, 0.0)) <= 1e-9)
            c.type = ComponentType::TranslationSemiInfinite;
        else if (std::abs(r.residue.real() - 1.0) <= 1e-9)
            c.type = ComponentType::ReebSemiInfinite;
        else
            c.type = ComponentType::AntiConical;
        c.angle = r.cone_angle;
        c.factor = r.dilation;
        dd.components.push_back(c);
    }
    const size_t n_exterior = dd.components.size();

    std::vector<int> side_count(segments.size(), 0);
    for (size_t j = 0; j < segments.size(); ++j) {
        const DelaunaySegment& seg = segments[j];
        for (const auto& pp : seg.path) add_unique(dd.core_pieces, pp.piece);
        int orient = witness_orientation(s, seg);
        for (int e = 0; e < 2; ++e) {
            int side = e == 0 ? -orient : orient;
            PivotResult pr = pivot(s, seg.witness, e, opt);
            SegmentSide ss{static_cast<int>(j), side};
            if (pr.outcome != DiskOutcome::Disk) {
                dd.exterior_sides.push_back(ss);
                ++side_count[j];
                continue;
            }
            int found = -1;
            for (size_t c = n_exterior; c < dd.components.size(); ++c)
                if (same_disk(s, dd.components[c].disk, pr.next)) found = static_cast<int>(c);
            if (found < 0) {
                DelaunayComponent c;
                c.type = ComponentType::Polygon;
                c.sides = static_cast<int>(pr.next.hits.size());
                c.disk = pr.next;
                dd.components.push_back(std::move(c));
                found = static_cast<int>(dd.components.size()) - 1;
                const ImmersedDisk& pd = dd.components[found].disk;
                cx centroid = 0.0;
                for (const auto& h : pd.hits) centroid += h.position;
                centroid /= static_cast<double>(pd.hits.size());
                Root cr;
                if (locate(s, disk_root(pd), pd.center, centroid, cr)) add_unique(dd.core_pieces, cr.piece);
            }
            dd.components[found].boundary.push_back(ss);
        }
        if (side_count[j] == 2) dd.graph_core = true;
    }
    dd.beta = static_cast<int>(dd.exterior_sides.size());
    dd.t = 0;
    for (size_t c = n_exterior; c < dd.components.size(); ++c) {
        const auto& comp = dd.components[c];
        dd.t += comp.sides - 2;
        if (static_cast<int>(comp.boundary.size()) != comp.sides)
            dd.issues.push_back({"PolygonSides", "polygon " + std::to_string(c) + " has " +
                                                     std::to_string(comp.boundary.size()) + " boundary sides for " +
                                                     std::to_string(comp.sides) + " hits"});
    }

    // route each exterior side to the end it leads to
    for (const auto& ss : dd.exterior_sides) {
        const DelaunaySegment& seg = segments[ss.segment];
        const Piece& pc = s.pieces[seg.midpoint.piece];
        cx nrm = kI * seg.direction * static_cast<double>(ss.side);
        TraceOptions o;
        o.max_crossings = 10000;
        o.detect_closing = false;
        int rec = -1;
        try {
            TraceResult r = trace(s, {seg.midpoint.piece, seg.midpoint.z, nrm / pc.dev_deriv(seg.midpoint.z), 0.0}, o);
            for (const auto& tp : r.path) add_unique(dd.exterior_pieces, tp.piece);
            if (r.termination == Termination::HitApex) rec = r.apex_record;
            if (r.termination == Termination::Escaped && r.escape_cycle >= 0) rec = s.cycles[r.escape_cycle].record;
        } catch (const Error&) {
        }
        int target = -1;
        for (size_t c = 0; c < n_exterior; ++c)
            if (dd.components[c].record == rec && rec >= 0) {
                target = static_cast<int>(c);
                break;
            }
        if (target < 0 && n_exterior == 1) target = 0;
        if (target >= 0) dd.components[target].boundary.push_back(ss);
    }
    std::sort(dd.core_pieces.begin(), dd.core_pieces.end());
    std::sort(dd.exterior_pieces.begin(), dd.exterior_pieces.end());
    return dd;
}

DelaunayDecomposition delaunay_decomposition(const Surface& s, const DelaunayOptions& opt)
{
    return components(s, delaunay_segments(s, opt), opt);
}

ComplexityReport complexity_check(const Surface& s, const DelaunayDecomposition& d)
{
    ComplexityReport r;
    ExceptionalTag ex = is_exceptional(s);
    if (ex.exceptional) {
        r.skipped = true;
        r.skip_reason = "ExceptionalSkip";
        return r;
    }
    r.lhs = d.t + d.beta;
    r.rhs = 4 * d.g - 4 + 2 * d.n;
    r.segments = static_cast<int>(d.segments.size());
    r.segment_bound = 6 * d.g - 6 + 3 * d.n;
    r.identity_ok = r.lhs == r.rhs;
    r.bound_ok = r.segments <= r.segment_bound;
    r.flagged = d.graph_core;
    return r;
}

namespace {

struct Chord {
    int piece;
    cx a, b;      // developed coordinates of the piece
    cx wa;        // piece coordinates of a
    bool first, last;
};

std::vector<Chord> chords_of(const Surface& s, const DelaunaySegment& g)
{
    std::vector<Chord> out;
    for (size_t k = 0; k < g.path.size(); ++k) {
        const PathPart& pp = g.path[k];
        if (pp.points.size() < 2) continue;
        const Piece& p = s.pieces[pp.piece];
        out.push_back({pp.piece, p.dev(pp.points.front()), p.dev(pp.points.back()), pp.points.front(), k == 0,
                       k + 1 == g.path.size()});
    }
    return out;
}

bool chords_cross(const Surface& s, const Chord& x, const Chord& y)
{
    if (x.piece != y.piece) return false;
    cx dx = x.b - x.a, dy = y.b - y.a;
    double den = cross(dx, dy);
    if (std::abs(den) <= 1e-14 * std::abs(dx) * std::abs(dy)) return false;
    double u = cross(y.a - x.a, dy) / den;
    double v = cross(y.a - x.a, dx) / den;
    const double e = 1e-9;
    if (!(u > e && u < 1.0 - e && v > e && v < 1.0 - e)) return false;
    if (s.pieces[x.piece].kind == PieceKind::Log) {
        cx q = x.a + u * dx;
        cx wx = x.wa + std::log(q / x.a);
        cx wy = y.wa + std::log(q / y.a);
        if (std::abs(wx - wy) > 1e-6) return false;
    }
    return true;
}

}  // namespace

std::vector<std::pair<int, int>> segment_crossings(const Surface& s, const std::vector<DelaunaySegment>& segs)
{
    std::vector<std::vector<Chord>> ch;
    for (const auto& g : segs) ch.push_back(chords_of(s, g));
    std::vector<std::pair<int, int>> out;
    for (size_t i = 0; i < segs.size(); ++i)
        for (size_t j = i; j < segs.size(); ++j) {
            bool hit = false;
            for (size_t a = 0; a < ch[i].size() && !hit; ++a)
                for (size_t b = (i == j ? a + 1 : 0); b < ch[j].size() && !hit; ++b)
                    hit = chords_cross(s, ch[i][a], ch[j][b]);
            if (hit) out.push_back({static_cast<int>(i), static_cast<int>(j)});
        }
    return out;
}

}  // namespace affsurf
