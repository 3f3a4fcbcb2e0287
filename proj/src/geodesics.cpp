#include "affsurf/geodesics.hpp"

#include <algorithm>
#include <cmath>

namespace affsurf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(cx a, cx b) { return a.real() * b.real() + a.imag() * b.imag(); }
double cross(cx a, cx b) { return (std::conj(a) * b).imag(); }

struct Exit {
    double tau = kInf;
    int edge = -1;
};

struct Segment {
    Exit exit;
    std::vector<cx> samples;  // piece coordinates along the segment, including both ends
    std::vector<double> sample_tau;
    bool reached_cap = false;
    bool focus = false;  // ran into the focus of a log piece
    double focus_tau = kInf;
};

cx log_point(cx z, cx v, double tau) { return z + std::log(1.0 + tau * v); }

int side_at(const Piece& p, int edge, cx w)
{
    const Edge& e = p.edges[edge];
    double t = dot(w - e.origin, e.dir);
    int best = e.first_side;
    for (int k = e.first_side; k < static_cast<int>(p.sides.size()) && p.sides[k].edge == edge; ++k)
        if (t >= p.sides[k].t0) best = k;
    return best;
}

Segment flat_segment(const Piece& p, cx z, cx v, double cap)
{
    Segment seg;
    for (size_t k = 0; k < p.edges.size(); ++k) {
        const HalfPlane& h = p.halfplanes[p.edges[k].halfplane];
        double nv = dot(h.n, v);
        if (!(nv < 0.0)) continue;
        double tau = std::max(0.0, -dot(h.n, z - h.p) / nv);
        if (tau < seg.exit.tau) seg.exit = {tau, static_cast<int>(k)};
    }
    if (seg.exit.tau > cap) {
        seg.exit = {};
        seg.reached_cap = std::isfinite(cap);
    }
    double end = std::isfinite(seg.exit.tau) ? seg.exit.tau : cap;
    seg.samples = {z};
    seg.sample_tau = {0.0};
    if (std::isfinite(end)) {
        seg.samples.push_back(z + end * v);
        seg.sample_tau.push_back(end);
    }
    return seg;
}

// Log piece: w(tau) = z + Log(1 + tau v) is the lift of the developed line e^z (1 + tau v).
Segment log_segment(const Piece& p, cx z, cx v, double cap, bool focus_apex, double hit_rel)
{
    Segment seg;
    seg.samples = {z};
    seg.sample_tau = {0.0};
    double av = std::abs(v);
    bool toward_focus = focus_apex && v.real() < 0.0 && std::abs(v.imag()) <= hit_rel * av;
    double tau_focus = toward_focus ? -1.0 / v.real() : kInf;

    auto g = [&](int k, cx w) {
        const HalfPlane& h = p.halfplanes[p.edges[k].halfplane];
        return dot(h.n, w - h.p);
    };
    // asymptotic sign of each constraint as tau -> infinity
    auto escapes = [&](cx w) {
        for (size_t k = 0; k < p.edges.size(); ++k) {
            const HalfPlane& h = p.halfplanes[p.edges[k].halfplane];
            if (h.n.real() < -1e-12) return false;
            if (std::abs(h.n.real()) <= 1e-12 && g(static_cast<int>(k), w) < 0.0) return false;
        }
        return true;
    };

    double tau = 0.0;
    cx w = z;
    std::vector<double> gv(p.edges.size());
    for (size_t k = 0; k < p.edges.size(); ++k) gv[k] = g(static_cast<int>(k), z);
    int steps = 0;
    while (true) {
        cx q = 1.0 + tau * v;
        double aq = std::abs(q);
        if (toward_focus && (aq < 1e-13 || tau >= tau_focus * (1.0 - 1e-13))) {
            seg.focus = true;
            seg.focus_tau = tau_focus;
            return seg;
        }
        double rate_arg = std::abs((v / q).imag());
        double rate_log = av / aq;
        double dtau = std::min(0.01 / std::max(rate_arg, 1e-300), 1.0 / rate_log);
        if (toward_focus) dtau = std::min(dtau, 0.5 * (tau_focus - tau));
        double tn = tau + dtau;
        bool capped = false;
        if (tn >= cap) {
            tn = cap;
            capped = true;
        }
        cx wn = log_point(z, v, tn);
        int hit = -1;
        double hit_tau = kInf;
        for (size_t k = 0; k < p.edges.size(); ++k) {
            double gn = g(static_cast<int>(k), wn);
            if (gn < 0.0 && (gv[k] >= 0.0 || tau == 0.0)) {
                double lo = tau, hi = tn;
                if (gv[k] < 0.0) hi = tau;  // already outside at the start
                for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (g(static_cast<int>(k), log_point(z, v, mid)) < 0.0)
                        hi = mid;
                    else
                        lo = mid;
                }
                if (hi < hit_tau) {
                    hit_tau = hi;
                    hit = static_cast<int>(k);
                }
            }
            gv[k] = gn;
        }
        if (hit >= 0) {
            seg.exit = {hit_tau, hit};
            seg.samples.push_back(log_point(z, v, hit_tau));
            seg.sample_tau.push_back(hit_tau);
            return seg;
        }
        tau = tn;
        w = wn;
        if (++steps % 4 == 0 || capped) {
            seg.samples.push_back(w);
            seg.sample_tau.push_back(tau);
        }
        if (capped) {
            seg.reached_cap = true;
            return seg;
        }
        if (!toward_focus && (w.real() - z.real() > 60.0 || w.real() > 600.0) && escapes(w)) {
            if (!std::isfinite(cap)) return seg;
        }
        if (w.real() > 700.0) return seg;
    }
}

bool on_apex(const Piece& p, const Apex& a, cx z, cx v, double tau_lo, double tau_hi, double rel, double& tau_hit)
{
    if (a.focus) return false;
    cx z0 = p.dev(z);
    cx V = p.dev_deriv(z) * v;
    cx za = p.dev(a.z);
    double vv = std::norm(V);
    double tc = dot(V, za - z0) / vv;
    if (tc < tau_lo || tc > tau_hi) return false;
    double scale = p.kind == PieceKind::Flat ? p.scale : std::abs(za) * std::max(1.0, p.scale);
    if (std::abs(z0 + tc * V - za) > rel * scale) return false;
    if (p.kind == PieceKind::Log && std::abs(log_point(z, v, tc) - a.z) > 1e-6) return false;
    tau_hit = tc;
    return true;
}

}  // namespace

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::HitApex: return "HitApex";
    case Termination::EnteredTrap: return "EnteredTrap";
    case Termination::TimedOut: return "TimedOut";
    case Termination::CrossingsCapped: return "CrossingsCapped";
    case Termination::ClosedUp: return "ClosedUp";
    case Termination::ExitedSurface: return "ExitedSurface";
    case Termination::Escaped: return "Escaped";
    }
    return "?";
}

TraceResult trace(const Surface& s, const GeodesicState& start, const TraceOptions& opt)
{
    if (start.piece < 0 || start.piece >= static_cast<int>(s.pieces.size()))
        throw Error("StartOutsidePiece", "start piece does not exist");
    const Piece& p0 = s.pieces[start.piece];
    if (!p0.contains(start.z, tol().eps_geom * std::max(1.0, p0.scale)))
        throw Error("StartOutsidePiece", "start position is outside its piece");
    if (!(std::abs(start.v) > tol().eps_zero)) throw Error("ZeroVelocity", "start velocity vanishes");

    TraceResult res;
    GeodesicState st = start;
    const cx zeta_s = p0.dev(start.z);
    const cx vel_s = p0.dev_deriv(start.z) * start.v;
    double length_in_start = 0.0;
    int stuck = 0;

    while (true) {
        const Piece& pc = s.pieces[st.piece];
        double cap = opt.t_max - (st.t - start.t);
        bool has_focus = false;
        for (const auto& a : s.apexes[st.piece]) has_focus = has_focus || a.focus;
        Segment seg = pc.kind == PieceKind::Flat ? flat_segment(pc, st.z, st.v, cap)
                                                 : log_segment(pc, st.z, st.v, cap, has_focus, opt.hit_rel);
        double seg_end = seg.focus ? seg.focus_tau : std::isfinite(seg.exit.tau) ? seg.exit.tau : cap;

        // earliest event along this segment
        enum class Ev { None, Apex, Close, Trap } ev = Ev::None;
        double ev_tau = seg_end;
        const Apex* hit_apex = nullptr;
        for (const auto& a : s.apexes[st.piece]) {
            double th;
            double lo = st.t == start.t && res.crossings == 0 ? 1e-12 : 0.0;
            if (on_apex(pc, a, st.z, st.v, lo, seg_end + 1e-12 * (1.0 + seg_end), opt.hit_rel, th) && th <= ev_tau) {
                ev = Ev::Apex;
                ev_tau = th;
                hit_apex = &a;
            }
        }
        if (opt.detect_closing && st.piece == start.piece && (res.crossings > 0)) {
            cx z0 = pc.dev(st.z);
            cx V = pc.dev_deriv(st.z) * st.v;
            // compare in the start chart: developed coordinates of the same piece agree up to the chart map
            cx ratio = V / vel_s;
            if (std::abs(ratio.imag()) <= 1e-8 * std::abs(ratio) && ratio.real() > 0.0) {
                double tc = dot(V, zeta_s - z0) / std::norm(V);
                double scale = pc.kind == PieceKind::Flat ? pc.scale : std::abs(zeta_s) * std::max(1.0, pc.scale);
                bool on = tc >= 0.0 && tc <= seg_end && std::abs(z0 + tc * V - zeta_s) <= 1e-8 * scale;
                if (on && pc.kind == PieceKind::Log && std::abs(log_point(st.z, st.v, tc) - start.z) > 1e-6) on = false;
                if (on && tc <= ev_tau) {
                    ev = Ev::Close;
                    ev_tau = tc;
                }
            }
        }
        int trap_idx = -1;
        if (opt.stop_on_trap) {
            for (size_t i = 0; i < seg.samples.size() && trap_idx < 0; ++i) {
                if (seg.sample_tau[i] > ev_tau) break;
                if (res.crossings == 0 && i == 0) continue;
                for (size_t tr = 0; tr < s.traps.size(); ++tr)
                    if (trap_contains(s.traps[tr].entry, st.piece, seg.samples[i])) {
                        trap_idx = static_cast<int>(tr);
                        ev = Ev::Trap;
                        ev_tau = seg.sample_tau[i];
                        break;
                    }
            }
        }

        // record polyline up to the event
        TracePiece tp;
        tp.piece = st.piece;
        tp.t0 = st.t;
        tp.chart = res.chart;
        for (size_t i = 0; i < seg.samples.size(); ++i)
            if (seg.sample_tau[i] < ev_tau) tp.points.push_back(seg.samples[i]);
        auto point_at = [&](double tau) {
            return pc.kind == PieceKind::Flat ? st.z + tau * st.v : log_point(st.z, st.v, tau);
        };
        double dev_speed = std::abs(pc.dev_deriv(st.z) * st.v) / std::abs(res.chart.a);

        if (ev != Ev::None || seg.focus) {
            double tau = ev_tau;
            if (ev == Ev::None) tau = seg.focus_tau;
            if (!(ev == Ev::Apex && hit_apex->focus) && !seg.focus) tp.points.push_back(point_at(tau));
            tp.t1 = st.t + tau;
            res.path.push_back(tp);
            res.time = st.t + tau;
            length_in_start += tau * dev_speed;
            res.final_state = {st.piece, seg.focus && ev == Ev::None ? st.z : point_at(tau), st.v, res.time};
            if (ev == Ev::Apex) {
                res.termination = Termination::HitApex;
                res.apex_record = hit_apex->record;
                res.apex_cycle = hit_apex->cycle;
            } else if (ev == Ev::Close) {
                res.termination = Termination::ClosedUp;
                cx V = pc.dev_deriv(st.z) * st.v;
                res.holonomy_factor = std::abs(V) / std::abs(vel_s);
                res.period = length_in_start;
            } else if (ev == Ev::Trap) {
                res.termination = Termination::EnteredTrap;
                res.trap_id = s.traps[trap_idx].id;
            } else {
                res.termination = Termination::HitApex;
                res.apex_focus = true;
                for (const auto& a : s.apexes[st.piece])
                    if (a.focus) {
                        res.apex_record = a.record;
                        res.apex_cycle = a.cycle;
                    }
            }
            return res;
        }

        if (!std::isfinite(seg.exit.tau)) {
            double tau = std::isfinite(cap) ? cap : 0.0;
            if (std::isfinite(cap) && pc.kind == PieceKind::Flat) tp.points.push_back(point_at(tau));
            tp.t1 = st.t + tau;
            res.path.push_back(tp);
            res.time = st.t + tau;
            res.final_state = {st.piece, point_at(tau), st.v, res.time};
            if (pc.kind == PieceKind::Log) res.final_state.v = st.v / (1.0 + tau * st.v);
            // end reached by the ray
            cx dir = pc.kind == PieceKind::Flat ? st.v : cx(1.0, 0.0);
            for (int k = 0; k < static_cast<int>(pc.sides.size()); ++k)
                if (end_contains_direction(pc, k, dir)) res.escape_cycle = s.corner_cycle[st.piece][k];
            if (pc.sides.empty()) res.escape_cycle = s.corner_cycle[st.piece][0];
            res.termination = std::isfinite(cap) && seg.reached_cap ? Termination::TimedOut : Termination::Escaped;
            return res;
        }

        // cross
        double tau = seg.exit.tau;
        cx w = point_at(tau);
        cx vexit = pc.kind == PieceKind::Flat ? st.v : st.v / (1.0 + tau * st.v);
        tp.points.push_back(w);
        tp.t1 = st.t + tau;
        res.path.push_back(tp);
        length_in_start += tau * dev_speed;
        stuck = tau <= 1e-13 * (1.0 + std::abs(w)) ? stuck + 1 : 0;
        if (stuck > 8) {
            res.termination = Termination::TimedOut;
            res.time = st.t + tau;
            res.final_state = {st.piece, w, vexit, res.time};
            return res;
        }
        if (res.crossings >= opt.max_crossings) {
            res.termination = Termination::CrossingsCapped;
            res.time = st.t + tau;
            res.final_state = {st.piece, w, vexit, res.time};
            return res;
        }
        int side = side_at(pc, seg.exit.edge, w);
        const PairRef& r = s.side_pair[st.piece][side];
        GeodesicState nx;
        nx.t = st.t + tau;
        if (r.pairing >= 0) {
            Placement pl = transfer(s, r.pairing, r.which, w, vexit);
            res.chart = compose(pairing_map(s, r.pairing, r.which), res.chart);
            nx.piece = pl.piece;
            nx.z = pl.z;
            nx.v = pl.v;
        } else {
            bool moved = false;
            double best = -kInf;
            for (const auto& ov : s.overlaps) {
                for (int dirn : {1, 2}) {
                    int from = dirn == 1 ? ov.p1 : ov.p2;
                    if (from != st.piece) continue;
                    int to = dirn == 1 ? ov.p2 : ov.p1;
                    LogGlue gl = dirn == 1 ? ov.glue : log_glue_inverse(ov.glue);
                    cx w2;
                    try {
                        w2 = log_glue_apply(gl, w);
                    } catch (const Error&) {
                        continue;
                    }
                    cx deriv = 1.0 / (1.0 + gl.b * std::exp(-w - gl.s));
                    cx v2 = deriv * vexit;
                    const Piece& tgt = s.pieces[to];
                    double d = tgt.depth(w2);
                    double d2 = tgt.depth(w2 + 1e-6 * v2 / std::abs(v2));
                    if (d > -1e-9 && d2 > d - 1e-12 && d > best) {
                        best = d;
                        nx.piece = to;
                        nx.z = w2;
                        nx.v = v2;
                        moved = true;
                    }
                }
            }
            if (!moved) {
                res.termination = Termination::ExitedSurface;
                res.time = st.t + tau;
                res.final_state = {st.piece, w, vexit, res.time};
                return res;
            }
            for (const auto& ov : s.overlaps) {
                if (ov.p1 == st.piece && ov.p2 == nx.piece) {
                    res.chart = compose(log_glue_dev(ov.glue), res.chart);
                    break;
                }
                if (ov.p2 == st.piece && ov.p1 == nx.piece) {
                    res.chart = compose(log_glue_dev(log_glue_inverse(ov.glue)), res.chart);
                    break;
                }
            }
        }
        ++res.crossings;
        st = nx;
    }
}

namespace {

struct LoopRun {
    AffMap chart;
    double turning = 0.0;
};

LoopRun run_loop(const Surface& s, const Loop& loop, bool check_cusps)
{
    if (loop.turns.empty()) throw Error("LoopNotClosed", "loop has no legs");
    LoopRun run;
    GeodesicState st = loop.start;
    cx vel = loop.start.v;
    TraceOptions o;
    o.t_max = 1.0;
    o.detect_closing = false;
    for (size_t k = 0; k < loop.turns.size(); ++k) {
        double ang = std::arg(loop.turns[k]);
        if (k > 0) {
            if (check_cusps && kPi - std::abs(ang) <= tol().eps_arg)
                throw Error("CuspDetected", "loop turns back on itself");
            run.turning += ang;
        }
        TraceResult tr = trace(s, {st.piece, st.z, loop.turns[k] * vel, 0.0}, o);
        if (tr.termination == Termination::HitApex)
            throw Error("LoopHitsSingularity", "loop leg runs into a singularity");
        if (tr.termination != Termination::TimedOut)
            throw Error("LoopNotClosed", "loop leg left the surface");
        run.chart = compose(tr.chart, run.chart);
        st = tr.final_state;
        vel = st.v;
    }
    const Piece& p = s.pieces[loop.start.piece];
    if (st.piece != loop.start.piece || std::abs(st.z - loop.start.z) > 1e-7 * std::max(1.0, p.scale))
        throw Error("LoopNotClosed", "loop does not return to its start");
    double closing = std::arg(loop.turns[0] * loop.start.v / vel);
    if (check_cusps && kPi - std::abs(closing) <= tol().eps_arg)
        throw Error("CuspDetected", "loop turns back on itself at its start");
    run.turning += closing;
    return run;
}

double dist_to_polyline(const std::vector<cx>& pts, cx z, double& signed_dist)
{
    double best = kInf;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        cx a = pts[i], b = pts[i + 1];
        cx d = b - a;
        double l2 = std::norm(d);
        if (l2 == 0.0) continue;
        double t = std::clamp(dot(z - a, d) / l2, 0.0, 1.0);
        double dd = std::abs(z - (a + t * d));
        if (dd < best) {
            best = dd;
            signed_dist = (std::conj(d) * (z - a)).imag() / std::sqrt(l2);
        }
    }
    return best;
}

}  // namespace

Holonomy holonomy(const Surface& s, const Loop& loop)
{
    LoopRun run = run_loop(s, loop, false);
    AffMap l = invert(run.chart);
    return {l.a, l};
}

double turning_number(const Surface& s, const Loop& loop)
{
    return run_loop(s, loop, true).turning / kTwoPi;
}

Cylinder extend_cylinder(const Surface& s, const GeodesicState& start, const TraceResult& closed)
{
    if (closed.termination != Termination::ClosedUp)
        throw Error("NotClosed", "extend_cylinder needs a closed geodesic");
    Cylinder cyl;
    cyl.factor = closed.holonomy_factor;
    cyl.kind = std::abs(cyl.factor - 1.0) <= 1e-9 ? CylinderKind::Translation : CylinderKind::Dilation;
    const double scale = s.scale();
    const double core_time = closed.time - start.t;
    const int cap = 4 * closed.crossings + 16;

    auto leaf_closes = [&](const GeodesicState& st, int* record) {
        TraceOptions o;
        o.t_max = 4.0 * core_time + 1.0;
        o.max_crossings = cap;
        TraceResult tr = trace(s, st, o);
        if (record) *record = tr.apex_record;
        return tr.termination == Termination::ClosedUp;
    };

    if (cyl.kind == CylinderKind::Translation) {
        const Piece& p0 = s.pieces[start.piece];
        const double speed = std::abs(p0.dev_deriv(start.z) * start.v);
        cx vhat = start.v / std::abs(start.v);
        for (int sigma : {1, -1}) {
            cx n = (sigma == 1 ? kI : -kI) * vhat;
            if (p0.kind == PieceKind::Log) n /= std::abs(p0.dev_deriv(start.z));
            const double orient = cross(n, start.v) > 0.0 ? 1.0 : -1.0;
            // first return of the transverse geodesic to the core leaf with the same orientation
            double wrap = kInf;
            {
                TraceOptions o;
                o.t_max = 50.0 * scale;
                o.detect_closing = false;
                o.max_crossings = 4 * cap;
                TraceResult tr = trace(s, {start.piece, start.z, n, 0.0}, o);
                for (const auto& seg : tr.path) {
                    if (s.pieces[seg.piece].kind != PieceKind::Flat || seg.points.size() < 2) continue;
                    cx a = seg.points.front(), b = seg.points.back();
                    for (const auto& core : closed.path) {
                        if (core.piece != seg.piece || core.points.size() < 2) continue;
                        cx c = core.points.front(), d = core.points.back();
                        double den = cross(b - a, d - c);
                        if (std::abs(den) < 1e-14 || (den > 0.0 ? 1.0 : -1.0) != orient) continue;
                        double t = cross(c - a, d - c) / den;
                        double u = cross(c - a, b - a) / den;
                        if (t < 0.0 || t > 1.0 || u < -1e-12 || u > 1.0 + 1e-12) continue;
                        double when = seg.t0 + t * (seg.t1 - seg.t0);
                        if (when > 1e-9 * scale) wrap = std::min(wrap, when);
                    }
                }
            }
            // sweep parallel leaves; the pattern of crossed sides only changes at piece vertices
            double delta = 0.0, extent = kInf;
            int boundary = -1;
            for (int it = 0; it < 10000; ++it) {
                double probe = delta == 0.0 ? 0.0 : delta + 1e-7 * scale;
                GeodesicState leaf = start;
                if (probe > 0.0) {
                    TraceOptions o;
                    o.t_max = probe;
                    o.detect_closing = false;
                    TraceResult tr = trace(s, {start.piece, start.z, n, 0.0}, o);
                    if (tr.termination != Termination::TimedOut) {
                        extent = delta;
                        break;
                    }
                    cx w = tr.final_state.v;
                    const Piece& pf = s.pieces[tr.final_state.piece];
                    cx lv = (sigma == 1 ? -kI : kI) * w;
                    lv *= speed / std::abs(pf.dev_deriv(tr.final_state.z) * lv) * std::abs(tr.chart.a);
                    leaf = {tr.final_state.piece, tr.final_state.z, lv, 0.0};
                }
                TraceOptions o;
                o.t_max = 2.0 * core_time;
                o.max_crossings = cap;
                TraceResult lt = trace(s, leaf, o);
                if (lt.termination != Termination::ClosedUp) {
                    extent = delta;
                    boundary = lt.apex_record;
                    break;
                }
                double best = kInf;
                int best_rec = -1;
                for (const auto& seg : lt.path) {
                    const Piece& pc = s.pieces[seg.piece];
                    if (pc.kind != PieceKind::Flat || seg.points.size() < 2) continue;
                    cx d = seg.points.back() - seg.points.front();
                    d /= std::abs(d);
                    double to_start = 1.0 / std::abs(seg.chart.a);
                    auto consider = [&](cx v, int rec) {
                        double h = sigma * cross(d, v - seg.points.front()) * to_start;
                        double base = probe - delta;
                        if (h <= 1e-12 * scale) return;
                        if (h + base < best - 1e-12 * scale || (std::abs(h + base - best) <= 1e-12 * scale && rec >= 0)) {
                            best = h + base;
                            best_rec = rec;
                        }
                    };
                    for (const auto& e : pc.edges) {
                        if (std::isfinite(e.t0)) consider(e.at(e.t0), -1);
                        for (double t : e.breaks) consider(e.at(t), -1);
                    }
                    for (const auto& ap : s.apexes[seg.piece])
                        if (!ap.focus) consider(ap.z, ap.record);
                }
                if (!std::isfinite(best) || delta + best >= wrap - 1e-9 * scale) break;
                delta += best;
                if (best_rec >= 0) {
                    extent = delta;
                    boundary = best_rec;
                    break;
                }
            }
            if (std::isfinite(wrap) && !std::isfinite(extent)) {
                cyl.closes_on_itself = true;
                cyl.extent = wrap;
                cyl.extent_plus = wrap;
                cyl.extent_minus = 0.0;
                return cyl;
            }
            if (boundary >= 0) cyl.boundary_records.push_back(boundary);
            (sigma == 1 ? cyl.extent_plus : cyl.extent_minus) = extent;
        }
        cyl.extent = cyl.extent_plus + cyl.extent_minus;
        return cyl;
    }

    // dilation: leaves are rays from the developed fixed point of the holonomy
    const Piece& p0 = s.pieces[start.piece];
    AffMap l = invert(closed.chart);
    cx fixed = l.b / (1.0 - l.a);
    cx zs = p0.dev(start.z);
    cx vs = p0.dev_deriv(start.z) * start.v;
    cx orient = vs / (zs - fixed);
    orient /= std::abs(orient);
    const double dphi = 0.005;
    for (int sigma : {1, -1}) {
        GeodesicState cur = start;
        AffMap chart;  // start dev -> current dev
        double phi = 0.0;
        double prev_signed = 0.0;
        bool have_prev = false;
        bool done = false;
        while (!done && phi < 20.0 * kPi) {
            const Piece& pc = s.pieces[cur.piece];
            cx zeta = invert(chart)(pc.dev(cur.z));
            cx next = fixed + (zeta - fixed) * std::exp(kI * (sigma * dphi));
            cx disp = chart.a * (next - zeta);
            cx v = disp / pc.dev_deriv(cur.z);
            TraceOptions o;
            o.t_max = 1.0;
            o.detect_closing = false;
            TraceResult tr = trace(s, {cur.piece, cur.z, v, 0.0}, o);
            if (tr.termination != Termination::TimedOut) break;
            chart = compose(tr.chart, chart);
            cur = {tr.final_state.piece, tr.final_state.z, 0.0, 0.0};
            const Piece& pn = s.pieces[cur.piece];
            cx zn = invert(chart)(pn.dev(cur.z));
            cx lv = chart.a * orient * (zn - fixed) / pn.dev_deriv(cur.z);
            int rec = -1;
            if (!leaf_closes({cur.piece, cur.z, lv, 0.0}, &rec)) {
                if (rec >= 0) cyl.boundary_records.push_back(rec);
                break;
            }
            phi += dphi;
            // back on the core leaf?
            for (const auto& core : closed.path) {
                if (core.piece != cur.piece) continue;
                double sd = 0.0;
                double d = dist_to_polyline(core.points, cur.z, sd);
                double r = std::abs(zn - fixed);
                if (d < 4.0 * dphi * std::max(1.0, r) && have_prev && (sd > 0.0) != (prev_signed > 0.0) &&
                    phi > 2.0 * dphi) {
                    cyl.closes_on_itself = true;
                    done = true;
                }
                if (d < 4.0 * dphi * std::max(1.0, r)) {
                    prev_signed = sd;
                    have_prev = true;
                }
            }
        }
        (sigma == 1 ? cyl.extent_plus : cyl.extent_minus) = phi;
        if (cyl.closes_on_itself) {
            cyl.extent = phi;
            cyl.extent_minus = 0.0;
            return cyl;
        }
    }
    cyl.extent = cyl.extent_plus + cyl.extent_minus;
    return cyl;
}

}  // namespace affsurf
