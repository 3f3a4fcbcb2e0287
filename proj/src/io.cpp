#include "affsurf/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace affsurf {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error("InvalidInput", what); }

const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
    return j.at(key);
}

int int_from_json(const json& j)
{
    if (j.is_number_integer()) return j.get<int>();
    double v = number_from_json(j);
    if (v != std::floor(v)) bad("expected an integer");
    return static_cast<int>(v);
}

int piece_ref(const Surface& s, const json& j)
{
    int idx = -1;
    if (j.is_string()) {
        idx = s.piece_index(j.get<std::string>());
        if (idx < 0) {
            char* end = nullptr;
            const std::string str = j.get<std::string>();
            long v = std::strtol(str.c_str(), &end, 10);
            if (end && *end == '\0' && !str.empty()) idx = static_cast<int>(v);
        }
    } else {
        idx = int_from_json(j);
    }
    if (idx < 0 || idx >= static_cast<int>(s.pieces.size())) bad("unknown piece reference");
    return idx;
}

json halfplane_to_json(const HalfPlane& h)
{
    json j{{"p", cx_to_json(h.p)}, {"n", cx_to_json(h.n)}};
    if (!h.breaks.empty()) {
        json b = json::array();
        for (cx z : h.breaks) b.push_back(cx_to_json(z));
        j["breaks"] = b;
    }
    return j;
}

HalfPlane halfplane_from_json(const json& j)
{
    HalfPlane h{cx_from_json(field(j, "p")), cx_from_json(field(j, "n")), {}};
    if (!(std::abs(h.n) > 0.0)) bad("half-plane normal is zero");
    h.n /= std::abs(h.n);
    if (j.contains("breaks"))
        for (const auto& b : j.at("breaks")) h.breaks.push_back(cx_from_json(b));
    return h;
}

json side_ref(const Surface& s, int piece, int side)
{
    const Piece& p = s.pieces[piece];
    int edge = p.sides[side].edge;
    json j{{"piece", piece}, {"edge", edge}};
    int sub = side - p.edges[edge].first_side;
    if (sub != 0) j["side"] = sub;
    return j;
}

void side_from_json(const Surface& s, const json& j, int& piece, int& side)
{
    piece = piece_ref(s, field(j, "piece"));
    const Piece& p = s.pieces[piece];
    int edge = int_from_json(field(j, "edge"));
    if (edge < 0 || edge >= static_cast<int>(p.edges.size())) bad("edge index out of range");
    int sub = j.contains("side") ? int_from_json(j.at("side")) : 0;
    int last = edge + 1 < static_cast<int>(p.edges.size()) ? p.edges[edge + 1].first_side
                                                           : static_cast<int>(p.sides.size());
    side = p.edges[edge].first_side + sub;
    if (sub < 0 || side >= last) bad("side index out of range");
}

json parts_to_json(const std::vector<TrapPart>& parts)
{
    json a = json::array();
    for (const auto& part : parts) {
        json c = json::array();
        for (const auto& h : part.constraints) c.push_back(halfplane_to_json(h));
        json j{{"piece", part.piece}, {"constraints", c}};
        if (part.outside_disk) {
            j["outside_disk"] = true;
            j["center"] = cx_to_json(part.disk_center);
            j["radius"] = part.disk_radius;
        }
        a.push_back(j);
    }
    return a;
}

std::vector<TrapPart> parts_from_json(const Surface& s, const json& a)
{
    std::vector<TrapPart> out;
    for (const auto& j : a) {
        TrapPart part;
        part.piece = piece_ref(s, field(j, "piece"));
        if (j.contains("constraints"))
            for (const auto& h : j.at("constraints")) part.constraints.push_back(halfplane_from_json(h));
        if (j.value("outside_disk", false)) {
            part.outside_disk = true;
            part.disk_center = cx_from_json(field(j, "center"));
            part.disk_radius = number_from_json(field(j, "radius"));
        }
        out.push_back(part);
    }
    return out;
}

json opt_bool(const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); }

}  // namespace

json cx_to_json(cx z) { return json::array({z.real(), z.imag()}); }

double number_from_json(const json& j)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string str = j.get<std::string>();
        char* end = nullptr;
        double v = std::strtod(str.c_str(), &end);
        if (str.empty() || !end || *end != '\0') bad("malformed number '" + str + "'");
        return v;
    }
    bad("expected a number");
}

cx cx_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 2) bad("expected a [re, im] pair");
    return {number_from_json(j[0]), number_from_json(j[1])};
}

json surface_to_json(const Surface& s)
{
    json j;
    j["version"] = "affsurf-v1";
    if (!s.name.empty()) j["name"] = s.name;
    json pieces = json::array();
    for (const auto& p : s.pieces) {
        json hps = json::array();
        for (const auto& h : p.halfplanes) hps.push_back(halfplane_to_json(h));
        pieces.push_back({{"id", p.id}, {"kind", p.kind == PieceKind::Flat ? "flat" : "log"}, {"halfplanes", hps}});
    }
    j["pieces"] = pieces;
    json prs = json::array();
    for (const auto& pr : s.pairings) {
        json anchors = json::array();
        for (const auto& a : pr.anchors) anchors.push_back({{"z1", cx_to_json(a.z1)}, {"z2", cx_to_json(a.z2)}});
        prs.push_back({{"s1", side_ref(s, pr.p1, pr.s1)},
                       {"s2", side_ref(s, pr.p2, pr.s2)},
                       {"a", cx_to_json(pr.dev.a)},
                       {"b", cx_to_json(pr.dev.b)},
                       {"anchors", anchors}});
    }
    j["pairings"] = prs;
    json marks = json::array();
    for (const auto& m : s.marks) marks.push_back({{"piece", m.piece}, {"z", cx_to_json(m.z)}});
    j["marks"] = marks;
    if (!s.hints.empty()) {
        json recs = json::array();
        for (const auto& h : s.hints) {
            json r{{"piece", h.piece}, {"at_infinity", h.at_infinity}, {"order", h.order}};
            if (h.at_infinity)
                r["direction"] = cx_to_json(h.direction);
            else
                r["point"] = cx_to_json(h.point);
            if (h.centered) r["centered"] = *h.centered;
            if (h.shifted) r["shifted"] = *h.shifted;
            if (!h.label.empty()) r["label"] = h.label;
            if (!h.family_u.empty()) {
                json u = json::array();
                for (cx z : h.family_u) u.push_back(cx_to_json(z));
                r["family_u"] = u;
                r["family_b"] = cx_to_json(h.family_b);
            }
            if (h.residue) r["residue"] = cx_to_json(*h.residue);
            recs.push_back(r);
        }
        j["records"] = recs;
    }
    if (!s.overlaps.empty()) {
        json ovs = json::array();
        for (const auto& o : s.overlaps)
            ovs.push_back({{"p1", o.p1}, {"p2", o.p2}, {"s", cx_to_json(o.glue.s)}, {"b", cx_to_json(o.glue.b)}});
        j["overlaps"] = ovs;
    }
    if (!s.traps.empty()) {
        json trs = json::array();
        for (const auto& t : s.traps)
            trs.push_back({{"id", t.id}, {"kind", t.kind}, {"entry", parts_to_json(t.entry)}, {"hold", parts_to_json(t.hold)}});
        j["traps"] = trs;
    }
    if (s.allow_boundary) j["boundary"] = true;
    return j;
}

Surface surface_from_json(const json& j)
{
    if (!j.is_object()) bad("surface document must be an object");
    if (!j.contains("version") || j.at("version") != "affsurf-v1") bad("unsupported version");
    Surface s;
    s.name = j.value("name", std::string());
    for (const auto& pj : field(j, "pieces")) {
        Piece p;
        p.id = field(pj, "id").get<std::string>();
        std::string kind = pj.value("kind", std::string("flat"));
        if (kind == "flat")
            p.kind = PieceKind::Flat;
        else if (kind == "log")
            p.kind = PieceKind::Log;
        else
            bad("unknown piece kind '" + kind + "'");
        if (pj.contains("halfplanes"))
            for (const auto& h : pj.at("halfplanes")) p.halfplanes.push_back(halfplane_from_json(h));
        derive_edges(p);
        s.pieces.push_back(std::move(p));
    }
    if (j.contains("pairings"))
        for (const auto& pj : j.at("pairings")) {
            Pairing pr;
            side_from_json(s, field(pj, "s1"), pr.p1, pr.s1);
            side_from_json(s, field(pj, "s2"), pr.p2, pr.s2);
            pr.dev.a = pj.contains("a") ? cx_from_json(pj.at("a")) : cx(1.0, 0.0);
            pr.dev.b = pj.contains("b") ? cx_from_json(pj.at("b")) : cx(0.0, 0.0);
            if (pj.contains("anchors"))
                for (const auto& a : pj.at("anchors"))
                    pr.anchors.push_back({cx_from_json(field(a, "z1")), cx_from_json(field(a, "z2"))});
            s.pairings.push_back(pr);
        }
    if (j.contains("marks"))
        for (const auto& m : j.at("marks")) s.marks.push_back({piece_ref(s, field(m, "piece")), cx_from_json(field(m, "z"))});
    if (j.contains("records"))
        for (const auto& r : j.at("records")) {
            CycleHint h;
            h.piece = piece_ref(s, field(r, "piece"));
            h.at_infinity = r.value("at_infinity", true);
            if (r.contains("direction")) h.direction = cx_from_json(r.at("direction"));
            if (r.contains("point")) h.point = cx_from_json(r.at("point"));
            h.order = r.contains("order") ? int_from_json(r.at("order")) : 1;
            if (r.contains("centered") && !r.at("centered").is_null()) h.centered = r.at("centered").get<bool>();
            if (r.contains("shifted") && !r.at("shifted").is_null()) h.shifted = r.at("shifted").get<bool>();
            h.label = r.value("label", std::string());
            if (r.contains("family_u"))
                for (const auto& u : r.at("family_u")) h.family_u.push_back(cx_from_json(u));
            if (r.contains("family_b")) h.family_b = cx_from_json(r.at("family_b"));
            if (r.contains("residue")) h.residue = cx_from_json(r.at("residue"));
            s.hints.push_back(h);
        }
    if (j.contains("overlaps"))
        for (const auto& o : j.at("overlaps"))
            s.overlaps.push_back({piece_ref(s, field(o, "p1")), piece_ref(s, field(o, "p2")),
                                  LogGlue{cx_from_json(field(o, "s")), cx_from_json(field(o, "b"))}});
    if (j.contains("traps"))
        for (const auto& t : j.at("traps"))
            s.traps.push_back({t.value("id", std::string()), t.value("kind", std::string()),
                               parts_from_json(s, field(t, "entry")), parts_from_json(s, field(t, "hold"))});
    s.allow_boundary = j.value("boundary", false);
    finalize(s);
    return s;
}

Surface read_surface(const std::string& path)
{
    std::ifstream in(path);
    if (!in) bad("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        bad(std::string("malformed JSON: ") + e.what());
    }
    try {
        return surface_from_json(j);
    } catch (const json::exception& e) {
        bad(std::string("malformed surface: ") + e.what());
    }
}

void write_surface(const Surface& s, const std::string& path)
{
    std::ofstream out(path);
    if (!out) bad("cannot write " + path);
    out << surface_to_json(s).dump(2) << "\n";
}

json report_to_json(const ValidationReport& r)
{
    json issues = json::array();
    for (const auto& i : r.issues) issues.push_back({{"kind", i.kind}, {"detail", i.detail}});
    return {{"ok", r.ok},
            {"genus", r.genus},
            {"n", r.n},
            {"residue_sum", cx_to_json(r.residue_sum)},
            {"has_boundary", r.has_boundary},
            {"issues", issues}};
}

json records_to_json(const Surface& s)
{
    json a = json::array();
    for (const auto& r : s.singularities) {
        json j{{"id", r.id},
               {"order", r.order},
               {"residue", cx_to_json(r.residue)},
               {"cone_angle", r.cone_angle},
               {"dilation", r.dilation},
               {"centered", opt_bool(r.centered)},
               {"shifted", opt_bool(r.shifted)},
               {"mark", r.mark}};
        if (!r.label.empty()) j["label"] = r.label;
        if (!r.family_u.empty()) {
            json u = json::array();
            for (cx z : r.family_u) u.push_back(cx_to_json(z));
            j["family_u"] = u;
            j["family_b"] = cx_to_json(r.family_b);
        }
        a.push_back(j);
    }
    return a;
}

json trace_to_json(const TraceResult& r)
{
    json path = json::array();
    for (const auto& seg : r.path) {
        json pts = json::array();
        for (cx z : seg.points) pts.push_back(cx_to_json(z));
        path.push_back({{"piece", seg.piece}, {"t0", seg.t0}, {"t1", seg.t1}, {"points", pts}});
    }
    json j{{"termination", to_string(r.termination)},
           {"time", r.time},
           {"crossings", r.crossings},
           {"path", path},
           {"final", {{"piece", r.final_state.piece}, {"z", cx_to_json(r.final_state.z)}, {"v", cx_to_json(r.final_state.v)}}}};
    if (r.termination == Termination::HitApex) {
        j["apex_record"] = r.apex_record;
        j["apex_focus"] = r.apex_focus;
    }
    if (r.termination == Termination::ClosedUp) {
        j["period"] = r.period;
        j["holonomy_factor"] = r.holonomy_factor;
    }
    if (r.termination == Termination::EnteredTrap) j["trap"] = r.trap_id;
    if (r.termination == Termination::Escaped) j["escape_cycle"] = r.escape_cycle;
    return j;
}

}  // namespace affsurf
