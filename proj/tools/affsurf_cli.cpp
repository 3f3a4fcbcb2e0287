#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "affsurf/builders.hpp"
#include "affsurf/delaunay.hpp"
#include "affsurf/doublepole.hpp"
#include "affsurf/fuchsian.hpp"
#include "affsurf/geodesics.hpp"
#include "affsurf/graft.hpp"
#include "affsurf/io.hpp"
#include "affsurf/irregular.hpp"
#include "svg.hpp"

using namespace affsurf;

namespace {

struct RunConfig {
    std::optional<double> eps;
    long max_pivots = DelaunayOptions{}.max_pivots;
    int max_crossings = TraceOptions{}.max_crossings;
};

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

void diag(const std::string& level, const std::string& kind, const std::string& message)
{
    std::cerr << json{{"level", level}, {"kind", kind}, {"message", message}}.dump() << "\n";
}

cx parse_cx(const std::string& text)
{
    std::string t = text;
    for (char& c : t)
        if (c == ',') c = ' ';
    std::istringstream is(t);
    double re = 0.0, im = 0.0;
    if (!(is >> re)) throw Error("InvalidInput", "expected re,im but got '" + text + "'");
    if (!(is >> im)) im = 0.0;
    std::string rest;
    if (is >> rest) throw Error("InvalidInput", "expected re,im but got '" + text + "'");
    return {re, im};
}

int parse_piece(const Surface& s, const std::string& text)
{
    int k = s.piece_index(text);
    if (k >= 0) return k;
    char* end = nullptr;
    long v = std::strtol(text.c_str(), &end, 10);
    if (end && *end == '\0' && v >= 0 && v < static_cast<long>(s.pieces.size())) return static_cast<int>(v);
    throw Error("InvalidInput", "unknown piece '" + text + "'");
}

double parse_angle(const std::string& text)
{
    if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (!end || *end != '\0') throw Error("InvalidInput", "bad angle '" + text + "'");
    return v;
}

void apply_env(RunConfig& cfg)
{
    if (const char* e = std::getenv("AFFSURF_EPS")) {
        char* end = nullptr;
        double v = std::strtod(e, &end);
        if (!end || *end != '\0') throw Error("InvalidInput", "AFFSURF_EPS is not a number");
        if (!cfg.eps) cfg.eps = v;
    }
    if (const char* b = std::getenv("AFFSURF_BUDGET_PIVOTS")) {
        char* end = nullptr;
        long v = std::strtol(b, &end, 10);
        if (!end || *end != '\0' || v <= 0) throw Error("InvalidInput", "AFFSURF_BUDGET_PIVOTS must be a positive integer");
        cfg.max_pivots = v;
    }
}

void apply_config(const RunConfig& cfg)
{
    if (cfg.eps) {
        if (!(*cfg.eps >= 1e-14 && *cfg.eps <= 1e-4)) throw Error("InvalidInput", "eps must lie in [1e-14, 1e-4]");
        Tolerances t = tol();
        t.eps_geom = *cfg.eps;
        set_tolerances(t);
    }
    if (cfg.max_pivots <= 0 || cfg.max_crossings <= 0) throw Error("InvalidInput", "budgets must be positive");
}

// Piece outline inside a box, in piece coordinates.
std::vector<cx> clip_box(const Piece& p, const svg::Box& b)
{
    std::vector<cx> poly = {cx(b.x0, b.y0), cx(b.x1, b.y0), cx(b.x1, b.y1), cx(b.x0, b.y1)};
    for (const auto& h : p.halfplanes) {
        std::vector<cx> out;
        auto f = [&](cx z) { return h.n.real() * (z - h.p).real() + h.n.imag() * (z - h.p).imag(); };
        for (size_t k = 0; k < poly.size(); ++k) {
            cx a = poly[k], c = poly[(k + 1) % poly.size()];
            double fa = f(a), fc = f(c);
            if (fa >= 0.0) out.push_back(a);
            if ((fa >= 0.0) != (fc >= 0.0)) out.push_back(a + (c - a) * (fa / (fa - fc)));
        }
        poly = out;
        if (poly.empty()) break;
    }
    return poly;
}

svg::Box piece_box(const Surface& s, int k, const std::vector<std::vector<cx>>& lines)
{
    const Piece& p = s.pieces[k];
    svg::Box b;
    for (const auto& e : p.edges) {
        if (std::isfinite(e.t0)) b.add(e.at(e.t0));
        if (std::isfinite(e.t1)) b.add(e.at(e.t1));
    }
    for (const auto& a : s.apexes[k])
        if (!a.focus) b.add(a.z);
    for (const auto& l : lines)
        for (cx z : l)
            if (std::isfinite(z.real()) && std::isfinite(z.imag())) b.add(z);
    if (b.empty) {
        b.add(cx(-1.0, -1.0));
        b.add(cx(1.0, 1.0));
    }
    double m = 0.15 * std::max({b.width(), b.height(), 1.0});
    b.x0 -= m;
    b.y0 -= m;
    b.x1 += m;
    b.y1 += m;
    return b;
}

void draw_surface(const Surface& s, const std::vector<std::vector<std::pair<int, std::vector<cx>>>>& paths,
                  const std::vector<int>& hatched, const std::string& out)
{
    svg::Canvas canvas;
    for (size_t k = 0; k < s.pieces.size(); ++k) {
        std::vector<std::vector<cx>> mine;
        for (const auto& path : paths)
            for (const auto& [piece, pts] : path)
                if (piece == static_cast<int>(k)) mine.push_back(pts);
        svg::Box box = piece_box(s, static_cast<int>(k), mine);
        const Piece& p = s.pieces[k];
        auto& panel = canvas.panel(p.id + (p.kind == PieceKind::Log ? " (log)" : ""), box);
        std::vector<cx> outline = clip_box(p, box);
        svg::Canvas::polygon(panel, outline, "fill=\"#d9d9d9\" stroke=\"#707070\"");
        if (std::find(hatched.begin(), hatched.end(), static_cast<int>(k)) != hatched.end())
            svg::Canvas::hatch(panel, outline);
        for (const auto& pts : mine) svg::Canvas::polyline(panel, pts, "stroke=\"#c0392b\"");
        double r = 0.012 * std::max(box.width(), box.height());
        for (const auto& a : s.apexes[k])
            if (!a.focus && a.record >= 0) svg::Canvas::dot(panel, a.z, r, "fill=\"#1d3557\"");
    }
    canvas.write(out);
}

json family_to_json(const AsymptoticFamily& f)
{
    json u = json::array();
    for (cx z : f.u) u.push_back(cx_to_json(z));
    return {{"d", f.d}, {"res", cx_to_json(f.res)}, {"u", u}, {"b", cx_to_json(f.b)}};
}

json map_to_json(const AffMap& m) { return {{"a", cx_to_json(m.a)}, {"b", cx_to_json(m.b)}}; }

json laurent_to_json(const LaurentSeries& s)
{
    json c = json::array();
    for (cx z : s.c) c.push_back(cx_to_json(z));
    return {{"lo", s.lo}, {"coeffs", c}};
}

LaurentSeries laurent_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("lo") || !j.contains("coeffs") || !j["coeffs"].is_array())
        throw Error("InvalidInput", "series needs 'lo' and 'coeffs'");
    LaurentSeries s;
    s.lo = j["lo"].get<int>();
    for (const auto& c : j["coeffs"]) s.c.push_back(cx_from_json(c));
    return s;
}

json decomposition_to_json(const Surface& s, const DelaunayDecomposition& d)
{
    json segs = json::array();
    for (const auto& g : d.segments) {
        json path = json::array();
        for (const auto& pp : g.path) {
            json pts = json::array();
            for (cx z : pp.points) pts.push_back(cx_to_json(z));
            path.push_back({{"piece", s.pieces[pp.piece].id}, {"points", pts}});
        }
        segs.push_back({{"endpoints", {g.record_a, g.record_b}},
                        {"focus", {g.focus_a, g.focus_b}},
                        {"length_developed", g.length},
                        {"path", path}});
    }
    json comps = json::array();
    for (const auto& c : d.components) {
        json j{{"type", to_string(c.type)}, {"sides", c.type == ComponentType::Polygon ? c.sides : static_cast<int>(c.boundary.size())}};
        if (c.record >= 0) j["record"] = c.record;
        comps.push_back(j);
    }
    ComplexityReport r = complexity_check(s, d);
    return {{"segments", segs},
            {"components", comps},
            {"counts",
             {{"t", d.t},
              {"beta", d.beta},
              {"g", d.g},
              {"n", d.n},
              {"identity_ok", r.identity_ok},
              {"segment_bound", r.segment_bound},
              {"bound_ok", r.bound_ok},
              {"graph_core", d.graph_core}}}};
}

Surface build_named(const std::string& kind, const std::vector<std::string>& marks_text, double s_factor, double alpha,
                    double lambda)
{
    std::vector<cx> marks;
    for (const auto& m : marks_text) marks.push_back(parse_cx(m));
    if (kind == "square-torus") return build_flat_torus(1.0, kI, marks);
    if (kind == "hex-torus") return build_flat_torus(1.0, std::polar(1.0, kPi / 3.0), marks);
    if (kind == "cushion") return build_cushion();
    if (kind == "plane") return build_plane(marks);
    if (kind == "exp-affine-plane") return build_exp_affine_plane();
    if (kind == "translation-cylinder") return build_translation_cylinder();
    if (kind == "affine-torus") return build_affine_torus(cx(1.0, 0.0), cx(0.0, kTwoPi));
    if (kind == "skew-cone") return build_skew_cone(s_factor, alpha);
    if (kind == "reeb-cylinder") return build_reeb_cylinder(lambda);
    if (kind == "strip-cylinder") return build_strip_cylinder();
    throw Error("InvalidInput", "unknown surface kind '" + kind + "'");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Affine surfaces: validation, geodesics, Delaunay decompositions and constructions"};
    app.require_subcommand(1);
    RunConfig cfg;
    app.add_option("--eps", cfg.eps, "geometric tolerance (overrides AFFSURF_EPS)");
    std::optional<long> pivots_flag;
    app.add_option("--max-pivots", pivots_flag, "pivot budget (overrides AFFSURF_BUDGET_PIVOTS)");
    app.add_option("--max-crossings", cfg.max_crossings, "crossing budget for traces");

    std::string file, res_text, svg_out, out_path, emit_surface;

    auto* validate_cmd = app.add_subcommand("validate", "validate a surface file");
    validate_cmd->add_option("file", file)->required();

    auto* classify_cmd = app.add_subcommand("classify", "classify singularities of a file or one residue");
    classify_cmd->add_option("file", file);
    classify_cmd->add_option("--res", res_text, "residue re,im");
    std::optional<bool> shifted;
    classify_cmd->add_option("--shifted", shifted, "shift flag for integer residues");

    auto* normal_cmd = app.add_subcommand("normalform", "formal normal form of a Christoffel series");
    normal_cmd->add_option("file", file)->required();
    std::optional<int> order_n;
    normal_cmd->add_option("--order", order_n, "truncation order N");

    auto* trace_cmd = app.add_subcommand("trace", "trace a geodesic");
    trace_cmd->add_option("file", file)->required();
    std::string piece_text, pos_text, dir_text;
    double tmax = std::numeric_limits<double>::infinity();
    trace_cmd->add_option("--piece", piece_text)->required();
    trace_cmd->add_option("--pos", pos_text)->required();
    trace_cmd->add_option("--dir", dir_text)->required();
    trace_cmd->add_option("--tmax", tmax);
    trace_cmd->add_option("--svg", svg_out);

    auto* delaunay_cmd = app.add_subcommand("delaunay", "Delaunay segments, components and counts");
    delaunay_cmd->add_option("file", file)->required();
    delaunay_cmd->add_option("--svg", svg_out);

    auto* model_cmd = app.add_subcommand("model", "canonical model of an irregular point");
    int d = 2;
    std::vector<std::string> u_text;
    std::string b_text = "0,0";
    std::optional<double> radius;
    model_cmd->add_option("--d", d)->required();
    model_cmd->add_option("--res", res_text)->required();
    model_cmd->add_option("--u", u_text, "asymptotic values re,im (d-1 of them)");
    model_cmd->add_option("--b", b_text);
    model_cmd->add_option("--R", radius);
    model_cmd->add_option("--emit-surface", emit_surface);

    auto* graft_cmd = app.add_subcommand("graft", "graft a sector along a slit");
    graft_cmd->add_option("file", file)->required();
    std::string slit_text, angle_text;
    double dilation = 1.0;
    bool any_start = false;
    graft_cmd->add_option("--slit", slit_text, "piece:x,y:dx,dy")->required();
    graft_cmd->add_option("--angle", angle_text, "sector angle in radians, or inf")->required();
    graft_cmd->add_option("--dilation", dilation);
    graft_cmd->add_flag("--any-start", any_start, "allow a non-conical start vertex");
    graft_cmd->add_option("--out", out_path);

    auto* gamma_cmd = app.add_subcommand("gamma", "loop integral against the Gamma prediction");
    double loop_r = 1.0;
    gamma_cmd->add_option("--res", res_text)->required();
    gamma_cmd->add_option("--r", loop_r);

    auto* construct_cmd = app.add_subcommand("construct", "genus-zero surface with one double pole");
    bool centered = false;
    int max_fuchsian = -1;
    construct_cmd->add_option("--res", res_text)->required();
    construct_cmd->add_flag("--centered", centered);
    construct_cmd->add_option("--max-fuchsian", max_fuchsian);
    construct_cmd->add_option("--out", out_path);

    auto* build_cmd = app.add_subcommand("build", "write a builder surface to a file");
    std::string kind;
    std::vector<std::string> marks_text;
    double s_factor = 2.0, alpha = 1.0, lambda = 2.0;
    build_cmd->add_option("kind", kind)->required();
    build_cmd->add_option("--mark", marks_text);
    build_cmd->add_option("--s", s_factor);
    build_cmd->add_option("--alpha", alpha);
    build_cmd->add_option("--lambda", lambda);
    build_cmd->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        diag("error", "Usage", e.what());
        return 1;
    }

    try {
        apply_env(cfg);
        if (pivots_flag) cfg.max_pivots = *pivots_flag;
        apply_config(cfg);

        if (validate_cmd->parsed()) {
            Surface s = read_surface(file);
            ValidationReport r = validate(s);
            emit({{"report", report_to_json(r)}, {"records", records_to_json(s)}});
            for (const auto& i : r.issues) diag("error", i.kind, i.detail);
            return r.ok ? 0 : 1;
        }
        if (classify_cmd->parsed()) {
            if (!res_text.empty()) {
                FuchsianClass c = classify_residue(parse_cx(res_text), shifted);
                json j{{"residue", cx_to_json(parse_cx(res_text))}, {"tag", to_string(c.tag)}, {"angle", c.angle}, {"factor", c.factor}};
                if (c.shifted) j["shifted"] = *c.shifted;
                emit(j);
                return 0;
            }
            if (file.empty()) throw Error("InvalidInput", "classify needs a file or --res");
            Surface s = read_surface(file);
            json recs = records_to_json(s);
            for (size_t k = 0; k < s.singularities.size(); ++k) {
                const auto& r = s.singularities[k];
                if (r.order == 1) recs[k]["class"] = to_string(classify_residue(r.residue, r.shifted).tag);
                else if (r.order == 0) recs[k]["class"] = "Marked";
                else recs[k]["class"] = "Irregular";
            }
            emit({{"records", recs}, {"exceptional", is_exceptional(s).exceptional}, {"model", is_exceptional(s).tag}});
            return 0;
        }
        if (normal_cmd->parsed()) {
            std::ifstream f(file);
            if (!f) throw Error("InvalidInput", "cannot open " + file);
            json j;
            try {
                f >> j;
            } catch (const json::exception& e) {
                throw Error("InvalidInput", std::string("malformed JSON: ") + e.what());
            }
            LaurentSeries g = laurent_from_json(j.contains("gamma") ? j["gamma"] : j);
            if (!order_n && j.contains("N")) order_n = j["N"].get<int>();
            NormalForm nf = formal_normal_form(g, order_n);
            json phi = json::array();
            for (cx z : nf.phi) phi.push_back(cx_to_json(z));
            emit({{"d", nf.d},
                  {"residue_coeff", cx_to_json(nf.residue_coeff)},
                  {"phi", phi},
                  {"normalized", laurent_to_json(nf.normalized)},
                  {"resonant", nf.resonant}});
            return 0;
        }
        if (trace_cmd->parsed()) {
            Surface s = read_surface(file);
            TraceOptions o;
            o.t_max = tmax;
            o.max_crossings = cfg.max_crossings;
            int p = parse_piece(s, piece_text);
            TraceResult r = trace(s, {p, parse_cx(pos_text), parse_cx(dir_text), 0.0}, o);
            emit(trace_to_json(r));
            if (!svg_out.empty()) {
                std::vector<std::pair<int, std::vector<cx>>> path;
                for (const auto& tp : r.path) path.push_back({tp.piece, tp.points});
                draw_surface(s, {path}, {}, svg_out);
            }
            return 0;
        }
        if (delaunay_cmd->parsed()) {
            Surface s = read_surface(file);
            DelaunayOptions opt;
            opt.max_pivots = cfg.max_pivots;
            DelaunayDecomposition dd = delaunay_decomposition(s, opt);
            emit(decomposition_to_json(s, dd));
            if (!svg_out.empty()) {
                std::vector<std::vector<std::pair<int, std::vector<cx>>>> paths;
                for (const auto& g : dd.segments) {
                    std::vector<std::pair<int, std::vector<cx>>> path;
                    for (const auto& pp : g.path) path.push_back({pp.piece, pp.points});
                    paths.push_back(path);
                }
                draw_surface(s, paths, dd.exterior_pieces, svg_out);
            }
            return 0;
        }
        if (model_cmd->parsed()) {
            AsymptoticFamily fam{d, parse_cx(res_text), {}, parse_cx(b_text)};
            for (const auto& t : u_text) fam.u.push_back(parse_cx(t));
            CanonicalModel m = build_canonical_model(fam, radius);
            json lam = json::array();
            for (const auto& l : m.lambda) lam.push_back(map_to_json(l));
            emit({{"d", m.d},
                  {"res", cx_to_json(m.res)},
                  {"s", cx_to_json(m.s)},
                  {"R", m.R},
                  {"margin", admissibility_margin(m)},
                  {"centered", is_centered(fam)},
                  {"lambda", lam},
                  {"L", map_to_json(m.L)},
                  {"family", family_to_json(extract_family_from_model(m))}});
            if (!emit_surface.empty()) write_surface(model_to_surface(m), emit_surface);
            return 0;
        }
        if (graft_cmd->parsed()) {
            Surface s = read_surface(file);
            auto a = slit_text.find(':'), b = slit_text.rfind(':');
            if (a == std::string::npos || a == b) throw Error("InvalidInput", "slit must be piece:x,y:dx,dy");
            Slit slit{parse_piece(s, slit_text.substr(0, a)), parse_cx(slit_text.substr(a + 1, b - a - 1)),
                      parse_cx(slit_text.substr(b + 1))};
            GraftOptions go;
            go.any_start = any_start;
            Surface g = graft_sector(s, slit, parse_angle(angle_text), dilation, go);
            ValidationReport r = validate(g);
            emit({{"report", report_to_json(r)}, {"records", records_to_json(g)}});
            if (!out_path.empty()) write_surface(g, out_path);
            return r.ok ? 0 : 2;
        }
        if (gamma_cmd->parsed()) {
            ClassCReport r = class_c_report(parse_cx(res_text), loop_r);
            emit({{"res", cx_to_json(r.res)},
                  {"I", cx_to_json(r.I)},
                  {"gamma_prediction", cx_to_json(r.gamma_prediction)},
                  {"agreement", r.agreement},
                  {"centered", r.centered}});
            return 0;
        }
        if (construct_cmd->parsed()) {
            Construction c = build_construction(parse_cx(res_text), centered, max_fuchsian);
            json roster = json::array();
            for (const auto& e : c.roster) roster.push_back({{"order", e.order}, {"residue", cx_to_json(e.residue)}});
            ValidationReport r = validate(c.surface);
            emit({{"recipe", c.recipe}, {"roster", roster}, {"report", report_to_json(r)}, {"records", records_to_json(c.surface)}});
            if (!out_path.empty()) write_surface(c.surface, out_path);
            return r.ok ? 0 : 2;
        }
        if (build_cmd->parsed()) {
            Surface s = build_named(kind, marks_text, s_factor, alpha, lambda);
            write_surface(s, out_path);
            emit({{"written", out_path}, {"report", report_to_json(validate(s))}});
            return 0;
        }
    } catch (const Error& e) {
        diag("error", e.kind(), e.what());
        return e.breach() ? 2 : 1;
    } catch (const std::exception& e) {
        diag("error", "Internal", e.what());
        return 2;
    }
    return 2;
}
