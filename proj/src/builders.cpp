#include "affsurf/builders.hpp"

#include <cmath>

namespace affsurf {

HalfPlane halfplane(cx p, cx n) { return {p, n / std::abs(n), {}}; }

Piece make_piece(const std::string& id, PieceKind kind, std::vector<HalfPlane> hps)
{
    Piece p;
    p.id = id;
    p.kind = kind;
    p.halfplanes = std::move(hps);
    derive_edges(p);
    return p;
}

namespace {

// Parallelogram 0, u, u+v, v with half-planes bottom, right, top, left.
std::vector<HalfPlane> parallelogram(cx u, cx v)
{
    cx nu = kI * u / std::abs(u);
    cx nv = kI * v / std::abs(v);
    return {halfplane(0.0, nu), halfplane(u, nv), halfplane(u + v, -nu), halfplane(v, -nv)};
}

void orient_lattice(cx& u, cx& v)
{
    double cr = (std::conj(u) * v).imag();
    if (!finite(u) || !finite(v) || std::abs(cr) <= 1e-12 * std::abs(u) * std::abs(v))
        throw Error("DegenerateLattice", "lattice vectors are R-dependent");
    if (cr < 0.0) std::swap(u, v);
}

}  // namespace

Surface build_flat_torus(cx u, cx v, const std::vector<cx>& marks)
{
    orient_lattice(u, v);
    Surface s;
    s.name = "flat-torus";
    s.pieces.push_back(make_piece("T", PieceKind::Flat, parallelogram(u, v)));
    add_pairing(s, 0, 0, 0, 2, translation(v));
    add_pairing(s, 0, 1, 0, 3, translation(-u));
    double det = (std::conj(u) * v).imag();
    for (cx z : marks) {
        // z = a u + b v
        double a = (std::conj(z) * v).imag() / det;
        double b = (std::conj(u) * z).imag() / det;
        a -= std::floor(a);
        b -= std::floor(b);
        if (a > 1.0 - 1e-12) a = 0.0;
        if (b > 1.0 - 1e-12) b = 0.0;
        bool on_a = a <= 1e-12, on_b = b <= 1e-12;
        if (on_a != on_b) throw Error("InvalidMark", "mark lies on an edge of the fundamental domain");
        s.marks.push_back({0, on_a ? cx(0.0, 0.0) : a * u + b * v});
    }
    finalize(s);
    return s;
}

Surface build_skew_cone(double s_factor, double alpha, std::optional<Truncation> truncation)
{
    if (!(s_factor > 0.0) || !(alpha > 0.0)) throw Error("InvalidArgument", "skew cone needs s > 0 and alpha > 0");
    Surface s;
    s.name = "skew-cone";
    int K = std::max(1, static_cast<int>(std::ceil(alpha / (kPi / 2.0) - 1e-12)));
    double beta = alpha / K;
    cx mu = std::pow(s_factor, 1.0 / K) * std::exp(kI * beta);
    cx e = std::exp(kI * beta);
    for (int j = 0; j < K; ++j) {
        std::vector<HalfPlane> hps = {halfplane(0.0, kI), halfplane(0.0, -kI * e)};
        if (truncation) {
            cx mid = 1.0 + e;
            hps.push_back(halfplane(truncation->r_out, -mid));
            hps.push_back(halfplane(truncation->r_in, mid));
        }
        s.pieces.push_back(make_piece("S" + std::to_string(j), PieceKind::Flat, hps));
    }
    for (int j = 0; j < K; ++j) add_pairing(s, j, 1, (j + 1) % K, 0, AffMap{1.0 / mu, 0.0});
    cx tip = 1.0 - (std::log(s_factor) + kI * alpha) / (kTwoPi * kI);
    if (truncation) {
        s.allow_boundary = true;
    } else if (std::abs(tip) < 1e-12) {
        s.marks.push_back({0, 0.0});
    }
    finalize(s);
    return s;
}

Surface build_exp_affine_plane()
{
    Surface s;
    s.name = "exp-affine-plane";
    s.pieces.push_back(make_piece("E", PieceKind::Log, {}));
    CycleHint h;
    h.piece = 0;
    h.order = 2;
    h.centered = true;
    h.label = "E";
    s.hints.push_back(h);
    finalize(s);
    return s;
}

Surface build_translation_cylinder(double height, double circumference)
{
    if (!(circumference > 0.0) || !(height > 0.0))
        throw Error("InvalidArgument", "cylinder needs positive circumference and height");
    Surface s;
    s.name = "translation-cylinder";
    std::vector<HalfPlane> hps = {halfplane(0.0, 1.0), halfplane(circumference, -1.0)};
    if (std::isfinite(height)) {
        hps.push_back(halfplane(0.0, kI));
        hps.push_back(halfplane(cx(0.0, height), -kI));
        s.allow_boundary = true;
    }
    s.pieces.push_back(make_piece("C", PieceKind::Flat, hps));
    add_pairing(s, 0, 1, 0, 0, translation(-circumference));
    finalize(s);
    return s;
}

Surface build_affine_torus(cx u, cx v)
{
    orient_lattice(u, v);
    Surface s;
    s.name = "affine-torus";
    s.pieces.push_back(make_piece("A", PieceKind::Log, parallelogram(u, v)));
    const Piece& p = s.pieces[0];
    cx zb = p.side_point(side_index(p, 0), 0.5);
    cx zr = p.side_point(side_index(p, 1), 0.5);
    add_pairing(s, 0, 0, 0, 2, AffMap{std::exp(v), 0.0}, {{zb, zb + v}});
    add_pairing(s, 0, 1, 0, 3, AffMap{std::exp(-u), 0.0}, {{zr, zr - u}});
    finalize(s);
    return s;
}

Surface build_cushion(double side)
{
    if (!(side > 0.0)) throw Error("InvalidArgument", "cushion side must be positive");
    Surface s;
    s.name = "cushion";
    double a = side;
    auto square = [&] {
        return std::vector<HalfPlane>{halfplane(0.0, kI), halfplane(a, -1.0), halfplane(cx(0.0, a), -kI),
                                      halfplane(0.0, 1.0)};
    };
    s.pieces.push_back(make_piece("front", PieceKind::Flat, square()));
    s.pieces.push_back(make_piece("back", PieceKind::Flat, square()));
    add_pairing(s, 0, 1, 1, 3, translation(-a));
    add_pairing(s, 0, 3, 1, 1, translation(a));
    add_pairing(s, 0, 0, 1, 0, AffMap{-1.0, a});
    add_pairing(s, 0, 2, 1, 2, AffMap{-1.0, cx(a, 2.0 * a)});
    finalize(s);
    return s;
}

Surface build_plane(const std::vector<cx>& marks)
{
    Surface s;
    s.name = "plane";
    s.pieces.push_back(make_piece("P", PieceKind::Flat, {}));
    for (cx z : marks) s.marks.push_back({0, z});
    finalize(s);
    return s;
}

Surface build_reeb_cylinder(double lambda)
{
    if (!(lambda > 0.0) || std::abs(std::log(lambda)) < 1e-12)
        throw Error("InvalidArgument", "Reeb cylinder needs lambda > 0, lambda != 1");
    Surface s;
    s.name = "reeb-cylinder";
    double l = std::abs(std::log(lambda));
    s.pieces.push_back(make_piece("R", PieceKind::Log, {halfplane(0.0, 1.0), halfplane(l, -1.0)}));
    add_pairing(s, 0, 1, 0, 0, AffMap{std::exp(-l), 0.0}, {{cx(l, 0.0), cx(0.0, 0.0)}});
    finalize(s);
    return s;
}

}  // namespace affsurf
