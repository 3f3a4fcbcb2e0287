#include "affsurf/affine.hpp"

#include <cmath>

namespace affsurf {

AffMap compose(const AffMap& f, const AffMap& g) { return {f.a * g.a, f.a * g.b + f.b}; }

AffMap invert(const AffMap& f)
{
    if (std::abs(f.a) <= tol().eps_zero)
        throw Error("DegenerateMap", "affine map has vanishing linear part");
    cx ia = 1.0 / f.a;
    return {ia, -f.b * ia};
}

AffMap translation(cx b) { return {cx(1.0, 0.0), b}; }

bool near(const AffMap& f, const AffMap& g, double eps)
{
    return std::abs(f.a - g.a) <= eps && std::abs(f.b - g.b) <= eps * (1.0 + std::abs(f.b));
}

MapKind classify_map(const AffMap& f)
{
    MapKind k;
    k.factor = std::abs(f.a);
    k.arg = std::arg(f.a);
    bool unit = std::abs(f.a - 1.0) <= tol().eps_arg;
    if (unit) {
        k.tag = std::abs(f.b) <= tol().eps_geom ? MapTag::Identity : MapTag::Translation;
        k.factor = 1.0;
        k.arg = 0.0;
        return k;
    }
    k.fixed_point = f.b / (1.0 - f.a);
    k.has_fixed_point = true;
    k.tag = std::abs(k.arg) <= tol().eps_arg ? MapTag::Dilation : MapTag::Spiral;
    return k;
}

std::string to_string(MapTag t)
{
    switch (t) {
    case MapTag::Identity: return "identity";
    case MapTag::Translation: return "translation";
    case MapTag::Dilation: return "dilation";
    case MapTag::Spiral: return "spiral";
    }
    return "?";
}

cx log_glue_apply(const LogGlue& g, cx z)
{
    cx q = 1.0 + g.b * std::exp(-z - g.s);
    if (q.real() <= 0.0 && std::abs(q.imag()) <= tol().eps_geom)
        throw Error("OnSlit", "log gluing evaluated on its slit");
    return z + g.s + std::log(q);
}

LogGlue log_glue_inverse(const LogGlue& g) { return {-g.s, -std::exp(-g.s) * g.b}; }

AffMap log_glue_dev(const LogGlue& g) { return {std::exp(g.s), g.b}; }

}  // namespace affsurf
