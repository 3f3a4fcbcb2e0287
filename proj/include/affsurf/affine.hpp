#pragma once

#include "affsurf/common.hpp"

namespace affsurf {

// z -> a z + b
struct AffMap {
    cx a{1.0, 0.0};
    cx b{0.0, 0.0};

    cx operator()(cx z) const { return a * z + b; }
    cx linear(cx v) const { return a * v; }
};

AffMap compose(const AffMap& f, const AffMap& g);
AffMap invert(const AffMap& f);
AffMap translation(cx b);
bool near(const AffMap& f, const AffMap& g, double eps);

enum class MapTag { Identity, Translation, Dilation, Spiral };

struct MapKind {
    MapTag tag = MapTag::Identity;
    double factor = 1.0;   // |a|
    double arg = 0.0;      // arg a
    cx fixed_point{0.0, 0.0};
    bool has_fixed_point = false;
};

MapKind classify_map(const AffMap& f);
std::string to_string(MapTag t);

// G_{s,b}(z) = z + s + Log(1 + b e^{-z-s})
struct LogGlue {
    cx s{0.0, 0.0};
    cx b{0.0, 0.0};
};

cx log_glue_apply(const LogGlue& g, cx z);
LogGlue log_glue_inverse(const LogGlue& g);
// Developed action: exp(G(z)) = e^s e^z + b.
AffMap log_glue_dev(const LogGlue& g);

}  // namespace affsurf
