#pragma once

#include <limits>

#include "affsurf/surface.hpp"

namespace affsurf {

// Geodesic ray leaving the conical singularity at `start` (piece coordinates) in `direction`.
struct Slit {
    int piece = -1;
    cx start;
    cx direction;
};

struct GraftOptions {
    // Lets the slit start at any singular vertex, such as a focus corner of an irregular point.
    bool any_start = false;
};

// Cuts along the slit and inserts a sector of angle theta whose far ray is glued with the
// dilation factor. theta = infinity inserts two log half-planes and merges the endpoints.
// theta = 0 reglues the two banks by the dilation; the slit must then stay in one piece.
Surface graft_sector(const Surface& s, const Slit& slit, double theta, double dilation = 1.0,
                     const GraftOptions& opt = {});

constexpr double kInfiniteAngle = std::numeric_limits<double>::infinity();

}  // namespace affsurf
