#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "affsurf/surface.hpp"

namespace affsurf {

struct Truncation {
    double r_in = 0.5;
    double r_out = 2.0;
};

HalfPlane halfplane(cx p, cx n);
Piece make_piece(const std::string& id, PieceKind kind, std::vector<HalfPlane> hps);

// C / (Z u + Z v); marks are reduced into the fundamental parallelogram.
Surface build_flat_torus(cx u, cx v, const std::vector<cx>& marks = {});

// Sector of angle alpha glued by z -> s e^{i alpha} z; compactified unless truncated.
Surface build_skew_cone(double s, double alpha, std::optional<Truncation> truncation = {});

// One log piece covering the log chart: C with the affine structure of exp.
Surface build_exp_affine_plane();

// C / Z c, cut to 0 <= Im z <= height when the height is finite.
Surface build_translation_cylinder(double height = std::numeric_limits<double>::infinity(),
                                   double circumference = 1.0);

// Log-lattice torus: the log chart modulo Z u + Z v.
Surface build_affine_torus(cx u, cx v);

// Two squares of the given side glued along corresponding edges.
Surface build_cushion(double side = 1.0);

Surface build_plane(const std::vector<cx>& marks = {});

// Full Reeb cylinder: the log strip 0 <= Re w <= |log lambda| closed up by z -> lambda z.
Surface build_reeb_cylinder(double lambda);

}  // namespace affsurf
