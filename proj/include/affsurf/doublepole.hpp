#pragma once

#include <string>
#include <vector>

#include "affsurf/surface.hpp"

namespace affsurf {

cx gamma_euler(cx z);

// Integral of z^{-res} e^{-1/z} along the keyhole loop of radius r.
cx loop_integral_I(cx res, double r = 1.0, int quad = 64);

struct ClassCReport {
    cx res;
    cx I;
    cx gamma_prediction;
    bool centered = false;
    double agreement = 0.0;
};

ClassCReport class_c_report(cx res, double r = 1.0, int quad = 64);
bool centered_class_C(cx res);
int min_fuchsian_count(cx res, bool centered);

struct RosterEntry {
    int order = 1;
    cx residue;
};

struct Construction {
    Surface surface;
    std::string recipe;
    std::vector<RosterEntry> roster;  // the double pole first, then the Fuchsian points
};

// Genus-zero surface with one double pole of residue res and as few Fuchsian points as the
// obstruction allows. max_fuchsian >= 0 asks for at most that many (UnrealizableCase otherwise).
Construction build_construction(cx res, bool centered, int max_fuchsian = -1);

// Half-plane swath with an inserted half-strip of height h, closed by a translation cylinder
// glued along the closed segment at the strip's end. The mark sits at the segment midpoint.
Surface build_strip_cylinder(double h = 1.0, bool midpoint_mark = false);

}  // namespace affsurf
