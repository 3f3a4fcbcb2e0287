#pragma once

#include <limits>
#include <string>
#include <vector>

#include "affsurf/surface.hpp"

namespace affsurf {

struct GeodesicState {
    int piece = -1;
    cx z;  // piece coordinates
    cx v;  // piece coordinates
    double t = 0.0;
};

enum class Termination { HitApex, EnteredTrap, TimedOut, CrossingsCapped, ClosedUp, ExitedSurface, Escaped };

std::string to_string(Termination t);

struct TracePiece {
    int piece = -1;
    std::vector<cx> points;
    double t0 = 0.0, t1 = 0.0;
    AffMap chart;  // developed coordinates of the start piece -> those of this piece
};

struct TraceOptions {
    double t_max = std::numeric_limits<double>::infinity();
    int max_crossings = 10000;
    bool stop_on_trap = false;
    bool detect_closing = true;
    double hit_rel = 1e-7;
};

struct TraceResult {
    std::vector<TracePiece> path;
    int crossings = 0;
    Termination termination = Termination::TimedOut;
    double time = 0.0;
    int apex_record = -1;
    int apex_cycle = -1;
    bool apex_focus = false;
    std::string trap_id;
    double holonomy_factor = 1.0;
    double period = 0.0;
    int escape_cycle = -1;
    GeodesicState final_state;
    AffMap chart;  // developed coordinates of the start piece -> those of the final piece
};

TraceResult trace(const Surface& s, const GeodesicState& start, const TraceOptions& opt = {});

// Piecewise-geodesic loop: leg k runs for unit time with velocity turns[k] times the velocity
// at the end of the previous leg (start.v for k = 0).
struct Loop {
    GeodesicState start;
    std::vector<cx> turns;
};

struct Holonomy {
    cx linear;
    AffMap affine;
};

Holonomy holonomy(const Surface& s, const Loop& loop);

// Turning number omega / 2pi of a closed cusp-free loop.
double turning_number(const Surface& s, const Loop& loop);

enum class CylinderKind { Translation, Dilation };

struct Cylinder {
    CylinderKind kind = CylinderKind::Translation;
    double factor = 1.0;
    double extent = 0.0;       // height (translation) or angle (dilation)
    double extent_plus = 0.0;  // on the left of the core geodesic
    double extent_minus = 0.0;
    bool closes_on_itself = false;
    std::vector<int> boundary_records;  // singularities met on the boundary
};

Cylinder extend_cylinder(const Surface& s, const GeodesicState& start, const TraceResult& closed);

}  // namespace affsurf
