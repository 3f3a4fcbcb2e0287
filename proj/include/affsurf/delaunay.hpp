#pragma once

#include <optional>
#include <string>
#include <vector>

#include "affsurf/surface.hpp"

namespace affsurf {

struct ExceptionalTag {
    bool exceptional = false;
    std::string tag;  // whole-plane, translation-cylinder, translation-torus, infinite-angle-cone,
                      // affine-cylinder, affine-torus, or empty
};

ExceptionalTag is_exceptional(const Surface& s);

struct SurfacePoint {
    int piece = -1;
    cx z;
};

// Star-shaped development cell: rays from the center with direction in [theta0, theta1] that
// cross this piece. chart maps developed coordinates of the piece to the disk plane.
struct DiskCell {
    int piece = -1;
    AffMap chart;
    double theta0 = 0.0, theta1 = 0.0;
    int entry_edge = -1;  // -1 for the cell holding the center
};

struct DiskHit {
    double angle = 0.0;  // direction from the center in the disk plane
    int record = -1;
    int piece = -1;
    cx z;                // piece coordinates (unused for foci)
    bool focus = false;
    cx position;         // disk plane
};

struct ImmersedDisk {
    SurfacePoint center_at;  // where the center lies on the surface
    AffMap root_chart;       // developed coordinates of center_at.piece -> disk plane
    cx center;
    double radius = 0.0;
    std::vector<DiskCell> cells;
    std::vector<DiskHit> hits;  // sorted by angle
    std::optional<double> discontinuity;

    bool type_a() const { return hits.size() == 2 && !discontinuity; }
    bool rigid() const { return hits.size() >= 3; }
};

struct DelaunayOptions {
    long max_pivots = 100000;
    int max_cells = 20000;
    double escape_factor = 1000.0;  // radius cap, relative to the surface scale
};

// Options with AFFSURF_BUDGET_PIVOTS applied when set.
DelaunayOptions delaunay_options_from_env();

enum class DiskOutcome { Disk, HalfPlaneRegime };

struct GrowResult {
    DiskOutcome outcome = DiskOutcome::Disk;
    ImmersedDisk disk;
};

// Throws SeedOnSingularity when the seed sits on a singular point.
GrowResult grow_max_disk(const Surface& s, SurfacePoint seed, const DelaunayOptions& opt = {});

struct PathPart {
    int piece = -1;
    std::vector<cx> points;  // piece coordinates
};

struct DelaunaySegment {
    int record_a = -1, record_b = -1;
    bool focus_a = false, focus_b = false;
    double length = 0.0;  // in the witness disk plane
    std::vector<PathPart> path;
    SurfacePoint midpoint;  // normalized representative
    cx direction;           // unit tangent at the midpoint, piece coordinates
    ImmersedDisk witness;
};

struct PivotResult {
    DiskOutcome outcome = DiskOutcome::Disk;
    ImmersedDisk next;
    DelaunaySegment segment;
};

// Sweeps the pencil through hits egress and egress+1 toward the arc between them.
// Throws NoBoundedPencil when the disk has fewer than two hits.
PivotResult pivot(const Surface& s, const ImmersedDisk& disk, int egress, const DelaunayOptions& opt = {});

// Throws ExceptionalSkip on exceptional surfaces and SpineTraversalCapped when the pivot
// budget runs out.
std::vector<DelaunaySegment> delaunay_segments(const Surface& s, const DelaunayOptions& opt = {});

enum class ComponentType { Polygon, ReebFinite, ReebSemiInfinite, TranslationSemiInfinite, AntiConical, Swath };

std::string to_string(ComponentType t);

struct SegmentSide {
    int segment = -1;
    int side = 1;  // +1 left of the segment direction, -1 right
};

struct DelaunayComponent {
    ComponentType type = ComponentType::Polygon;
    int sides = 0;
    double angle = 0.0;
    double factor = 1.0;
    std::vector<SegmentSide> boundary;
    int record = -1;
    ImmersedDisk disk;  // circumscribed disk of a polygon
};

struct DelaunayDecomposition {
    std::vector<DelaunaySegment> segments;
    std::vector<DelaunayComponent> components;
    std::vector<int> core_pieces;
    std::vector<int> exterior_pieces;
    int t = 0;
    int beta = 0;
    int g = 0;
    int n = 0;
    bool graph_core = false;  // some segment has exterior on both sides
    std::vector<SegmentSide> exterior_sides;
    std::vector<ValidationIssue> issues;
};

DelaunayDecomposition components(const Surface& s, const std::vector<DelaunaySegment>& segments,
                                 const DelaunayOptions& opt = {});

// Segments, components and counts in one call.
DelaunayDecomposition delaunay_decomposition(const Surface& s, const DelaunayOptions& opt = {});

struct ComplexityReport {
    bool skipped = false;  // exceptional surface
    std::string skip_reason;
    int lhs = 0;  // t + beta
    int rhs = 0;  // 4g - 4 + 2n
    int segments = 0;
    int segment_bound = 0;  // 6g - 6 + 3n
    bool identity_ok = false;
    bool bound_ok = false;
    bool flagged = false;
};

ComplexityReport complexity_check(const Surface& s, const DelaunayDecomposition& d);

// Pairs of segments whose interiors meet, and segments crossing themselves.
std::vector<std::pair<int, int>> segment_crossings(const Surface& s, const std::vector<DelaunaySegment>& segs);

}  // namespace affsurf
