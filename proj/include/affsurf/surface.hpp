#pragma once

#include <optional>
#include <string>
#include <vector>

#include "affsurf/affine.hpp"

namespace affsurf {

enum class PieceKind { Flat, Log };

// Closed half-plane {z : Re(conj(n) (z - p)) >= 0}; n is the unit inward normal.
// Breakpoints subdivide the boundary edge into independently paired sides.
struct HalfPlane {
    cx p;
    cx n;
    std::vector<cx> breaks;
};

enum class EdgeShape { Segment, Ray, Line };

// Boundary edge: origin + t dir for t in [t0, t1]; dir = -i n keeps the interior on the left.
struct Edge {
    int halfplane = -1;
    cx origin;
    cx dir;
    double t0 = 0.0, t1 = 0.0;
    std::vector<double> breaks;
    int first_side = 0;

    cx at(double t) const { return origin + t * dir; }
    EdgeShape shape() const;
};

// A sub-interval of an edge; the unit of pairing.
struct SideGeom {
    int edge = -1;
    double t0 = 0.0, t1 = 0.0;
    bool tail_finite() const { return std::isfinite(t0); }
    bool head_finite() const { return std::isfinite(t1); }
};

struct Piece {
    std::string id;
    PieceKind kind = PieceKind::Flat;
    std::vector<HalfPlane> halfplanes;

    // derived by derive_edges()
    std::vector<Edge> edges;
    std::vector<SideGeom> sides;
    cx interior{0.0, 0.0};
    double scale = 1.0;

    double depth(cx z) const;
    bool contains(cx z, double eps) const { return depth(z) >= -eps; }
    cx dev(cx z) const { return kind == PieceKind::Flat ? z : std::exp(z); }
    // d(dev)/dz
    cx dev_deriv(cx z) const { return kind == PieceKind::Flat ? cx(1.0, 0.0) : std::exp(z); }
    cx side_point(int side, double frac) const;
    cx side_dir(int side) const { return edges[sides[side].edge].dir; }
    bool unbounded_toward(cx direction) const;
};

void derive_edges(Piece& piece);

// Index of sub-side `sub` of the edge cut out by half-plane `halfplane`; -1 if redundant.
int side_index(const Piece& p, int halfplane, int sub = 0);

struct Anchor {
    cx z1;  // on side 1, piece coordinates
    cx z2;  // matching point on side 2
};

// dev maps developed coordinates of side 1's piece onto those of side 2's piece.
struct Pairing {
    int p1 = -1, s1 = -1;
    int p2 = -1, s2 = -1;
    AffMap dev;
    std::vector<Anchor> anchors;
};

// Open-set gluing of log pieces: w2 = G(w1) wherever both ends lie in their pieces.
struct Overlap {
    int p1 = -1, p2 = -1;
    LogGlue glue;
};

struct Mark {
    int piece = -1;
    cx z;
};

// Attaches data that cannot be read off the geometry (irregular order, centeredness, labels)
// to the vertex cycle through a corner. For ends, `direction` is a recession direction of the
// piece inside that end; for finite corners, `point` is the vertex.
struct CycleHint {
    int piece = -1;
    bool at_infinity = true;
    cx direction{-1.0, 0.0};
    cx point{0.0, 0.0};
    int order = 1;
    std::optional<bool> centered;
    std::optional<bool> shifted;
    std::string label;
    std::vector<cx> family_u;
    cx family_b{0.0, 0.0};
    // Given for punctures whose vertex cycles are open; hints sharing a label make one record.
    std::optional<cx> residue;
};

struct CornerRef {
    int piece = -1;
    int side = -1;  // corner at the tail of this side; -1 for an edgeless piece
};

struct VertexCycle {
    std::vector<CornerRef> corners;
    bool closed = true;
    bool finite = true;        // all corners are finite vertices
    double omega = 0.0;        // turning of a small ccw loop, radians
    AffMap holonomy;           // L with phi o h = L o phi
    cx residue{0.0, 0.0};
    cx developed_vertex{0.0, 0.0};
    double scale = 1.0;
    int record = -1;
};

struct SingularityRecord {
    int id = -1;
    int order = 1;  // 0 marked point, 1 Fuchsian, d >= 2 irregular
    cx residue{0.0, 0.0};
    double cone_angle = 0.0;
    double dilation = 1.0;
    std::optional<bool> shifted;
    std::optional<bool> centered;
    int cycle = -1;  // vertex cycle, or -1 for an interior mark
    int mark = -1;
    std::string label;
    std::vector<cx> family_u;
    cx family_b{0.0, 0.0};
};

// Half-plane constraints in one piece, plus an optional "outside the developed disk" constraint.
struct TrapPart {
    int piece = -1;
    std::vector<HalfPlane> constraints;
    bool outside_disk = false;
    cx disk_center{0.0, 0.0};
    double disk_radius = 0.0;
};

struct TrapRegion {
    std::string id;
    std::string kind;  // sepal, petal, anticonical, cylindrical, exterior
    std::vector<TrapPart> entry;
    std::vector<TrapPart> hold;
};

struct CornerGeom {
    bool finite = true;
    cx vertex{0.0, 0.0};
    double angle = 0.0;  // interior angle, or angle at infinity for ends
    int in_side = -1;
    cx d_in, d_out;
};

CornerGeom corner_geom(const Piece& p, int side);
// True if `direction` lies in the range of recession directions of the end corner.
bool end_contains_direction(const Piece& p, int side, cx direction);

bool trap_contains(const std::vector<TrapPart>& parts, int piece, cx z, double eps = 0.0);

struct Apex {
    int record = -1;
    int piece = -1;
    cx z;               // piece coordinates (unused for foci)
    bool focus = false; // x -> -infinity direction of a log piece
    int cycle = -1;
};

struct ValidationIssue {
    std::string kind;
    std::string detail;
};

struct PairRef {
    int pairing = -1;
    int which = 0;  // 1 or 2
};

struct Surface {
    std::string name;
    std::vector<Piece> pieces;
    std::vector<Pairing> pairings;
    std::vector<Overlap> overlaps;
    std::vector<Mark> marks;
    std::vector<CycleHint> hints;
    std::vector<TrapRegion> traps;
    bool allow_boundary = false;

    // derived by finalize()
    std::vector<std::vector<PairRef>> side_pair;
    std::vector<VertexCycle> cycles;
    std::vector<SingularityRecord> singularities;
    std::vector<std::vector<Apex>> apexes;
    int genus = 0;
    int n = 0;
    bool has_boundary = false;
    std::vector<ValidationIssue> build_issues;
    std::vector<std::vector<int>> corner_cycle;  // per piece, per side

    int piece_index(const std::string& id) const;
    double scale() const;
};

// Appends a pairing between the edges of two half-planes (re-deriving both pieces first).
void add_pairing(Surface& s, int p1, int hp1, int p2, int hp2, AffMap dev,
                 std::vector<Anchor> anchors = {}, int sub1 = 0, int sub2 = 0);

// Derives edges, side lookup, vertex cycles, residues, records and apexes.
void finalize(Surface& s);

struct Placement {
    int piece = -1;
    cx z;
    cx v;
};

// Carries a point (and tangent vector) across a pairing from side `which` (1 or 2).
Placement transfer(const Surface& s, int pairing, int which, cx z, cx v = cx(0.0, 0.0));
// Developed-coordinate map from the source side's piece to the target side's piece.
AffMap pairing_map(const Surface& s, int pairing, int which);

struct ValidationReport {
    bool ok = true;
    int genus = 0;
    int n = 0;
    cx residue_sum{0.0, 0.0};
    bool has_boundary = false;
    std::vector<ValidationIssue> issues;
};

ValidationReport validate(const Surface& s);

struct VertexResidue {
    int record = -1;
    int cycle = -1;
    int order = 1;
    cx residue;
    double cone_angle = 0.0;
    double dilation = 1.0;
};

std::vector<VertexResidue> vertex_residues(const Surface& s);

cx residue_sum(const Surface& s);

}  // namespace affsurf
