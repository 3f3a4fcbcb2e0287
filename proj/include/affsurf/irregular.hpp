#pragma once

#include <optional>
#include <vector>

#include "affsurf/affine.hpp"
#include "affsurf/surface.hpp"

namespace affsurf {

// Asymptotic values u_k of an irregular point of order d, extended by u_{k+m} = a u_k + b.
struct AsymptoticFamily {
    int d = 2;
    cx res{0.0, 0.0};
    std::vector<cx> u;  // u_0 .. u_{m-1}
    cx b{0.0, 0.0};

    int m() const { return d - 1; }
    cx a() const { return std::exp(-kTwoPi * kI * res); }
};

// Throws InvalidArgument unless d >= 2 and u has m entries.
void check_family(const AsymptoticFamily& fam);

cx family_expand(const AsymptoticFamily& fam, long n);

// Directions theta in [0, 2 pi) with -a_lead e^{-i m theta} negative (repelling) or positive
// (attracting), increasing.
std::vector<double> repelling_axes(cx a_lead, int d);
std::vector<double> attracting_axes(cx a_lead, int d);

struct FamilyMatch {
    bool equal = false;
    AffMap witness;  // witness(u_k) = u'_{k + shift}
    int shift = 0;
};

FamilyMatch invariants_equal(const AsymptoticFamily& f1, const AsymptoticFamily& f2, bool allow_shift);

// Image of the family under g: u_k -> g(u_k).
AsymptoticFamily transform_family(const AsymptoticFamily& fam, const AffMap& g);
// Family k -> u_{k + shift}.
AsymptoticFamily shift_family(const AsymptoticFamily& fam, int shift);

bool is_centered(const AsymptoticFamily& fam);

struct NormalizedFamily {
    bool centered = false;
    int shift = 0;
    AsymptoticFamily family;
};

// Deterministic representative of the class of fam: u_0 = 0, first nonzero step equal to 1.
NormalizedFamily normalize_family(const AsymptoticFamily& fam, bool allow_shift);

struct CanonicalModel {
    int d = 2;
    cx res{0.0, 0.0};
    cx s{0.0, 0.0};
    std::vector<AffMap> lambda;   // Lambda_0 .. Lambda_{m-1}; Lambda_{n+1/2} = Lambda_{n+1}
    std::vector<cx> b_upper;      // offset of the gluing A_n -> B_{n+1/2}
    double R = 1.0;
    AffMap L;
    AsymptoticFamily family;

    int m() const { return d - 1; }
};

CanonicalModel build_canonical_model(const AsymptoticFamily& fam, std::optional<double> R = {});

// min over the upper gluings of e^R - |b| - e^{Re s} e^{-R}
double admissibility_margin(const CanonicalModel& model);

// Lambda_x for integer or half-integer x.
AffMap model_lambda(const CanonicalModel& model, double x);

bool model_piece_contains(const CanonicalModel& model, double x, cx w);

// Lambda_x(e^w); throws OutsidePiece when w is not in piece x.
cx model_developing_eval(const CanonicalModel& model, double x, cx w);

AsymptoticFamily extract_family_from_model(const CanonicalModel& model);

Surface model_to_surface(const CanonicalModel& model);

}  // namespace affsurf
