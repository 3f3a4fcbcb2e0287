#pragma once

#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_complex.hpp>

#include "affsurf/common.hpp"

namespace affsurf {

enum class FuchsianTag { Erasable, Conical, Cylindrical, ReebPlus, ReebMinus, AntiConical, AmbiguousInteger };

struct FuchsianClass {
    FuchsianTag tag = FuchsianTag::Erasable;
    double angle = 0.0;        // cone / sector angle where meaningful
    double factor = 1.0;       // dilation factor of the holonomy
    std::optional<bool> shifted;
};

FuchsianClass classify_residue(cx rho, std::optional<bool> shifted_hint = std::nullopt);
std::string to_string(FuchsianTag t);

// 113-bit complex used for normalizing substitutions, whose coefficients grow factorially.
using qcx = boost::multiprecision::cpp_complex_quad;

// sum_k c[k] X^{lo+k}
template <class C>
struct Laurent {
    int lo = 0;
    std::vector<C> c;

    int hi() const { return lo + static_cast<int>(c.size()) - 1; }
    C at(int order) const
    {
        int k = order - lo;
        return (k < 0 || k >= static_cast<int>(c.size())) ? C(0.0) : c[k];
    }
};

using LaurentSeries = Laurent<cx>;
using LaurentSeriesQ = Laurent<qcx>;

// p[k] is the X^k coefficient, p[0] == 0 for substitutions.
using PowerSeries = std::vector<cx>;
using PowerSeriesQ = std::vector<qcx>;

LaurentSeries trimmed(const LaurentSeries& s, double eps = 0.0);
LaurentSeriesQ to_quad(const LaurentSeries& s);
PowerSeriesQ to_quad(const PowerSeries& p);
LaurentSeries to_double(const LaurentSeriesQ& s);
PowerSeries to_double(const PowerSeriesQ& p);

PowerSeries series_compose(const PowerSeries& f, const PowerSeries& g, int order);
PowerSeries series_reverse(const PowerSeries& f, int order);
PowerSeriesQ series_reverse(const PowerSeriesQ& f, int order);

// Phi^* Gamma = Phi' (Gamma o Phi) + Phi''/Phi', truncated at X^N.
LaurentSeries pullback_gamma(const LaurentSeries& gamma, const PowerSeries& phi, int N);
LaurentSeriesQ pullback_gamma(const LaurentSeriesQ& gamma, const PowerSeriesQ& phi, int N);

struct NormalForm {
    int d = 0;
    cx residue_coeff{0.0, 0.0};     // gamma_{-1}
    PowerSeriesQ phi_exact;
    PowerSeries phi;                // rounded copy of phi_exact
    LaurentSeries normalized;
    std::vector<int> resonant;      // orders that could not be cancelled
};

NormalForm formal_normal_form(const LaurentSeries& gamma, std::optional<int> N = std::nullopt);

}  // namespace affsurf
