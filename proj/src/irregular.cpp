#include "affsurf/irregular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "affsurf/builders.hpp"

namespace affsurf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double family_scale(const AsymptoticFamily& fam)
{
    double sc = 1.0;
    for (int k = 0; k < 2 * fam.m() + 2; ++k) sc = std::max(sc, std::abs(family_expand(fam, k)));
    return sc;
}

bool lex_less(const std::vector<cx>& x, const std::vector<cx>& y)
{
    const double eps = 1e-9;
    for (size_t k = 0; k < std::min(x.size(), y.size()); ++k) {
        if (std::abs(x[k].real() - y[k].real()) > eps) return x[k].real() < y[k].real();
        if (std::abs(x[k].imag() - y[k].imag()) > eps) return x[k].imag() < y[k].imag();
    }
    return x.size() < y.size();
}

std::vector<double> axes(cx a_lead, int d, double offset)
{
    if (std::abs(a_lead) <= tol().eps_zero)
        throw Error("DegenerateLeadingCoefficient", "leading coefficient vanishes");
    if (d < 2) throw Error("InvalidArgument", "axes need d >= 2");
    const int m = d - 1;
    std::vector<double> out;
    for (int k = 0; k < m; ++k) {
        double th = std::fmod((std::arg(a_lead) + offset + kTwoPi * k) / m, kTwoPi);
        if (th < 0.0) th += kTwoPi;
        out.push_back(th);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double condition_margin(const std::vector<cx>& bs, cx s, double R)
{
    double worst = kInf;
    for (cx b : bs) worst = std::min(worst, std::exp(R) - std::abs(b) - std::exp(s.real() - R));
    return worst;
}

}  // namespace

void check_family(const AsymptoticFamily& fam)
{
    if (fam.d < 2) throw Error("InvalidArgument", "irregular order must be at least 2");
    if (static_cast<int>(fam.u.size()) != fam.m())
        throw Error("InvalidArgument", "asymptotic family needs d-1 values");
}

cx family_expand(const AsymptoticFamily& fam, long n)
{
    check_family(fam);
    const long m = fam.m();
    const cx a = fam.a();
    long r = ((n % m) + m) % m;
    long q = (n - r) / m;
    cx z = fam.u[r];
    for (long k = 0; k < q; ++k) z = a * z + fam.b;
    for (long k = 0; k > q; --k) z = (z - fam.b) / a;
    return z;
}

std::vector<double> repelling_axes(cx a_lead, int d) { return axes(a_lead, d, 0.0); }

std::vector<double> attracting_axes(cx a_lead, int d) { return axes(a_lead, d, kPi); }

AsymptoticFamily transform_family(const AsymptoticFamily& fam, const AffMap& g)
{
    AsymptoticFamily out = fam;
    for (auto& u : out.u) u = g(u);
    out.b = g.a * fam.b + g.b * (1.0 - fam.a());
    return out;
}

AsymptoticFamily shift_family(const AsymptoticFamily& fam, int shift)
{
    AsymptoticFamily out = fam;
    for (int k = 0; k < fam.m(); ++k) out.u[k] = family_expand(fam, k + shift);
    return out;
}

FamilyMatch invariants_equal(const AsymptoticFamily& f1, const AsymptoticFamily& f2, bool allow_shift)
{
    FamilyMatch out;
    check_family(f1);
    check_family(f2);
    if (f1.d != f2.d || std::abs(f1.res - f2.res) > tol().eps_geom) return out;
    const int m = f1.m();
    const int window = 2 * m + 2;
    std::vector<cx> u(window);
    for (int k = 0; k < window; ++k) u[k] = family_expand(f1, k);
    const double su = family_scale(f1);
    for (int sh = 0; sh < (allow_shift ? m : 1); ++sh) {
        std::vector<cx> v(window);
        for (int k = 0; k < window; ++k) v[k] = family_expand(f2, k + sh);
        double sv = 1.0;
        for (cx z : v) sv = std::max(sv, std::abs(z));
        int k2 = -1;
        for (int k = 1; k < window && k2 < 0; ++k)
            if (std::abs(u[k] - u[0]) > tol().eps_geom * su) k2 = k;
        AffMap g;
        if (k2 < 0) {
            g = translation(v[0] - u[0]);
        } else {
            g.a = (v[k2] - v[0]) / (u[k2] - u[0]);
            if (std::abs(g.a) <= tol().eps_zero) continue;
            g.b = v[0] - g.a * u[0];
        }
        bool ok = true;
        for (int k = 0; k < window && ok; ++k)
            if (std::abs(g(u[k]) - v[k]) > tol().eps_geom * sv) ok = false;
        if (ok) {
            out.equal = true;
            out.witness = g;
            out.shift = sh;
            return out;
        }
    }
    return out;
}

bool is_centered(const AsymptoticFamily& fam)
{
    check_family(fam);
    const double sc = family_scale(fam);
    for (cx u : fam.u)
        if (std::abs(u - fam.u[0]) > tol().eps_zero * sc) return false;
    return std::abs(fam.a() * fam.u[0] + fam.b - fam.u[0]) <= tol().eps_zero * sc;
}

NormalizedFamily normalize_family(const AsymptoticFamily& fam, bool allow_shift)
{
    check_family(fam);
    NormalizedFamily best;
    if (is_centered(fam)) {
        best.centered = true;
        best.family = transform_family(fam, translation(-fam.u[0]));
        return best;
    }
    const int m = fam.m();
    std::vector<cx> best_key;
    for (int sh = 0; sh < (allow_shift ? m : 1); ++sh) {
        AsymptoticFamily f = shift_family(fam, sh);
        const double sc = family_scale(f);
        cx step{0.0, 0.0};
        for (int k = 0; k < 2 * m + 2; ++k) {
            cx dz = family_expand(f, k + 1) - family_expand(f, k);
            if (std::abs(dz) > tol().eps_geom * sc) {
                step = dz;
                break;
            }
        }
        AffMap g{1.0 / step, -f.u[0] / step};
        AsymptoticFamily nf = transform_family(f, g);
        nf.u[0] = 0.0;
        std::vector<cx> key = nf.u;
        key.push_back(nf.b);
        if (best_key.empty() || lex_less(key, best_key)) {
            best_key = key;
            best.family = nf;
            best.shift = sh;
        }
    }
    return best;
}

CanonicalModel build_canonical_model(const AsymptoticFamily& fam, std::optional<double> R)
{
    check_family(fam);
    CanonicalModel model;
    model.d = fam.d;
    model.res = fam.res;
    model.family = fam;
    const int m = fam.m();
    model.s = kTwoPi * kI * (fam.res - static_cast<double>(fam.d)) / static_cast<double>(m);
    for (int n = 0; n < m; ++n) {
        model.lambda.push_back({std::exp(-static_cast<double>(n) * model.s), fam.u[n]});
        cx un1 = family_expand(fam, n + 1);
        model.b_upper.push_back((fam.u[n] - un1) * std::exp(static_cast<double>(n + 1) * model.s));
    }
    model.L = {fam.a(), fam.b};
    if (R) {
        if (!(*R > 0.0) || condition_margin(model.b_upper, model.s, *R) <= 0.0)
            throw Error("InvalidArgument", "R violates the admissibility condition");
        model.R = *R;
    } else {
        double r = 1.0;
        while (r <= kTwoPi || condition_margin(model.b_upper, model.s, r) < 1e-6) r *= 2.0;
        model.R = r;
    }
    return model;
}

double admissibility_margin(const CanonicalModel& model)
{
    return condition_margin(model.b_upper, model.s, model.R);
}

AffMap model_lambda(const CanonicalModel& model, double x)
{
    double twice = std::round(2.0 * x);
    if (std::abs(2.0 * x - twice) > 1e-9) throw Error("InvalidArgument", "piece index must be a half-integer");
    long n2 = static_cast<long>(twice);
    long n = n2 % 2 == 0 ? n2 / 2 : (n2 + 1) / 2;
    return {std::exp(-static_cast<double>(n) * model.s), family_expand(model.family, n)};
}

bool model_piece_contains(const CanonicalModel& model, double x, cx w)
{
    const double eps = tol().eps_zero * (1.0 + model.R);
    long n2 = static_cast<long>(std::round(2.0 * x));
    if (n2 % 2 == 0)
        return w.imag() >= model.R - eps || w.imag() <= -model.R + eps || w.real() <= -model.R + eps;
    return w.real() >= model.R - eps;
}

cx model_developing_eval(const CanonicalModel& model, double x, cx w)
{
    AffMap lam = model_lambda(model, x);
    if (!model_piece_contains(model, x, w)) throw Error("OutsidePiece", "point is not in the model piece");
    return lam(std::exp(w));
}

AsymptoticFamily extract_family_from_model(const CanonicalModel& model)
{
    AsymptoticFamily fam;
    fam.d = model.d;
    fam.res = model.res;
    for (const auto& lam : model.lambda) fam.u.push_back(lam.b);
    fam.b = model.L.b;
    const double T = model.R + 5.0;
    for (int n = 0; n < model.m(); ++n) {
        cx v = model_developing_eval(model, n, cx(-T, 0.0));
        if (!(std::abs(v - fam.u[n]) < std::exp(-T + 1.0) * std::abs(model.lambda[n].a)))
            throw Error("ModelProbeFailed", "developing map does not tend to the asymptotic value", true);
    }
    return fam;
}

Surface model_to_surface(const CanonicalModel& model)
{
    const int m = model.m();
    const double R = model.R;
    Surface s;
    s.name = "irregular-model";
    s.allow_boundary = true;
    auto left = [](int n) { return 4 * n; };
    auto top = [](int n) { return 4 * n + 1; };
    auto bottom = [](int n) { return 4 * n + 2; };
    auto petal = [](int n) { return 4 * n + 3; };
    for (int n = 0; n < m; ++n) {
        std::string a = "A" + std::to_string(n);
        HalfPlane lh = halfplane(cx(-R, 0.0), -1.0);
        lh.breaks = {cx(-R, -R), cx(-R, R)};
        s.pieces.push_back(make_piece(a + "-left", PieceKind::Log, {lh}));
        s.pieces.push_back(make_piece(a + "-top", PieceKind::Log, {halfplane(cx(0.0, R), kI), halfplane(cx(-R, 0.0), 1.0)}));
        s.pieces.push_back(
            make_piece(a + "-bottom", PieceKind::Log, {halfplane(cx(0.0, -R), -kI), halfplane(cx(-R, 0.0), 1.0)}));
        s.pieces.push_back(make_piece("B" + std::to_string(n) + ".5", PieceKind::Log, {halfplane(cx(R, 0.0), 1.0)}));
    }
    for (int n = 0; n < m; ++n) {
        cx za(-R, R + 1.0), zb(-R, -R - 1.0);
        add_pairing(s, left(n), 0, top(n), 1, AffMap{}, {{za, za}}, 2, 0);
        add_pairing(s, left(n), 0, bottom(n), 1, AffMap{}, {{zb, zb}}, 0, 0);
        s.overlaps.push_back({top(n), petal(n), LogGlue{model.s, model.b_upper[n]}});
        s.overlaps.push_back({petal(n), bottom((n + 1) % m), LogGlue{}});
    }
    const bool centered = is_centered(model.family);
    for (int n = 0; n < m; ++n) {
        CycleHint h;
        h.piece = left(n);
        h.at_infinity = true;
        h.direction = -1.0;
        h.order = model.d;
        h.residue = model.res;
        h.centered = centered;
        h.label = "irregular";
        h.family_u = model.family.u;
        h.family_b = model.family.b;
        s.hints.push_back(h);
    }
    const double rs = R + kPi;
    for (int n = 0; n < m; ++n) {
        std::string id = std::to_string(n);
        TrapRegion up{"sepal+" + id, "sepal", {}, {}};
        up.entry = {{top(n), {halfplane(cx(0.0, rs), kI)}}, {left(n), {halfplane(cx(0.0, rs), kI)}}};
        up.hold = {{top(n), {}}, {left(n), {halfplane(cx(0.0, R), kI)}}};
        TrapRegion down{"sepal-" + id, "sepal", {}, {}};
        down.entry = {{bottom(n), {halfplane(cx(0.0, -rs), -kI)}}, {left(n), {halfplane(cx(0.0, -rs), -kI)}}};
        down.hold = {{bottom(n), {}}, {left(n), {halfplane(cx(0.0, -R), -kI)}}};
        TrapRegion pet{"petal" + id + ".5", "petal", {{petal(n), {}}}, {{petal(n), {}}}};
        s.traps.push_back(up);
        s.traps.push_back(down);
        s.traps.push_back(pet);
    }
    finalize(s);
    return s;
}

}  // namespace affsurf
