#include "affsurf/fuchsian.hpp"

#include <algorithm>
#include <cmath>

namespace affsurf {

namespace {

bool is_integer(double x, double eps) { return std::abs(x - std::round(x)) <= eps; }

double mag(const cx& z) { return std::abs(z); }
double mag(const qcx& z) { return static_cast<double>(abs(z)); }

template <class C>
C coef(const std::vector<C>& f, int k)
{
    return k >= 0 && k < static_cast<int>(f.size()) ? f[k] : C(0.0);
}

template <class C>
C ipow(C x, int n)
{
    if (n < 0)
        return C(1.0) / ipow(x, -n);
    C r(1.0);
    while (n) {
        if (n & 1)
            r *= x;
        x *= x;
        n >>= 1;
    }
    return r;
}

template <class C>
std::vector<C> mul(const std::vector<C>& f, const std::vector<C>& g, int order)
{
    std::vector<C> h(order + 1, C(0.0));
    for (int i = 0; i < static_cast<int>(f.size()) && i <= order; ++i)
        for (int j = 0; j < static_cast<int>(g.size()) && i + j <= order; ++j)
            h[i + j] += f[i] * g[j];
    return h;
}

// (1 + psi)^n for integer n by the J.C.P. Miller recurrence; f[0] == 1.
template <class C>
std::vector<C> unit_power(const std::vector<C>& f, int n, int order)
{
    std::vector<C> g(order + 1, C(0.0));
    g[0] = C(1.0);
    for (int k = 1; k <= order; ++k) {
        C acc(0.0);
        for (int j = 1; j <= k && j < static_cast<int>(f.size()); ++j)
            acc += C(static_cast<double>((n + 1) * j - k)) * f[j] * g[k - j];
        g[k] = acc / C(static_cast<double>(k));
    }
    return g;
}

template <class C>
std::vector<C> reciprocal(const std::vector<C>& f, int order)
{
    std::vector<C> g(order + 1, C(0.0));
    g[0] = C(1.0) / f[0];
    for (int k = 1; k <= order; ++k) {
        C acc(0.0);
        for (int j = 1; j <= k && j < static_cast<int>(f.size()); ++j)
            acc += f[j] * g[k - j];
        g[k] = -acc / f[0];
    }
    return g;
}

template <class C>
std::vector<C> compose_t(const std::vector<C>& f, const std::vector<C>& g, int order)
{
    std::vector<C> out(order + 1, C(0.0));
    std::vector<C> gp{C(1.0)};
    for (int k = 0; k < static_cast<int>(f.size()) && k <= order; ++k) {
        if (k > 0)
            gp = mul(gp, g, order);
        for (int j = 0; j <= order && j < static_cast<int>(gp.size()); ++j)
            out[j] += f[k] * gp[j];
    }
    return out;
}

template <class C>
std::vector<C> reverse_t(const std::vector<C>& f, int order)
{
    C a1 = coef(f, 1);
    if (mag(a1) <= tol().eps_zero)
        throw Error("NonInvertibleJet", "series has vanishing linear term");
    std::vector<C> g(order + 1, C(0.0));
    g[1] = C(1.0) / a1;
    for (int it = 2; it <= order; ++it) {
        std::vector<C> fg = compose_t(f, g, order);
        for (int k = 2; k <= order; ++k)
            g[k] -= fg[k] / a1;
    }
    return g;
}

template <class C>
Laurent<C> pullback_t(const Laurent<C>& gamma, const std::vector<C>& phi, int N)
{
    if (N < gamma.lo)
        throw Error("BadTruncation", "truncation order below the lowest order of gamma");
    C a1 = coef(phi, 1);
    if (mag(a1) <= tol().eps_zero)
        throw Error("NonInvertibleJet", "substitution has vanishing linear term");

    const int span = N - gamma.lo + 2;
    // phi = a1 X (1 + psi)
    std::vector<C> unit(span + 1, C(0.0));
    unit[0] = C(1.0);
    for (int k = 1; k <= span; ++k)
        unit[k] = coef(phi, k + 1) / a1;

    std::vector<C> comp(N - gamma.lo + 1, C(0.0));
    for (int n = gamma.lo; n <= std::min(N, gamma.hi()); ++n) {
        C gn = gamma.at(n);
        if (mag(gn) == 0.0)
            continue;
        int need = N - n;
        std::vector<C> p = unit_power(unit, n, need);
        C an = gn * ipow(a1, n);
        for (int k = 0; k <= need; ++k)
            comp[n - gamma.lo + k] += an * p[k];
    }

    std::vector<C> d1(N - gamma.lo + 2, C(0.0));
    for (int k = 0; k < static_cast<int>(d1.size()); ++k)
        d1[k] = C(static_cast<double>(k + 1)) * coef(phi, k + 1);

    Laurent<C> out;
    out.lo = std::min(gamma.lo, 0);
    out.c.assign(N - out.lo + 1, C(0.0));
    for (int i = 0; i < static_cast<int>(comp.size()); ++i) {
        int oi = gamma.lo + i;
        for (int j = 0; oi + j <= N && j < static_cast<int>(d1.size()); ++j)
            out.c[oi + j - out.lo] += comp[i] * d1[j];
    }
    if (N >= 0) {
        std::vector<C> d2(N + 1, C(0.0));
        for (int k = 0; k <= N; ++k)
            d2[k] = C(static_cast<double>((k + 2) * (k + 1))) * coef(phi, k + 2);
        std::vector<C> q = mul(d2, reciprocal(d1, N), N);
        for (int k = 0; k <= N; ++k)
            out.c[k - out.lo] += q[k];
    }
    return out;
}

}  // namespace

FuchsianClass classify_residue(cx rho, std::optional<bool> shifted_hint)
{
    const double eps = tol().eps_arg;
    FuchsianClass out;
    double re = rho.real(), im = rho.imag();
    out.factor = std::exp(kTwoPi * im);
    if (std::abs(rho) <= eps) {
        out.tag = FuchsianTag::Erasable;
        out.angle = kTwoPi;
        return out;
    }
    if (std::abs(re - 1.0) <= eps) {
        if (std::abs(im) <= eps)
            out.tag = FuchsianTag::Cylindrical;
        else
            out.tag = im > 0 ? FuchsianTag::ReebPlus : FuchsianTag::ReebMinus;
        return out;
    }
    if (re < 1.0) {
        out.tag = FuchsianTag::Conical;
        out.angle = kTwoPi * (1.0 - re);
        return out;
    }
    out.angle = kTwoPi * (re - 1.0);
    out.tag = FuchsianTag::AntiConical;
    if (std::abs(im) <= eps && is_integer(re, eps)) {
        out.tag = FuchsianTag::AmbiguousInteger;
        if (shifted_hint) {
            out.tag = FuchsianTag::AntiConical;
            out.shifted = shifted_hint;
        }
    }
    return out;
}

std::string to_string(FuchsianTag t)
{
    switch (t) {
    case FuchsianTag::Erasable: return "Erasable";
    case FuchsianTag::Conical: return "Conical";
    case FuchsianTag::Cylindrical: return "Cylindrical";
    case FuchsianTag::ReebPlus: return "ReebPlus";
    case FuchsianTag::ReebMinus: return "ReebMinus";
    case FuchsianTag::AntiConical: return "AntiConical";
    case FuchsianTag::AmbiguousInteger: return "AmbiguousInteger";
    }
    return "?";
}

LaurentSeries trimmed(const LaurentSeries& s, double eps)
{
    LaurentSeries out = s;
    std::size_t k = 0;
    while (k < out.c.size() && std::abs(out.c[k]) <= eps)
        ++k;
    if (k == out.c.size())
        return {s.hi(), {cx(0.0, 0.0)}};
    out.c.erase(out.c.begin(), out.c.begin() + static_cast<long>(k));
    out.lo += static_cast<int>(k);
    return out;
}

LaurentSeriesQ to_quad(const LaurentSeries& s)
{
    LaurentSeriesQ q{s.lo, {}};
    for (const cx& z : s.c)
        q.c.emplace_back(z.real(), z.imag());
    return q;
}

PowerSeriesQ to_quad(const PowerSeries& p)
{
    PowerSeriesQ q;
    for (const cx& z : p)
        q.emplace_back(z.real(), z.imag());
    return q;
}

LaurentSeries to_double(const LaurentSeriesQ& s)
{
    LaurentSeries d{s.lo, {}};
    for (const qcx& z : s.c)
        d.c.emplace_back(static_cast<double>(real(z)), static_cast<double>(imag(z)));
    return d;
}

PowerSeries to_double(const PowerSeriesQ& p)
{
    PowerSeries d;
    for (const qcx& z : p)
        d.emplace_back(static_cast<double>(real(z)), static_cast<double>(imag(z)));
    return d;
}

PowerSeries series_compose(const PowerSeries& f, const PowerSeries& g, int order) { return compose_t(f, g, order); }
PowerSeries series_reverse(const PowerSeries& f, int order) { return reverse_t(f, order); }
PowerSeriesQ series_reverse(const PowerSeriesQ& f, int order) { return reverse_t(f, order); }

LaurentSeries pullback_gamma(const LaurentSeries& gamma, const PowerSeries& phi, int N)
{
    return pullback_t(gamma, phi, N);
}

LaurentSeriesQ pullback_gamma(const LaurentSeriesQ& gamma, const PowerSeriesQ& phi, int N)
{
    return pullback_t(gamma, phi, N);
}

NormalForm formal_normal_form(const LaurentSeries& gamma_in, std::optional<int> N_opt)
{
    LaurentSeries gamma_d = trimmed(gamma_in, tol().eps_zero);
    NormalForm nf;
    nf.d = std::max(0, -gamma_d.lo);
    const int d = nf.d;
    const int N = N_opt.value_or(d + 10);
    const int order = N + d + 3;
    LaurentSeriesQ gamma = to_quad(gamma_d);

    PowerSeriesQ phi(order + 1, qcx(0.0));
    phi[1] = qcx(1.0);
    if (d >= 2) {
        // principal root of gamma_{-d}, polished by Newton in full precision
        cx lead = gamma_d.at(-d);
        cx b0 = std::pow(lead, 1.0 / static_cast<double>(d - 1));
        qcx b(b0.real(), b0.imag()), L(lead.real(), lead.imag());
        for (int it = 0; it < 4; ++it) {
            qcx p = ipow(b, d - 2);
            b -= (p * b - L) / (qcx(static_cast<double>(d - 1)) * p);
        }
        phi[1] = b;
    }
    LaurentSeriesQ cur = pullback_t(gamma, phi, N);

    // Cancel X^m one order at a time with Psi = X + b X^k.
    const int first = d >= 2 ? -d + 1 : 0;
    for (int m = first; m <= N; ++m) {
        if (m == -1)
            continue;
        int k = d >= 1 ? 1 + d + m : m + 2;
        PowerSeriesQ psi(order + 1, qcx(0.0));
        psi[1] = qcx(1.0);
        psi[k] = qcx(1.0);
        qcx target = cur.at(m);
        if (mag(target) == 0.0)
            continue;
        qcx sens = pullback_t(cur, psi, N).at(m) - target;
        if (mag(sens) <= 1e-9) {
            nf.resonant.push_back(m);
            continue;
        }
        psi[k] = -target / sens;
        phi = compose_t(phi, psi, order);
        cur = pullback_t(gamma, phi, N);
    }

    nf.residue_coeff = gamma_d.at(-1);
    nf.phi_exact = phi;
    nf.phi = to_double(phi);
    LaurentSeries out;
    out.lo = std::min(-d, 0);
    out.c.assign(N - out.lo + 1, cx(0.0, 0.0));
    if (d >= 2)
        out.c[0] = 1.0;
    if (d >= 1)
        out.c[-1 - out.lo] = nf.residue_coeff;
    LaurentSeries curd = to_double(cur);
    for (int m : nf.resonant)
        out.c[m - out.lo] = curd.at(m);
    nf.normalized = out;
    return nf;
}

}  // namespace affsurf
