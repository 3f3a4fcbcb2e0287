#include "affsurf/doublepole.hpp"

#include <array>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace affsurf {

namespace {

// Lanczos, g = 7, n = 9.
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

cx log_gamma_right(cx z)
{
    // valid for Re z >= 0.5
    z -= 1.0;
    cx x = kLanczos[0];
    for (int i = 1; i < 9; ++i)
        x += kLanczos[i] / (z + static_cast<double>(i));
    cx t = z + 7.5;
    return 0.5 * std::log(kTwoPi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

bool near_integer(cx z, double eps)
{
    return std::abs(z.imag()) <= eps && std::abs(z.real() - std::round(z.real())) <= eps;
}

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

template <class F>
cx integrate(F f, double a, double b, int panels, double tol_rel = 1e-13)
{
    cx acc{0.0, 0.0};
    double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        double err = 0.0;
        acc += GK::integrate(f, a + k * h, a + (k + 1) * h, 20, tol_rel, &err);
    }
    return acc;
}

}  // namespace

cx gamma_euler(cx z)
{
    if (z.real() <= 0.0 && near_integer(z, 1e-9))
        throw Error("PoleOfGamma", "Gamma evaluated at a non-positive integer");
    if (z.real() < 0.5)
        return kPi / (std::sin(kPi * z) * std::exp(log_gamma_right(1.0 - z)));
    return std::exp(log_gamma_right(z));
}

cx loop_integral_I(cx res, double r, int quad)
{
    if (r <= 0.0 || quad < 64)
        throw Error("BadQuadrature", "loop integral needs r > 0 and at least 64 nodes");
    const int panels = quad / 16;
    const double delta = std::min(r, 1.0 / (20.0 + 5.0 * std::abs(res)));

    // (0, delta] via y = 1/x: y^{res-2} e^{-y} on [1/delta, inf)
    double y0 = 1.0 / delta;
    auto tail = [&](double t) -> cx {
        double y = y0 + t;
        return std::exp((res - 2.0) * std::log(y) - y);
    };
    cx near0 = integrate(tail, 0.0, 40.0, panels) + integrate(tail, 40.0, 200.0, panels);

    auto radial = [&](double x) -> cx { return std::exp(-res * std::log(x) - 1.0 / x); };
    cx mid = delta < r ? integrate(radial, delta, r, panels) : cx(0.0, 0.0);
    cx radial_total = near0 + mid;

    // circle with the lifted argument theta in [0, 2 pi]
    auto circ = [&](double th) -> cx {
        cx logz(std::log(r), th);
        cx z = std::exp(logz);
        return std::exp(-res * logz - 1.0 / z) * kI * z;
    };
    cx circle = integrate(circ, 0.0, kTwoPi, panels);

    cx monodromy = std::exp(-kTwoPi * kI * res);
    cx I = radial_total + circle - monodromy * radial_total;
    if (!finite(I))
        throw Error("QuadratureNotConverged", "loop integral did not converge");
    return I;
}

ClassCReport class_c_report(cx res, double r, int quad)
{
    ClassCReport rep;
    rep.res = res;
    rep.I = loop_integral_I(res, r, quad);
    rep.centered = centered_class_C(res);
    if (!(res.real() <= 1.0 && near_integer(res, 1e-9))) {
        rep.gamma_prediction = (1.0 - std::exp(-kTwoPi * kI * res)) * gamma_euler(res - 1.0);
        rep.agreement = std::abs(rep.I - rep.gamma_prediction) / (1.0 + std::abs(rep.I));
    }
    return rep;
}

bool centered_class_C(cx res) { return near_integer(res, 1e-9) && std::round(res.real()) >= 2.0; }

int min_fuchsian_count(cx res, bool centered)
{
    bool in_tail = near_integer(res, 1e-9) && std::round(res.real()) >= 2.0;
    bool is_two = in_tail && std::round(res.real()) == 2.0;
    if (is_two && centered)
        return 0;
    if (in_tail && centered)
        return 1;
    if (!in_tail && !centered)
        return 1;
    return 2;
}

}  // namespace affsurf
