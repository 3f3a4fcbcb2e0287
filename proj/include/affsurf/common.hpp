#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace affsurf {

using cx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline const cx kI{0.0, 1.0};

struct Tolerances {
    double eps_zero = 1e-12;
    double eps_geom = 1e-9;
    double eps_arg = 1e-9;
};

// Process-wide tolerances. Set once at startup, read everywhere.
const Tolerances& tol();
void set_tolerances(const Tolerances& t);

// Domain errors map to CLI exit 1, invariant breaches to exit 2.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what, bool breach = false)
        : std::runtime_error(what), kind_(std::move(kind)), breach_(breach) {}
    const std::string& kind() const { return kind_; }
    bool breach() const { return breach_; }

private:
    std::string kind_;
    bool breach_;
};

inline bool finite(cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Angle of b relative to a, in (-pi, pi].
inline double angle_between(cx a, cx b) { return std::arg(b / a); }

}  // namespace affsurf
