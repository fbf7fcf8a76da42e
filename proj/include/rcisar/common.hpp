#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace rcisar {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

using cd = std::complex<double>;

/// Wrap an angle into (-pi, pi].
inline double wrap_pi(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

inline double db10(double power_ratio) { return 10.0 * std::log10(power_ratio); }
inline double from_db10(double db) { return std::pow(10.0, db / 10.0); }

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GatingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rcisar
