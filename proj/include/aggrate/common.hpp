#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace aggrate {

using cplx = std::complex<double>;

inline constexpr double kPi  = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;

// Floor applied to probability-weighted exponential mixtures before logs,
// so fully underflowed mixtures stay finite.
inline constexpr double kMixFloor = 1e-300;

// Invalid configuration or argument (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structurally valid input whose constraints cannot be met (CLI exit code 3).
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative method failed to produce a usable result (CLI exit code 4).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double deg2rad(double deg) { return deg * kPi / 180.0; }

} // namespace aggrate
