#pragma once

#include <optional>
#include <string>

#include "aggrate/constellation.hpp"
#include "aggrate/quadrature.hpp"

namespace aggrate {

// Per-link channel scale. For the RF link `gain` holds the complex channel
// coefficient; only its magnitude enters the rates once the amplification
// phase is aligned with the channel.
struct LinkPhysics {
    cplx gain{1.0, 0.0};
    double bandwidth_hz = 1.0;
    double noise_psd = 1.0;    // per-Hz noise variance
    double amp_efficiency = 1.0;

    void validate() const;
    double gain_mag() const { return std::abs(gain); }
};

double snr_lifi(const OpticalConstellation& c, double q1_sq, const LinkPhysics& phys);
double snr_wifi(const RFConstellation& c, double q2_sq, const LinkPhysics& phys);

// Exact achievable rates, bits/s. `std_err` receives the Monte Carlo standard
// error when the engine is stochastic (0 otherwise); `warn` receives a note
// when the rule looks too coarse for the operating point.
double rate_lifi(const OpticalConstellation& c, double q1_sq, const LinkPhysics& phys,
                 const GaussianExpectation& quad, double* std_err = nullptr,
                 std::string* warn = nullptr);
double rate_wifi(const RFConstellation& c, double q2_sq, const LinkPhysics& phys,
                 const GaussianExpectation& quad, double* std_err = nullptr,
                 std::string* warn = nullptr);

struct RateBounds {
    double lower = 0.0;
    double upper = 0.0;
};

// Closed-form Jensen bounds, bits/s. No integration.
RateBounds bounds_lifi(const OpticalConstellation& c, double q1_sq, const LinkPhysics& phys);
RateBounds bounds_wifi(const RFConstellation& c, double q2_sq, const LinkPhysics& phys);

struct RateReport {
    double snr1 = 0.0, snr2 = 0.0;
    double rate_lifi = 0.0, rate_wifi = 0.0, rate_total = 0.0;
    double lower_total = 0.0, upper_total = 0.0;
    double mc_std_lifi = 0.0, mc_std_wifi = 0.0;
    std::string quad_warning;

    static std::string csv_header();
    std::string csv_row() const;
};

RateReport rate_aggregate(const OpticalConstellation& c1, const RFConstellation& c2,
                          double q1_sq, double q2_sq, const LinkPhysics& phys1,
                          const LinkPhysics& phys2, const GaussianExpectation& quad);

RateBounds bounds_aggregate(const OpticalConstellation& c1, const RFConstellation& c2,
                            double q1_sq, double q2_sq, const LinkPhysics& phys1,
                            const LinkPhysics& phys2);

// Exact MMSE of the constellation input over the unit-noise channel
// y = sqrt(snr/eps) x + n, with eps the input's mean electrical power.
double mmse(const OpticalConstellation& c, double snr, const GaussianExpectation& quad);
double mmse(const RFConstellation& c, double snr, const GaussianExpectation& quad);

// t / (1 + t x) and its inverse on (0, t]
double lmmse(double t, double x);
double lmmse_inv(double t, double y);

// amplification that realizes a target SNR on the given link
double qsq_for_snr_lifi(double snr, const OpticalConstellation& c, const LinkPhysics& phys);
double qsq_for_snr_wifi(double snr, const RFConstellation& c, const LinkPhysics& phys);

} // namespace aggrate
