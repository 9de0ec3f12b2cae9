#pragma once

#include <cstdint>

#include "aggrate/common.hpp"

namespace aggrate {

// Optical line-of-sight geometry. Angles in degrees, distances in meters.
struct LiFiGeometry {
    double half_power_angle_deg = 60.0;
    double detector_area_m2 = 1e-4;
    double distance_m = 4.0;
    double radiance_angle_deg = 0.0;
    double incidence_angle_deg = 0.0;
    double filter_gain = 1.0;
    double refractive_index = 1.5;
    double fov_deg = 90.0;

    void validate() const;
};

struct WiFiGeometry {
    double distance_m = 4.0;
    double breakpoint_m = 5.0;
    double carrier_hz = 2.4e9;
    double ricean_k = 1.0;
    double aoa_deg = 45.0;
    double shadow_std_near_db = 3.0; // applies while distance <= breakpoint
    double shadow_std_far_db = 5.0;

    void validate() const;
};

struct FadingSample {
    cplx scatter{0.0, 0.0}; // unit-variance circular Gaussian draw
    double shadow_db = 0.0;
};

// m = -ln 2 / ln cos(theta_half); requires 0 < angle < 90
double lambertian_order(double half_power_angle_deg);

// Lambertian LOS gain with optical filter and concentrator; zero beyond FoV.
double lifi_gain(const LiFiGeometry& g);

// Free-space loss at the carrier plus the 35 dB/decade slope past the
// breakpoint distance. Shadowing excluded.
double wifi_path_loss_db(double distance_m, double carrier_hz, double breakpoint_m);

// Ricean small-scale gain times the path/shadow attenuation.
cplx wifi_gain(const WiFiGeometry& g, const FadingSample& f);

// mean-fading sample: scatter at its mean, no shadowing
inline FadingSample mean_fading() { return {}; }

// seeded draw; shadow std picked by distance vs breakpoint
FadingSample sample_fading(std::uint64_t seed, const WiFiGeometry& g);

// pure line-of-sight limit (K -> infinity): |g2| = 10^(-loss/20)
cplx wifi_gain_los(const WiFiGeometry& g);

} // namespace aggrate
