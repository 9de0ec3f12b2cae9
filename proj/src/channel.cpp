#include "aggrate/channel.hpp"

#include <cmath>
#include <random>

#include "aggrate/quadrature.hpp"

namespace aggrate {

void LiFiGeometry::validate() const {
    if (!(distance_m > 0)) throw ConfigError("lifi geometry: distance must be > 0");
    if (!(detector_area_m2 > 0)) throw ConfigError("lifi geometry: detector area must be > 0");
    if (!(half_power_angle_deg > 0 && half_power_angle_deg < 90))
        throw ConfigError("lifi geometry: half-power angle must be in (0, 90) degrees");
    if (!(fov_deg > 0 && fov_deg <= 90))
        throw ConfigError("lifi geometry: fov must be in (0, 90] degrees");
    if (!(refractive_index >= 1)) throw ConfigError("lifi geometry: refractive index must be >= 1");
    if (!(filter_gain > 0)) throw ConfigError("lifi geometry: filter gain must be > 0");
}

void WiFiGeometry::validate() const {
    if (!(distance_m > 0)) throw ConfigError("wifi geometry: distance must be > 0");
    if (!(breakpoint_m > 0)) throw ConfigError("wifi geometry: breakpoint distance must be > 0");
    if (!(carrier_hz > 0)) throw ConfigError("wifi geometry: carrier frequency must be > 0");
    if (!(ricean_k >= 0)) throw ConfigError("wifi geometry: ricean K must be >= 0");
    if (!(shadow_std_near_db >= 0) || !(shadow_std_far_db >= 0))
        throw ConfigError("wifi geometry: shadow stds must be >= 0");
}

double lambertian_order(double half_power_angle_deg) {
    if (!(half_power_angle_deg > 0.0 && half_power_angle_deg < 90.0))
        throw std::domain_error("lambertian order: half-power angle must be in (0, 90) degrees");
    return -kLn2 / std::log(std::cos(deg2rad(half_power_angle_deg)));
}

double lifi_gain(const LiFiGeometry& g) {
    g.validate();
    const double incidence = deg2rad(g.incidence_angle_deg);
    const double fov = deg2rad(g.fov_deg);
    if (std::abs(incidence) > fov) return 0.0;
    const double m = lambertian_order(g.half_power_angle_deg);
    const double conc = g.refractive_index * g.refractive_index /
                        (std::sin(fov) * std::sin(fov));
    const double radiance = deg2rad(g.radiance_angle_deg);
    return (m + 1.0) * g.detector_area_m2 / (2.0 * kPi * g.distance_m * g.distance_m) *
           std::pow(std::cos(radiance), m) * std::cos(incidence) * g.filter_gain * conc;
}

double wifi_path_loss_db(double distance_m, double carrier_hz, double breakpoint_m) {
    if (!(distance_m > 0)) throw std::domain_error("path loss: distance must be > 0");
    double loss = 20.0 * std::log10(distance_m) + 20.0 * std::log10(carrier_hz) - 147.5;
    if (distance_m > breakpoint_m)
        loss += 35.0 * std::log10(distance_m / breakpoint_m);
    return loss;
}

cplx wifi_gain(const WiFiGeometry& g, const FadingSample& f) {
    g.validate();
    const double k = g.ricean_k;
    const cplx los = std::sqrt(k / (k + 1.0)) *
                     std::polar(1.0, deg2rad(g.aoa_deg));
    const cplx gr = los + std::sqrt(1.0 / (k + 1.0)) * f.scatter;
    const double loss_db = wifi_path_loss_db(g.distance_m, g.carrier_hz, g.breakpoint_m);
    return gr * std::pow(10.0, -(loss_db + f.shadow_db) / 20.0);
}

FadingSample sample_fading(std::uint64_t seed, const WiFiGeometry& g) {
    g.validate();
    std::mt19937_64 rng(splitmix64(seed));
    std::normal_distribution<double> unit(0.0, 1.0);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    FadingSample s;
    s.scatter = cplx(unit(rng) * inv_sqrt2, unit(rng) * inv_sqrt2);
    const double sigma = (g.distance_m <= g.breakpoint_m) ? g.shadow_std_near_db
                                                          : g.shadow_std_far_db;
    s.shadow_db = unit(rng) * sigma;
    return s;
}

cplx wifi_gain_los(const WiFiGeometry& g) {
    g.validate();
    const double loss_db = wifi_path_loss_db(g.distance_m, g.carrier_hz, g.breakpoint_m);
    return std::polar(std::pow(10.0, -loss_db / 20.0), deg2rad(g.aoa_deg));
}

} // namespace aggrate
