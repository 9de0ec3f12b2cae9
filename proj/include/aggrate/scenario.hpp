#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "aggrate/channel.hpp"
#include "aggrate/solver.hpp"

namespace aggrate {

enum class FadingMode { mean, los, sampled };

// Full problem description as loaded from the JSON scenario file.
struct Scenario {
    std::uint64_t seed = 1;

    LiFiGeometry lifi_geom;
    std::optional<double> lifi_gain_override;
    OpticalConstellation c1;
    double b1_hz = 40e6;
    double sigma1_sq = 1e-21; // A^2/Hz
    double eta1 = 1.0;
    double drive_current_max_a = 8.0; // stored, no formula consumes it

    WiFiGeometry wifi_geom;
    std::optional<cplx> wifi_gain_override;
    FadingMode fading = FadingMode::mean;
    RFConstellation c2;
    double b2_hz = 20e6;
    double sigma2_sq = 0.0; // W/Hz; set from dBm/MHz on load
    double eta2 = 1.0;

    PowerBudget budget;
    QuadratureSpec quad;
    AlternatingConfig solver;

    // fixed allocation for the plain rate command
    bool equal_split = true;
    double q1_sq_fixed = 0.0, q2_sq_fixed = 0.0;

    static Scenario table1_default();
    static Scenario from_json_text(const std::string& text);
    static Scenario load(const std::string& path);
    std::string to_json_text() const;

    LinkPhysics lifi_physics() const;
    LinkPhysics wifi_physics() const; // applies the fading mode and seed
    // equal electrical split of the budget, optical amplitude cap honored
    PowerAllocation fixed_allocation() const;
    void validate() const;
};

double dbm_per_mhz_to_w_per_hz(double dbm_per_mhz);

} // namespace aggrate
