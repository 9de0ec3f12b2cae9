#pragma once

#include "aggrate/power.hpp"
#include "aggrate/shaping.hpp"

namespace aggrate {

struct AlternatingConfig {
    // outer stop: |R_k - R_{k-1}| <= outer_tol_abs when set, otherwise
    // outer_tol_scale * (B1 + B2)
    double outer_tol_scale = 1e-4;
    double outer_tol_abs = -1.0;
    int max_outer = 50;
    PGDConfig pgd;
    FWConfig fw;
    double wf_tol = 1e-8;
    double root_tol = 1e-8;

    void validate() const;
    double outer_tol(double b1, double b2) const;
};

struct Solution {
    OpticalConstellation c1; // final probabilities
    RFConstellation c2;
    PowerAllocation alloc;
    std::vector<double> outer_trace; // accepted objective per outer iteration
    bool converged = false;
    double objective = 0.0; // bits/s: exact rate or rate lower bound
    double budget_slack = 0.0;

    static std::string trace_csv_header();
    std::string trace_csv() const;
    static std::string summary_csv_header();
    std::string summary_csv_row() const;
};

// Alternation on the exact rate: water-filling power allocation, then
// projected-gradient probability updates, keeping the best iterate.
Solution optimize_exact(const OpticalConstellation& c1, const RFConstellation& c2,
                        const LinkPhysics& phys1, const LinkPhysics& phys2,
                        const PowerBudget& budget, const QuadratureSpec& quad,
                        const AlternatingConfig& cfg);

// Alternation on the closed-form rate lower bound: exact 1-D power
// allocation, then Frank-Wolfe probability updates.
Solution optimize_lower_bound(const OpticalConstellation& c1, const RFConstellation& c2,
                              const LinkPhysics& phys1, const LinkPhysics& phys2,
                              const PowerBudget& budget, const AlternatingConfig& cfg);

// power-only allocation used for the equiprobable baselines and degenerate links
PowerAllocation allocate_power_exact(const OpticalConstellation& c1, const RFConstellation& c2,
                                     const LinkPhysics& phys1, const LinkPhysics& phys2,
                                     const PowerBudget& budget, double tol);
PowerAllocation allocate_power_lb(const OpticalConstellation& c1, const RFConstellation& c2,
                                  const LinkPhysics& phys1, const LinkPhysics& phys2,
                                  const PowerBudget& budget, double root_tol);

} // namespace aggrate
