#pragma once

#include "aggrate/rate.hpp"

namespace aggrate {

struct PowerBudget {
    double total_elec = 1.0;       // joint electrical budget
    double max_avg_optical = 1.0;  // cap on q1 * mean
    double max_inst_optical = 1.0; // cap on q1 * peak
    // When true the electrical budget is priced with the constellation caps
    // instead of the current moments.
    bool budget_uses_caps = false;

    void validate() const;
    // amplitude cap: min(max_avg_optical / mean_cap, max_inst_optical / peak)
    double tau(const OpticalConstellation& c) const;
};

struct PowerAllocation {
    double q1_sq = 0.0;
    double q2_sq = 0.0;
    double gamma = 0.0; // electrical budget multiplier
    double nu = 0.0;    // optical amplitude multiplier
    bool clamped_q1 = false, clamped_q2 = false;
};

// budget coefficient per link: efficiency times priced power
double budget_coef_lifi(const OpticalConstellation& c, const LinkPhysics& phys,
                        const PowerBudget& budget);
double budget_coef_wifi(const RFConstellation& c, const LinkPhysics& phys,
                        const PowerBudget& budget);

// Water-filling on the LMMSE surrogate: bisection on the budget multiplier,
// with the amplitude-cap multiplier recovered in closed form each step.
// Requires non-degenerate constellations (positive electrical power).
PowerAllocation wf_allocate(const OpticalConstellation& c1, const RFConstellation& c2,
                            const LinkPhysics& phys1, const LinkPhysics& phys2,
                            const PowerBudget& budget, double tol = 1e-8);

// Closed-form lower-bound objective along the budget-equality line,
// parameterized by the optical power share.
double lb_phi(double q1_sq, const OpticalConstellation& c1, const RFConstellation& c2,
              const LinkPhysics& phys1, const LinkPhysics& phys2, const PowerBudget& budget);

// Signed stationarity residual of the objective above; a root is a
// stationary point. Positive residual means more optical power helps.
double lb_stationary_residual(double q1_sq, const OpticalConstellation& c1,
                              const RFConstellation& c2, const LinkPhysics& phys1,
                              const LinkPhysics& phys2, const PowerBudget& budget);

struct LbAllocation {
    PowerAllocation alloc;
    double phi = 0.0; // minimized objective value
};

// Global minimizer of the lower-bound objective over the feasible interval:
// endpoint candidates plus any interior stationary roots, budget equality
// enforced throughout.
LbAllocation lb_allocate(const OpticalConstellation& c1, const RFConstellation& c2,
                         const LinkPhysics& phys1, const LinkPhysics& phys2,
                         const PowerBudget& budget, double root_tol = 1e-8);

} // namespace aggrate
