#include "aggrate/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace aggrate {
namespace {

std::string fmt(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, buf + len);
}

bool lifi_alive(const OpticalConstellation& c, const LinkPhysics& phys) {
    return c.size() > 1 && moments(c).elec_power > 0.0 && phys.gain_mag() > 0.0;
}

bool wifi_alive(const RFConstellation& c, const LinkPhysics& phys) {
    return c.size() > 1 && moments(c).elec_power > 0.0 && phys.gain_mag() > 0.0;
}

// budget-exhausting split when one of the links cannot carry information
PowerAllocation degenerate_split(const OpticalConstellation& c1, const RFConstellation& c2,
                                 const LinkPhysics& phys1, const LinkPhysics& phys2,
                                 const PowerBudget& budget, bool to_lifi) {
    PowerAllocation a;
    const double pt = budget.total_elec;
    if (pt == 0.0) return a;
    const double k1 = budget_coef_lifi(c1, phys1, budget);
    const double k2 = budget_coef_wifi(c2, phys2, budget);
    const double tau2 = budget.tau(c1) * budget.tau(c1);
    if (to_lifi) {
        a.q1_sq = (k1 > 0.0) ? std::min(tau2, pt / k1) : tau2;
        a.clamped_q1 = a.q1_sq >= tau2 * (1.0 - 1e-12);
        a.q2_sq = (k2 > 0.0) ? std::max(0.0, (pt - k1 * a.q1_sq) / k2) : 0.0;
    } else {
        a.q1_sq = 0.0;
        a.q2_sq = (k2 > 0.0) ? pt / k2 : 0.0;
    }
    return a;
}

double budget_slack_of(const PowerAllocation& a, const OpticalConstellation& c1,
                       const RFConstellation& c2, const LinkPhysics& phys1,
                       const LinkPhysics& phys2, const PowerBudget& budget) {
    return budget.total_elec - budget_coef_lifi(c1, phys1, budget) * a.q1_sq -
           budget_coef_wifi(c2, phys2, budget) * a.q2_sq;
}

} // namespace

void AlternatingConfig::validate() const {
    if (!(outer_tol_scale > 0) && !(outer_tol_abs > 0))
        throw ConfigError("alternating: outer tolerance must be > 0");
    if (max_outer < 1) throw ConfigError("alternating: max outer iterations must be >= 1");
    pgd.validate();
    fw.validate();
    if (!(wf_tol > 0) || !(root_tol > 0))
        throw ConfigError("alternating: inner tolerances must be > 0");
}

double AlternatingConfig::outer_tol(double b1, double b2) const {
    return (outer_tol_abs > 0) ? outer_tol_abs : outer_tol_scale * (b1 + b2);
}

std::string Solution::trace_csv_header() { return "iter,objective"; }

std::string Solution::trace_csv() const {
    std::string out = "# schema=1\n" + trace_csv_header() + "\n";
    for (std::size_t i = 0; i < outer_trace.size(); ++i)
        out += std::to_string(i + 1) + "," + fmt(outer_trace[i]) + "\n";
    return out;
}

std::string Solution::summary_csv_header() {
    return "objective,q1_sq,q2_sq,outer_iters,converged,budget_slack";
}

std::string Solution::summary_csv_row() const {
    return fmt(objective) + "," + fmt(alloc.q1_sq) + "," + fmt(alloc.q2_sq) + "," +
           std::to_string(outer_trace.size()) + "," + (converged ? "1" : "0") + "," +
           fmt(budget_slack);
}

PowerAllocation allocate_power_exact(const OpticalConstellation& c1, const RFConstellation& c2,
                                     const LinkPhysics& phys1, const LinkPhysics& phys2,
                                     const PowerBudget& budget, double tol) {
    const bool l1 = lifi_alive(c1, phys1);
    const bool l2 = wifi_alive(c2, phys2);
    if (budget.total_elec == 0.0) return {};
    if (l1 && l2) return wf_allocate(c1, c2, phys1, phys2, budget, tol);
    if (l1) return degenerate_split(c1, c2, phys1, phys2, budget, true);
    if (l2) return degenerate_split(c1, c2, phys1, phys2, budget, false);
    return {};
}

PowerAllocation allocate_power_lb(const OpticalConstellation& c1, const RFConstellation& c2,
                                  const LinkPhysics& phys1, const LinkPhysics& phys2,
                                  const PowerBudget& budget, double root_tol) {
    const bool l1 = lifi_alive(c1, phys1);
    const bool l2 = wifi_alive(c2, phys2);
    if (budget.total_elec == 0.0) return {};
    if (l1 && l2) return lb_allocate(c1, c2, phys1, phys2, budget, root_tol).alloc;
    if (l1) return degenerate_split(c1, c2, phys1, phys2, budget, true);
    if (l2) return degenerate_split(c1, c2, phys1, phys2, budget, false);
    return {};
}

Solution optimize_exact(const OpticalConstellation& c1_in, const RFConstellation& c2_in,
                        const LinkPhysics& phys1, const LinkPhysics& phys2,
                        const PowerBudget& budget, const QuadratureSpec& quad,
                        const AlternatingConfig& cfg) {
    cfg.validate();
    budget.validate();
    c1_in.validate();
    c2_in.validate();
    Solution sol;
    sol.c1 = c1_in;
    sol.c2 = c2_in;
    // start from the given distributions projected into the feasible sets
    // (equiprobable inputs give the projected-equiprobable start)
    if (sol.c1.size() > 1)
        sol.c1.probs = project_feasible(sol.c1.probs, FeasibleSet::optical(sol.c1));
    if (sol.c2.size() > 1)
        sol.c2.probs = project_feasible(sol.c2.probs, FeasibleSet::rf(sol.c2));

    const GaussianExpectation engine(quad);
    const double tol = cfg.outer_tol(phys1.bandwidth_hz, phys2.bandwidth_hz);
    const bool l1 = lifi_alive(sol.c1, phys1);
    const bool l2 = wifi_alive(sol.c2, phys2);

    auto eval = [&](const OpticalConstellation& a, const RFConstellation& b,
                    const PowerAllocation& q) {
        return rate_lifi(a, q.q1_sq, phys1, engine) + rate_wifi(b, q.q2_sq, phys2, engine);
    };

    sol.alloc = allocate_power_exact(sol.c1, sol.c2, phys1, phys2, budget, cfg.wf_tol);
    double best = eval(sol.c1, sol.c2, sol.alloc);
    sol.outer_trace.push_back(best);
    sol.converged = true;

    if ((l1 || l2) && budget.total_elec > 0.0) {
        sol.converged = false;
        for (int k = 2; k <= cfg.max_outer; ++k) {
            OpticalConstellation c1 = sol.c1;
            RFConstellation c2 = sol.c2;
            if (l1 && c1.size() > 1)
                c1.probs = pgd_optimize_lifi(c1, sol.alloc.q1_sq, phys1, quad, cfg.pgd).probs;
            if (l2 && c2.size() > 1)
                c2.probs = pgd_optimize_wifi(c2, sol.alloc.q2_sq, phys2, quad, cfg.pgd).probs;
            const PowerAllocation alloc =
                allocate_power_exact(c1, c2, phys1, phys2, budget, cfg.wf_tol);
            const double rate = eval(c1, c2, alloc);
            if (rate > best) {
                const double delta = rate - best;
                sol.c1 = std::move(c1);
                sol.c2 = std::move(c2);
                sol.alloc = alloc;
                best = rate;
                sol.outer_trace.push_back(best);
                if (delta <= tol) {
                    sol.converged = true;
                    break;
                }
            } else {
                // no improvement over the kept iterate: fixed point reached
                sol.outer_trace.push_back(best);
                sol.converged = true;
                break;
            }
        }
    }
    sol.objective = best;
    sol.budget_slack = budget_slack_of(sol.alloc, sol.c1, sol.c2, phys1, phys2, budget);
    return sol;
}

Solution optimize_lower_bound(const OpticalConstellation& c1_in, const RFConstellation& c2_in,
                              const LinkPhysics& phys1, const LinkPhysics& phys2,
                              const PowerBudget& budget, const AlternatingConfig& cfg) {
    cfg.validate();
    budget.validate();
    c1_in.validate();
    c2_in.validate();
    Solution sol;
    sol.c1 = c1_in;
    sol.c2 = c2_in;
    if (sol.c1.size() > 1)
        sol.c1.probs = project_feasible(sol.c1.probs, FeasibleSet::optical(sol.c1));
    if (sol.c2.size() > 1)
        sol.c2.probs = project_feasible(sol.c2.probs, FeasibleSet::rf(sol.c2));

    const double tol = cfg.outer_tol(phys1.bandwidth_hz, phys2.bandwidth_hz);
    const bool l1 = lifi_alive(sol.c1, phys1);
    const bool l2 = wifi_alive(sol.c2, phys2);

    auto eval = [&](const OpticalConstellation& a, const RFConstellation& b,
                    const PowerAllocation& q) {
        return bounds_aggregate(a, b, q.q1_sq, q.q2_sq, phys1, phys2).lower;
    };

    sol.alloc = allocate_power_lb(sol.c1, sol.c2, phys1, phys2, budget, cfg.root_tol);
    double best = eval(sol.c1, sol.c2, sol.alloc);
    sol.outer_trace.push_back(best);
    sol.converged = true;

    if ((l1 || l2) && budget.total_elec > 0.0) {
        sol.converged = false;
        for (int k = 2; k <= cfg.max_outer; ++k) {
            OpticalConstellation c1 = sol.c1;
            RFConstellation c2 = sol.c2;
            // probability update against the held allocation, then a power
            // re-solve so the iterate ends budget-tight at its own moments
            if (l1 && c1.size() > 1)
                c1.probs = fw_optimize_lifi(c1, sol.alloc.q1_sq, phys1, cfg.fw).probs;
            if (l2 && c2.size() > 1)
                c2.probs = fw_optimize_wifi(c2, sol.alloc.q2_sq, phys2, cfg.fw).probs;
            const PowerAllocation alloc =
                allocate_power_lb(c1, c2, phys1, phys2, budget, cfg.root_tol);
            const double lb = eval(c1, c2, alloc);
            if (lb > best) {
                const double delta = lb - best;
                sol.c1 = std::move(c1);
                sol.c2 = std::move(c2);
                sol.alloc = alloc;
                best = lb;
                sol.outer_trace.push_back(best);
                if (delta <= tol) {
                    sol.converged = true;
                    break;
                }
            } else {
                sol.outer_trace.push_back(best);
                sol.converged = true;
                break;
            }
        }
    }
    sol.objective = best;
    sol.budget_slack = budget_slack_of(sol.alloc, sol.c1, sol.c2, phys1, phys2, budget);
    return sol;
}

} // namespace aggrate
