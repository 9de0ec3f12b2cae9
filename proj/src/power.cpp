#include "aggrate/power.hpp"

#include <algorithm>
#include <cmath>

#include "aggrate/simd/kernels.hpp"

namespace aggrate {
namespace {

struct LinkCoef {
    double beta = 0.0; // g^2 eps / (B psd): snr per unit q^2
    double k = 0.0;    // budget coefficient
    double eps = 0.0;  // current electrical power
};

LinkCoef coef_lifi(const OpticalConstellation& c, const LinkPhysics& phys,
                   const PowerBudget& budget) {
    LinkCoef lc;
    lc.eps = moments(c).elec_power;
    const double g = phys.gain_mag();
    lc.beta = g * g * lc.eps / (phys.bandwidth_hz * phys.noise_psd);
    lc.k = phys.amp_efficiency * (budget.budget_uses_caps ? c.elec_cap : lc.eps);
    return lc;
}

LinkCoef coef_wifi(const RFConstellation& c, const LinkPhysics& phys,
                   const PowerBudget& budget) {
    LinkCoef lc;
    lc.eps = moments(c).elec_power;
    const double g = phys.gain_mag();
    lc.beta = g * g * lc.eps / (phys.bandwidth_hz * phys.noise_psd);
    lc.k = phys.amp_efficiency * (budget.budget_uses_caps ? c.elec_cap : lc.eps);
    return lc;
}

} // namespace

void PowerBudget::validate() const {
    if (!(total_elec >= 0)) throw ConfigError("budget: total electrical power must be >= 0");
    if (!(max_avg_optical >= 0)) throw ConfigError("budget: average optical cap must be >= 0");
    if (!(max_inst_optical >= 0)) throw ConfigError("budget: instant optical cap must be >= 0");
}

double PowerBudget::tau(const OpticalConstellation& c) const {
    return std::min(max_avg_optical / c.mean_cap, max_inst_optical / c.peak);
}

double budget_coef_lifi(const OpticalConstellation& c, const LinkPhysics& phys,
                        const PowerBudget& budget) {
    return coef_lifi(c, phys, budget).k;
}

double budget_coef_wifi(const RFConstellation& c, const LinkPhysics& phys,
                        const PowerBudget& budget) {
    return coef_wifi(c, phys, budget).k;
}

PowerAllocation wf_allocate(const OpticalConstellation& c1, const RFConstellation& c2,
                            const LinkPhysics& phys1, const LinkPhysics& phys2,
                            const PowerBudget& budget, double tol) {
    if (!(tol > 0)) throw ConfigError("wf_allocate: tol must be > 0");
    budget.validate();
    const LinkCoef l1 = coef_lifi(c1, phys1, budget);
    const LinkCoef l2 = coef_wifi(c2, phys2, budget);
    if (!(l1.eps > 0) || !(l2.eps > 0))
        throw ConfigError("wf_allocate: constellations must carry positive electrical power");
    if (!(l1.beta > 0) || !(l2.beta > 0))
        throw ConfigError("wf_allocate: both links need positive channel gain");

    const double pt = budget.total_elec;
    PowerAllocation out;
    if (pt == 0.0) return out;

    const double tau2 = budget.tau(c1) * budget.tau(c1);

    // amplitude-cap multiplier: smallest nu >= 0 with q1(gamma, nu) <= tau^2
    const auto nu_for = [&](double gamma) {
        const double target = 0.5 * l1.beta * lmmse(l1.eps, l1.beta * tau2);
        return std::max(0.0, target - gamma * l1.k);
    };
    const auto q1_at = [&](double gamma, double nu, bool* clamped) {
        const double y = 2.0 * (gamma * l1.k + nu) / l1.beta;
        if (y >= l1.eps) {
            if (clamped) *clamped = true;
            return 0.0;
        }
        const double q = 1.0 / l1.beta * (1.0 / y - 1.0 / l1.eps);
        return std::min(q, tau2);
    };
    const auto q2_at = [&](double gamma, bool* clamped) {
        const double y = gamma * l2.k / l2.beta;
        if (y >= l2.eps) {
            if (clamped) *clamped = true;
            return 0.0;
        }
        return 1.0 / l2.beta * (1.0 / y - 1.0 / l2.eps);
    };
    const auto spend = [&](double q1, double q2) { return l1.k * q1 + l2.k * q2; };

    // bracket: at gamma_hi all inverses clamp to zero power
    double gamma_hi = std::max(l1.beta * l1.eps / l1.k, l2.beta * l2.eps / l2.k);
    {
        int guard = 0;
        while (spend(q1_at(gamma_hi, nu_for(gamma_hi), nullptr),
                     q2_at(gamma_hi, nullptr)) > pt) {
            gamma_hi *= 2.0;
            if (++guard > 200)
                throw SolverError("wf_allocate: failed to bracket the budget multiplier");
        }
    }

    double lo = 0.0, hi = gamma_hi;
    PowerAllocation best;
    bool have_feasible = false;
    const double budget_tol = tol * std::max(pt, 1.0);
    for (int it = 0; it < 400; ++it) {
        const double gamma = 0.5 * (lo + hi);
        PowerAllocation cand;
        cand.gamma = gamma;
        cand.nu = nu_for(gamma);
        cand.q1_sq = q1_at(gamma, cand.nu, &cand.clamped_q1);
        cand.q2_sq = q2_at(gamma, &cand.clamped_q2);
        const double used = spend(cand.q1_sq, cand.q2_sq);
        if (used <= pt) {
            hi = gamma;
            best = cand;
            have_feasible = true;
            if (pt - used <= budget_tol) break;
        } else {
            lo = gamma;
        }
        if (hi - lo <= tol * std::max(gamma_hi, 1.0) && have_feasible) break;
    }
    if (!have_feasible)
        throw SolverError("wf_allocate: bisection found no feasible allocation");
    return best;
}

namespace {

// closed-form bound cores shared by lb_phi and the stationarity residual
struct LbTables {
    std::vector<double> d1sq;    // (x_k - x_m)^2 * g1^2 / (4 B1 psd1)
    std::vector<double> d2sq;    // |x_l - x_n|^2 * |g2|^2 / (2 B2 psd2)
    double k1 = 0.0, k2 = 0.0;   // budget coefficients
    double b1 = 0.0, b2 = 0.0;   // bandwidths
    double pt = 0.0;
    std::size_t m = 0, n = 0;
};

LbTables lb_tables(const OpticalConstellation& c1, const RFConstellation& c2,
                   const LinkPhysics& phys1, const LinkPhysics& phys2,
                   const PowerBudget& budget) {
    LbTables t;
    t.m = c1.size();
    t.n = c2.size();
    t.b1 = phys1.bandwidth_hz;
    t.b2 = phys2.bandwidth_hz;
    t.pt = budget.total_elec;
    const LinkCoef l1 = coef_lifi(c1, phys1, budget);
    const LinkCoef l2 = coef_wifi(c2, phys2, budget);
    t.k1 = l1.k;
    t.k2 = l2.k;
    const double g1 = phys1.gain_mag();
    const double s1 = g1 * g1 / (4.0 * phys1.bandwidth_hz * phys1.noise_psd);
    t.d1sq.resize(t.m * t.m);
    for (std::size_t k = 0; k < t.m; ++k)
        for (std::size_t j = 0; j < t.m; ++j) {
            const double d = c1.points[k] - c1.points[j];
            t.d1sq[k * t.m + j] = d * d * s1;
        }
    const double g2 = phys2.gain_mag();
    const double s2 = g2 * g2 / (2.0 * phys2.bandwidth_hz * phys2.noise_psd);
    t.d2sq.resize(t.n * t.n);
    for (std::size_t l = 0; l < t.n; ++l)
        for (std::size_t j = 0; j < t.n; ++j)
            t.d2sq[l * t.n + j] = std::norm(c2.points[l] - c2.points[j]) * s2;
    return t;
}

double q2_on_budget_line(const LbTables& t, double q1_sq) {
    if (t.k2 <= 0.0) return 0.0;
    return std::max(0.0, (t.pt - t.k1 * q1_sq) / t.k2);
}

// 2 B1 p1' u(q1) + B2 p2' v(q2(q1)); mixture logs floored like the rates
double lb_phi_impl(const LbTables& t, const std::vector<double>& p1,
                   const std::vector<double>& p2, double q1_sq) {
    const auto& kern = simd::active();
    const double q2_sq = q2_on_budget_line(t, q1_sq);
    std::vector<double> args(std::max(t.m, t.n)), row(std::max(t.m, t.n));
    double acc1 = 0.0;
    for (std::size_t k = 0; k < t.m; ++k) {
        if (p1[k] == 0.0) continue;
        for (std::size_t j = 0; j < t.m; ++j) args[j] = -t.d1sq[k * t.m + j] * q1_sq;
        kern.vexp(args.data(), row.data(), t.m);
        acc1 += p1[k] * std::log2(std::max(kern.dot(row.data(), p1.data(), t.m), kMixFloor));
    }
    double acc2 = 0.0;
    for (std::size_t l = 0; l < t.n; ++l) {
        if (p2[l] == 0.0) continue;
        for (std::size_t j = 0; j < t.n; ++j) args[j] = -t.d2sq[l * t.n + j] * q2_sq;
        kern.vexp(args.data(), row.data(), t.n);
        acc2 += p2[l] * std::log2(std::max(kern.dot(row.data(), p2.data(), t.n), kMixFloor));
    }
    return 2.0 * t.b1 * acc1 + t.b2 * acc2;
}

double lb_residual_impl(const LbTables& t, const std::vector<double>& p1,
                        const std::vector<double>& p2, double q1_sq) {
    const auto& kern = simd::active();
    const double q2_sq = q2_on_budget_line(t, q1_sq);
    std::vector<double> args(std::max(t.m, t.n)), row(std::max(t.m, t.n)),
        weighted(std::max(t.m, t.n));
    double lhs = 0.0;
    for (std::size_t k = 0; k < t.m; ++k) {
        if (p1[k] == 0.0) continue;
        for (std::size_t j = 0; j < t.m; ++j) args[j] = -t.d1sq[k * t.m + j] * q1_sq;
        kern.vexp(args.data(), row.data(), t.m);
        const double den = std::max(kern.dot(row.data(), p1.data(), t.m), kMixFloor);
        for (std::size_t j = 0; j < t.m; ++j) weighted[j] = row[j] * t.d1sq[k * t.m + j];
        lhs += p1[k] * kern.dot(weighted.data(), p1.data(), t.m) / den;
    }
    double rhs = 0.0;
    if (t.k2 > 0.0) {
        const double ratio = t.k1 / t.k2;
        for (std::size_t l = 0; l < t.n; ++l) {
            if (p2[l] == 0.0) continue;
            for (std::size_t j = 0; j < t.n; ++j) args[j] = -t.d2sq[l * t.n + j] * q2_sq;
            kern.vexp(args.data(), row.data(), t.n);
            const double den = std::max(kern.dot(row.data(), p2.data(), t.n), kMixFloor);
            for (std::size_t j = 0; j < t.n; ++j)
                weighted[j] = row[j] * t.d2sq[l * t.n + j] * ratio;
            rhs += p2[l] * kern.dot(weighted.data(), p2.data(), t.n) / den;
        }
    }
    return 2.0 * t.b1 * lhs - t.b2 * rhs;
}

} // namespace

double lb_phi(double q1_sq, const OpticalConstellation& c1, const RFConstellation& c2,
              const LinkPhysics& phys1, const LinkPhysics& phys2, const PowerBudget& budget) {
    if (q1_sq < 0) throw ConfigError("lb_phi: q1_sq must be >= 0");
    const LbTables t = lb_tables(c1, c2, phys1, phys2, budget);
    return lb_phi_impl(t, c1.probs, c2.probs, q1_sq);
}

double lb_stationary_residual(double q1_sq, const OpticalConstellation& c1,
                              const RFConstellation& c2, const LinkPhysics& phys1,
                              const LinkPhysics& phys2, const PowerBudget& budget) {
    if (q1_sq < 0) throw ConfigError("lb_stationary_residual: q1_sq must be >= 0");
    const LbTables t = lb_tables(c1, c2, phys1, phys2, budget);
    return lb_residual_impl(t, c1.probs, c2.probs, q1_sq);
}

LbAllocation lb_allocate(const OpticalConstellation& c1, const RFConstellation& c2,
                         const LinkPhysics& phys1, const LinkPhysics& phys2,
                         const PowerBudget& budget, double root_tol) {
    budget.validate();
    const LbTables t = lb_tables(c1, c2, phys1, phys2, budget);
    const double tau2 = budget.tau(c1) * budget.tau(c1);

    LbAllocation out;
    if (t.pt == 0.0) {
        out.phi = lb_phi_impl(t, c1.probs, c2.probs, 0.0);
        return out;
    }
    // feasible optical share: the optical amplitude cap or the whole budget
    const double q_budget = (t.k1 > 0.0) ? t.pt / t.k1 : tau2;
    const double q_hi = std::min(tau2, q_budget);

    std::vector<double> cand{0.0, q_hi};
    // interior stationary roots from a sign scan of the residual
    const int scan = 64;
    if (q_hi > 0.0) {
        double prev_q = 0.0;
        double prev_r = lb_residual_impl(t, c1.probs, c2.probs, prev_q);
        for (int i = 1; i <= scan; ++i) {
            const double q = q_hi * i / scan;
            const double r = lb_residual_impl(t, c1.probs, c2.probs, q);
            if ((prev_r > 0) != (r > 0) && prev_r != 0.0) {
                // bisect at least as tight as root_tol and to near machine
                // precision regardless, so roots stay stable across solves
                double a = prev_q, b = q, ra = prev_r;
                const double width = std::min(root_tol, 1e-13) * std::max(q_hi, 1.0);
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (a + b);
                    const double rm = lb_residual_impl(t, c1.probs, c2.probs, mid);
                    if ((ra > 0) == (rm > 0)) {
                        a = mid;
                        ra = rm;
                    } else {
                        b = mid;
                    }
                    if (b - a <= width) break;
                }
                cand.push_back(0.5 * (a + b));
            }
            prev_q = q;
            prev_r = r;
        }
    }

    double best_q = cand[0];
    double best_phi = lb_phi_impl(t, c1.probs, c2.probs, cand[0]);
    for (std::size_t i = 1; i < cand.size(); ++i) {
        const double phi = lb_phi_impl(t, c1.probs, c2.probs, cand[i]);
        if (phi < best_phi - 1e-15 * (1.0 + std::abs(best_phi))) {
            best_phi = phi;
            best_q = cand[i];
        }
    }
    out.alloc.q1_sq = best_q;
    out.alloc.q2_sq = q2_on_budget_line(t, best_q);
    out.alloc.clamped_q1 = best_q >= tau2 * (1.0 - 1e-12);
    out.phi = best_phi;
    return out;
}

} // namespace aggrate
