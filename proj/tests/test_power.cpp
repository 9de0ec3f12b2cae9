#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "aggrate/power.hpp"

using namespace aggrate;

namespace {

OpticalConstellation unit_optical() {
    // equiprobable {0, sqrt(2)}: mean power exactly 1
    OpticalConstellation c;
    c.points = {0.0, std::sqrt(2.0)};
    c.probs = {0.5, 0.5};
    c.peak = std::sqrt(2.0);
    c.mean_cap = 1.0;
    c.elec_cap = 1.0;
    return c;
}

RFConstellation unit_rf() {
    RFConstellation c;
    c.points = {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
    c.probs = {0.5, 0.5};
    c.elec_cap = 1.0;
    return c;
}

// surrogate objective maximized by the water-filling step
double surrogate_rate(double beta1, double eps1, double beta2, double eps2, double q1,
                      double q2) {
    return 0.5 * std::log(1.0 + eps1 * beta1 * q1) + std::log(1.0 + eps2 * beta2 * q2);
}

} // namespace

TEST_CASE("water-filling") {
    LinkPhysics p1, p2; // unit gain/bandwidth/psd
    SUBCASE("analytic unit-parameter split") {
        PowerBudget budget{4.0, 1e9, 1e9};
        const PowerAllocation a = wf_allocate(unit_optical(), unit_rf(), p1, p2, budget, 1e-10);
        CHECK(a.q1_sq == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(a.q2_sq == doctest::Approx(3.0).epsilon(1e-6));
        CHECK(a.gamma == doctest::Approx(0.25).epsilon(1e-5));
        CHECK(a.nu == doctest::Approx(0.0));
    }
    SUBCASE("zero amplitude cap pushes everything to the rf link") {
        PowerBudget budget{4.0, 0.0, 1e9};
        const PowerAllocation a = wf_allocate(unit_optical(), unit_rf(), p1, p2, budget, 1e-10);
        CHECK(a.q1_sq == 0.0);
        CHECK(a.q2_sq == doctest::Approx(4.0).epsilon(1e-6));
        CHECK(a.nu > 0.0);
    }
    SUBCASE("zero budget allocates nothing") {
        PowerBudget budget{0.0, 1.0, 1.0};
        const PowerAllocation a = wf_allocate(unit_optical(), unit_rf(), p1, p2, budget, 1e-10);
        CHECK(a.q1_sq == 0.0);
        CHECK(a.q2_sq == 0.0);
    }
    SUBCASE("asymmetric case matches a grid search on the surrogate") {
        LinkPhysics s1, s2;
        s1.gain = std::sqrt(5.0); // beta1 = 5 with the constellation below
        s2.gain = std::sqrt(0.3);
        s1.amp_efficiency = 0.8;
        s2.amp_efficiency = 0.9;
        OpticalConstellation c1 = unit_optical();
        RFConstellation c2 = unit_rf();
        for (double tau2 : {2.0, 0.5}) {
            PowerBudget budget{3.0, 1e9, 1e9};
            budget.max_inst_optical = std::sqrt(tau2) * c1.peak; // tau = sqrt(tau2)
            const double beta1 = 5.0, beta2 = 0.3, eps1 = 1.0, eps2 = 1.0;
            const double k1 = 0.8 * eps1, k2 = 0.9 * eps2;
            const PowerAllocation a = wf_allocate(c1, c2, s1, s2, budget, 1e-12);
            // budget active and the amplitude cap honored
            CHECK(k1 * a.q1_sq + k2 * a.q2_sq == doctest::Approx(3.0).epsilon(1e-8));
            CHECK(a.q1_sq <= tau2 * (1.0 + 1e-9));
            // dense search along the budget-equality line
            const double hi = std::min(tau2, 3.0 / k1);
            double best = -1e300, bestq = 0.0;
            for (int i = 0; i <= 30000; ++i) {
                const double q1 = hi * i / 30000.0;
                const double q2 = (3.0 - k1 * q1) / k2;
                const double v = surrogate_rate(beta1, eps1, beta2, eps2, q1, q2);
                if (v > best) {
                    best = v;
                    bestq = q1;
                }
            }
            CHECK(a.q1_sq == doctest::Approx(bestq).epsilon(2e-4));
            CHECK(surrogate_rate(beta1, eps1, beta2, eps2, a.q1_sq, a.q2_sq) ==
                  doctest::Approx(best).epsilon(1e-8));
        }
    }
    SUBCASE("kkt residuals and complementary slackness") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> u(0.2, 4.0);
        for (int rep = 0; rep < 25; ++rep) {
            LinkPhysics s1, s2;
            s1.gain = u(rng);
            s2.gain = u(rng);
            s1.amp_efficiency = u(rng);
            s2.amp_efficiency = u(rng);
            OpticalConstellation c1 = unit_optical();
            RFConstellation c2 = unit_rf();
            PowerBudget budget{u(rng), u(rng), u(rng)};
            const double tol = 1e-10;
            const PowerAllocation a = wf_allocate(c1, c2, s1, s2, budget, tol);
            const double eps1 = moments(c1).elec_power, eps2 = moments(c2).elec_power;
            const double beta1 = s1.gain_mag() * s1.gain_mag() * eps1;
            const double beta2 = s2.gain_mag() * s2.gain_mag() * eps2;
            const double k1 = s1.amp_efficiency * eps1, k2 = s2.amp_efficiency * eps2;
            const double tau2 = budget.tau(c1) * budget.tau(c1);
            // allocation invariants
            CHECK(a.q1_sq >= 0.0);
            CHECK(a.q2_sq >= 0.0);
            CHECK(k1 * a.q1_sq + k2 * a.q2_sq <= budget.total_elec + 1e-9);
            CHECK(a.q1_sq <= tau2 + 1e-9);
            // stationarity residuals of the multiplier equations
            const double scale = std::max(1.0, beta1);
            if (a.q1_sq > 0.0) {
                const double r1 =
                    0.5 * beta1 * lmmse(eps1, beta1 * a.q1_sq) - a.gamma * k1 - a.nu;
                CHECK(std::abs(r1) <= 10.0 * tol * scale + 1e-9);
            }
            if (a.q2_sq > 0.0) {
                const double r2 = beta2 * lmmse(eps2, beta2 * a.q2_sq) - a.gamma * k2;
                CHECK(std::abs(r2) <= 10.0 * tol * std::max(1.0, beta2) + 1e-9);
            }
            // complementary slackness
            const double slack = budget.total_elec - k1 * a.q1_sq - k2 * a.q2_sq;
            CHECK(a.gamma * slack <= 10.0 * tol * std::max(1.0, budget.total_elec) + 1e-8);
            CHECK(a.nu * (tau2 - a.q1_sq) <= 10.0 * tol * std::max(1.0, tau2) + 1e-8);
        }
    }
    SUBCASE("degenerate constellations are rejected") {
        OpticalConstellation dead;
        dead.points = {0.0};
        dead.probs = {1.0};
        dead.peak = 1.0;
        dead.mean_cap = 1.0;
        dead.elec_cap = 1.0;
        PowerBudget budget{1.0, 1.0, 1.0};
        CHECK_THROWS_AS(wf_allocate(dead, unit_rf(), p1, p2, budget, 1e-8), ConfigError);
    }
}

TEST_CASE("lower-bound objective along the budget line") {
    LinkPhysics p1, p2;
    p1.bandwidth_hz = 2.0;
    p2.bandwidth_hz = 3.0;
    OpticalConstellation c1 = make_pam(4, 2.0, 1.0, 2.0);
    RFConstellation c2 = make_qam(4, 1.0);
    PowerBudget budget{2.0, 1e9, 1e9};
    const double k1 = budget_coef_lifi(c1, p1, budget);
    const double k2 = budget_coef_wifi(c2, p2, budget);

    SUBCASE("endpoints reduce to single-link bound cores") {
        // all power on rf: the optical term vanishes
        const double phi0 = lb_phi(0.0, c1, c2, p1, p2, budget);
        const double q2 = budget.total_elec / k2;
        const double core2 =
            p2.bandwidth_hz * (1.0 - 1.0 / kLn2) - bounds_wifi(c2, q2, p2).lower;
        CHECK(phi0 == doctest::Approx(core2).epsilon(1e-12));
        // all power on lifi
        const double qmax = budget.total_elec / k1;
        const double phil = lb_phi(qmax, c1, c2, p1, p2, budget);
        const double core1 =
            2.0 * 0.0 + p1.bandwidth_hz * (1.0 - 1.0 / kLn2) - bounds_lifi(c1, qmax, p1).lower;
        CHECK(phil == doctest::Approx(core1).epsilon(1e-12));
    }
    SUBCASE("midpoint agrees with the aggregate bound") {
        const double q1 = 0.5 * budget.total_elec / k1;
        const double q2 = (budget.total_elec - k1 * q1) / k2;
        const double phi = lb_phi(q1, c1, c2, p1, p2, budget);
        const double lb = bounds_aggregate(c1, c2, q1, q2, p1, p2).lower;
        const double collapse = (p1.bandwidth_hz + p2.bandwidth_hz) * (1.0 - 1.0 / kLn2);
        CHECK(phi == doctest::Approx(collapse - lb).epsilon(1e-12));
    }
}

TEST_CASE("stationarity residual") {
    LinkPhysics p1, p2;
    PowerBudget budget{2.0, 1e9, 1e9};
    SUBCASE("single-point rf keeps the residual positive") {
        OpticalConstellation c1 = make_pam(4, 2.0, 1.0, 2.0);
        RFConstellation c2;
        c2.points = {cplx(1.0, 0.0)};
        c2.probs = {1.0};
        c2.elec_cap = 1.0;
        for (double q1 : {0.0, 0.3, 0.9, 1.3})
            CHECK(lb_stationary_residual(q1, c1, c2, p1, p2, budget) > 0.0);
    }
    SUBCASE("sign change brackets the interior optimum and matches the grid") {
        OpticalConstellation c1 = make_pam(4, 2.0, 1.0, 2.0);
        RFConstellation c2 = make_qam(4, 1.0);
        LinkPhysics s1 = p1, s2 = p2;
        s1.gain = 1.5;
        s2.gain = 1.1;
        const double k1 = budget_coef_lifi(c1, s1, budget);
        // dense grid minimizer of the objective
        const double hi = budget.total_elec / k1;
        double bestq = 0.0, bestphi = 1e300;
        for (int i = 0; i <= 10000; ++i) {
            const double q = hi * i / 10000.0;
            const double v = lb_phi(q, c1, c2, s1, s2, budget);
            if (v < bestphi) {
                bestphi = v;
                bestq = q;
            }
        }
        REQUIRE(bestq > 0.0);
        REQUIRE(bestq < hi);
        const double rlo = lb_stationary_residual(bestq * 0.9, c1, c2, s1, s2, budget);
        const double rhi = lb_stationary_residual(bestq * 1.1, c1, c2, s1, s2, budget);
        CHECK(rlo > 0.0);
        CHECK(rhi < 0.0);
        // scale-relative smallness at the grid minimizer
        const double scale = std::abs(rlo) + std::abs(rhi);
        CHECK(std::abs(lb_stationary_residual(bestq, c1, c2, s1, s2, budget)) <
              1e-3 * scale + 1e-4);
    }
}

TEST_CASE("lower-bound allocation") {
    LinkPhysics p1, p2;
    SUBCASE("rf line dead: optical takes its cap, remainder spills over") {
        OpticalConstellation c1 = make_pam(4, 2.0, 1.0, 2.0);
        RFConstellation c2;
        c2.points = {cplx(1.0, 0.0)};
        c2.probs = {1.0};
        c2.elec_cap = 1.0;
        PowerBudget budget{3.0, 1.0, 1.6};
        const double tau2 = budget.tau(c1) * budget.tau(c1);
        const LbAllocation r = lb_allocate(c1, c2, p1, p2, budget);
        const double k1 = budget_coef_lifi(c1, p1, budget);
        const double expected_q1 = std::min(tau2, budget.total_elec / k1);
        CHECK(r.alloc.q1_sq == doctest::Approx(expected_q1).epsilon(1e-9));
        const double k2 = budget_coef_wifi(c2, p2, budget);
        CHECK(r.alloc.q2_sq ==
              doctest::Approx((budget.total_elec - k1 * expected_q1) / k2).epsilon(1e-9));
    }
    SUBCASE("optical line dead: everything to rf") {
        OpticalConstellation c1;
        c1.points = {0.0, 0.0};
        c1.probs = {0.5, 0.5};
        c1.peak = 1.0;
        c1.mean_cap = 1.0;
        c1.elec_cap = 1.0;
        RFConstellation c2 = make_qam(4, 1.0);
        PowerBudget budget{3.0, 1.0, 1.0};
        const LbAllocation r = lb_allocate(c1, c2, p1, p2, budget);
        CHECK(r.alloc.q1_sq == doctest::Approx(0.0));
        CHECK(r.alloc.q2_sq == doctest::Approx(3.0).epsilon(1e-9));
    }
    SUBCASE("objective matches a dense grid search") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(0.4, 2.5);
        for (int rep = 0; rep < 8; ++rep) {
            LinkPhysics s1, s2;
            s1.gain = u(rng);
            s2.gain = u(rng);
            s1.bandwidth_hz = u(rng);
            s2.bandwidth_hz = u(rng);
            OpticalConstellation c1 = make_pam(4, 2.0, 1.0, 2.0);
            RFConstellation c2 = make_qam(4, 1.0);
            PowerBudget budget{u(rng), u(rng), u(rng)};
            const LbAllocation r = lb_allocate(c1, c2, s1, s2, budget);
            const double k1 = budget_coef_lifi(c1, s1, budget);
            const double tau2 = budget.tau(c1) * budget.tau(c1);
            const double hi = std::min(tau2, budget.total_elec / k1);
            double best = 1e300;
            for (int i = 0; i <= 10000; ++i) {
                const double q = hi * i / 10000.0;
                best = std::min(best, lb_phi(q, c1, c2, s1, s2, budget));
            }
            CHECK(r.phi <= best + 1e-3 * std::abs(best) + 1e-12);
            // budget equality (the electrical constraint stays active)
            const double k2 = budget_coef_wifi(c2, s2, budget);
            CHECK(k1 * r.alloc.q1_sq + k2 * r.alloc.q2_sq ==
                  doctest::Approx(budget.total_elec).epsilon(1e-9));
            // global-candidate property against random feasible points
            for (int t = 0; t < 100; ++t) {
                const double q = hi * (rng() % 10001) / 10000.0;
                CHECK(r.phi <= lb_phi(q, c1, c2, s1, s2, budget) + 1e-9);
            }
        }
    }
    SUBCASE("caps pricing switch changes the budget coefficients") {
        OpticalConstellation c1 = make_pam(8, 2.0, 1.0, 2.0); // moments power < cap
        RFConstellation c2 = make_qam(4, 1.0);
        PowerBudget moments_priced{2.0, 1e9, 1e9};
        PowerBudget caps_priced = moments_priced;
        caps_priced.budget_uses_caps = true;
        CHECK(budget_coef_lifi(c1, p1, moments_priced) ==
              doctest::Approx(moments(c1).elec_power));
        CHECK(budget_coef_lifi(c1, p1, caps_priced) == doctest::Approx(c1.elec_cap));
        const LbAllocation a = lb_allocate(c1, c2, p1, p2, moments_priced);
        const LbAllocation b = lb_allocate(c1, c2, p1, p2, caps_priced);
        CHECK(a.alloc.q1_sq != b.alloc.q1_sq);
    }
}
