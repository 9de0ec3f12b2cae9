#pragma once

#include <vector>

#include "aggrate/constellation.hpp"
#include "aggrate/quadrature.hpp"
#include "aggrate/rate.hpp"

namespace aggrate {

struct PGDConfig {
    double trunc_obj = 8.0;  // objective integration window, sigmas (grid mode)
    double trunc_grad = 8.0; // gradient integration window, sigmas (grid mode)
    double armijo_beta = 0.5;
    double armijo_c = 1e-4;
    double armijo_step0 = 1.0;
    double stop_tol = 1e-8; // on ||p_i - p_{i-1}||
    int max_iters = 500;

    void validate() const;
};

// The conditional-gradient gap decays like 1/iterations near interior
// optima, so the defaults pair a modest per-Hz gap tolerance with a large
// iteration budget; iterations on the closed-form objective are cheap.
struct FWConfig {
    double stop_tol = 1e-4; // on |grad . d| of the per-Hz objective
    double line_search_tol = 1e-6;
    int max_iters = 30000;

    void validate() const;
};

struct TraceRow {
    int iter = 0;
    double objective = 0.0; // bits/s
    double step = 0.0;
    double delta_p = 0.0;
};

struct ShapingResult {
    std::vector<double> probs;
    std::vector<TraceRow> trace;
    bool converged = false;

    static std::string trace_csv_header();
    std::string trace_csv() const;
};

// Weighted log-mixture objective: sum_i w_i sum_k p_k log2(K_i[k,:] p),
// the common shape of the exact-rate and closed-form-bound objectives.
// Values and gradients are in per-Hz units; `scale` converts to bits/s.
// The achievable rate relates to it by rate = offset - scale * value.
struct MixtureObjective {
    std::size_t dim = 0;
    double scale = 1.0;
    double offset = 0.0;
    std::vector<double> weights; // one per block
    std::vector<double> table;   // blocks x dim x dim kernel matrices

    double value(std::span<const double> p) const;
    std::vector<double> gradient(std::span<const double> p) const;
};

// exact-rate objectives on the standardized noise node tables
MixtureObjective exact_objective_lifi(const OpticalConstellation& c, double q1_sq,
                                      const LinkPhysics& phys, const GaussianExpectation& quad);
MixtureObjective exact_objective_wifi(const RFConstellation& c, double q2_sq,
                                      const LinkPhysics& phys, const GaussianExpectation& quad);

// closed-form lower-bound objectives (single block)
MixtureObjective lb_objective_lifi(const OpticalConstellation& c, double q1_sq,
                                   const LinkPhysics& phys);
MixtureObjective lb_objective_wifi(const RFConstellation& c, double q2_sq,
                                   const LinkPhysics& phys);

// Gradient of the truncated exact-rate objective at the constellation's
// current probabilities, bits/s units.
std::vector<double> grad_phi_lifi(const OpticalConstellation& c, double q1_sq,
                                  const LinkPhysics& phys, const QuadratureSpec& quad,
                                  double trunc_grad = 8.0);
std::vector<double> grad_phi_wifi(const RFConstellation& c, double q2_sq,
                                  const LinkPhysics& phys, const QuadratureSpec& quad,
                                  double trunc_grad = 8.0);

// Projected gradient descent with Armijo backtracking. Starts from the
// constellation's current probabilities projected onto the feasible set.
ShapingResult pgd_optimize_lifi(const OpticalConstellation& c, double q1_sq,
                                const LinkPhysics& phys, const QuadratureSpec& quad,
                                const PGDConfig& cfg);
ShapingResult pgd_optimize_wifi(const RFConstellation& c, double q2_sq,
                                const LinkPhysics& phys, const QuadratureSpec& quad,
                                const PGDConfig& cfg);

// linear subproblem of the conditional-gradient step
std::vector<double> fw_lp_step(std::span<const double> grad, const FeasibleSet& set);

// Frank-Wolfe on the closed-form lower-bound objectives.
ShapingResult fw_optimize_lifi(const OpticalConstellation& c, double q1_sq,
                               const LinkPhysics& phys, const FWConfig& cfg);
ShapingResult fw_optimize_wifi(const RFConstellation& c, double q2_sq,
                               const LinkPhysics& phys, const FWConfig& cfg);

// shared optimizer cores (exposed for the alternating drivers and tests)
ShapingResult pgd_minimize(const MixtureObjective& obj, const MixtureObjective& grad_obj,
                           const FeasibleSet& set, std::span<const double> start,
                           const PGDConfig& cfg);
ShapingResult fw_minimize(const MixtureObjective& obj, const FeasibleSet& set,
                          std::span<const double> start, const FWConfig& cfg);

} // namespace aggrate
