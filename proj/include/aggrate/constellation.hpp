#pragma once

#include <span>
#include <vector>

#include "aggrate/common.hpp"

namespace aggrate {

struct Moments {
    double mean = 0.0;       // 0 for complex constellations
    double elec_power = 0.0; // sum p |x|^2
};

// Nonnegative real amplitude alphabet under peak, average-optical and
// average-electrical limits.
struct OpticalConstellation {
    std::vector<double> points;
    std::vector<double> probs;
    double peak = 1.0;     // amplitude cap on every point
    double mean_cap = 1.0; // cap on sum p x
    double elec_cap = 1.0; // cap on sum p x^2

    std::size_t size() const { return points.size(); }
    void validate() const;
};

// Complex alphabet under an average-electrical limit.
struct RFConstellation {
    std::vector<cplx> points;
    std::vector<double> probs;
    double elec_cap = 1.0;

    std::size_t size() const { return points.size(); }
    void validate() const;
};

Moments moments(const OpticalConstellation& c);
Moments moments(const RFConstellation& c);

// Equispaced grid on [0, peak], equiprobable. Throws InfeasibleError when the
// equiprobable grid violates the caps.
OpticalConstellation make_pam(int order, double peak, double mean_cap, double elec_cap);

// Square QAM scaled so the equiprobable average power equals elec_cap.
RFConstellation make_qam(int order, double elec_cap);

// Probability simplex intersected with up to two nonnegative linear caps.
struct FeasibleSet {
    std::size_t dim = 0;
    bool has_cap1 = false, has_cap2 = false;
    std::vector<double> cap1, cap2; // nonnegative coefficient vectors
    double bound1 = 0.0, bound2 = 0.0;

    static FeasibleSet optical(const OpticalConstellation& c);
    static FeasibleSet rf(const RFConstellation& c);
    static FeasibleSet simplex(std::size_t dim);

    bool contains(std::span<const double> p, double tol = 1e-8) const;
    // true when no point of the simplex satisfies the caps
    bool infeasible() const;
};

// Euclidean projection onto the feasible set, exact to ~1e-10. Active-set
// equality solve with the active set identified by Dykstra iterations and
// certified by a KKT check. Throws InfeasibleError on an empty set.
std::vector<double> project_feasible(std::span<const double> p, const FeasibleSet& set);

// Exact minimizer of grad . p over the set; returns an extreme point.
// Ties break toward the lexicographically earliest support.
std::vector<double> lp_min_vertex(std::span<const double> grad, const FeasibleSet& set);

} // namespace aggrate
