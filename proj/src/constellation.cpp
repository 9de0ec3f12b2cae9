#include "aggrate/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aggrate {
namespace {

constexpr double kFeasTol = 1e-9;

bool within_cap(double value, double cap) {
    return value <= cap + kFeasTol * std::max(1.0, std::abs(cap));
}

void validate_probs(const std::vector<double>& probs, std::size_t n) {
    if (probs.size() != n) throw ConfigError("probability vector length mismatch");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= -1e-12) || !std::isfinite(p))
            throw ConfigError("probabilities must be nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("probabilities must sum to 1");
}

} // namespace

void OpticalConstellation::validate() const {
    if (points.empty()) throw ConfigError("optical constellation needs at least one point");
    if (!(peak > 0)) throw ConfigError("optical peak must be > 0");
    if (!(mean_cap > 0)) throw ConfigError("optical mean cap must be > 0");
    if (!(elec_cap > 0)) throw ConfigError("optical electrical cap must be > 0");
    for (double x : points) {
        if (!std::isfinite(x) || x < -1e-12 || x > peak * (1.0 + 1e-12))
            throw ConfigError("optical points must lie in [0, peak]");
    }
    validate_probs(probs, points.size());
    const Moments m = moments(*this);
    if (!within_cap(m.mean, mean_cap))
        throw InfeasibleError("optical constellation violates the mean power cap");
    if (!within_cap(m.elec_power, elec_cap))
        throw InfeasibleError("optical constellation violates the electrical power cap");
}

void RFConstellation::validate() const {
    if (points.empty()) throw ConfigError("rf constellation needs at least one point");
    if (!(elec_cap > 0)) throw ConfigError("rf electrical cap must be > 0");
    for (const cplx& x : points)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
            throw ConfigError("rf points must be finite");
    validate_probs(probs, points.size());
    const Moments m = moments(*this);
    if (!within_cap(m.elec_power, elec_cap))
        throw InfeasibleError("rf constellation violates the electrical power cap");
}

Moments moments(const OpticalConstellation& c) {
    Moments m;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        m.mean += c.probs[i] * c.points[i];
        m.elec_power += c.probs[i] * c.points[i] * c.points[i];
    }
    return m;
}

Moments moments(const RFConstellation& c) {
    Moments m;
    for (std::size_t i = 0; i < c.points.size(); ++i)
        m.elec_power += c.probs[i] * std::norm(c.points[i]);
    return m;
}

OpticalConstellation make_pam(int order, double peak, double mean_cap, double elec_cap) {
    if (order < 1) throw ConfigError("pam order must be >= 1");
    if (!(peak > 0)) throw ConfigError("pam peak must be > 0");
    OpticalConstellation c;
    c.peak = peak;
    c.mean_cap = mean_cap;
    c.elec_cap = elec_cap;
    if (order == 1) {
        c.points = {0.0};
        c.probs = {1.0};
    } else {
        c.points.resize(order);
        c.probs.assign(order, 1.0 / order);
        for (int k = 0; k < order; ++k)
            c.points[k] = peak * static_cast<double>(k) / (order - 1);
    }
    const Moments m = moments(c);
    if (!within_cap(m.mean, mean_cap) || !within_cap(m.elec_power, elec_cap))
        throw InfeasibleError("equiprobable pam grid violates the optical caps");
    c.validate();
    return c;
}

RFConstellation make_qam(int order, double elec_cap) {
    if (order < 1) throw ConfigError("qam order must be >= 1");
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    if (side * side != order)
        throw ConfigError("qam order must be a perfect square");
    RFConstellation c;
    c.elec_cap = elec_cap;
    if (order == 1) {
        c.points = {cplx(0.0, 0.0)};
        c.probs = {1.0};
        return c;
    }
    if (!(elec_cap > 0)) throw ConfigError("qam electrical cap must be > 0");
    // levels (2t - side + 1) * scale; equiprobable power = elec_cap
    const double scale = std::sqrt(3.0 * elec_cap / (2.0 * (side * side - 1.0)));
    c.points.reserve(order);
    for (int ri = 0; ri < side; ++ri)
        for (int ii = 0; ii < side; ++ii)
            c.points.emplace_back((2.0 * ri - side + 1.0) * scale,
                                  (2.0 * ii - side + 1.0) * scale);
    c.probs.assign(order, 1.0 / order);
    c.validate();
    return c;
}

namespace {

// A cap with identical coefficients is fixed by the simplex equality: keep
// it only when it is violated (so emptiness is still detected downstream).
void drop_uniform_caps(FeasibleSet& s) {
    const auto uniform_and_satisfied = [](const std::vector<double>& c, double b) {
        const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
        const double scale = std::max(1.0, std::abs(*hi));
        return *hi - *lo <= 1e-12 * scale && *hi <= b + kFeasTol * std::max(1.0, std::abs(b));
    };
    if (s.has_cap1 && uniform_and_satisfied(s.cap1, s.bound1)) {
        s.has_cap1 = false;
        s.cap1.clear();
    }
    if (s.has_cap2 && uniform_and_satisfied(s.cap2, s.bound2)) {
        s.has_cap2 = false;
        s.cap2.clear();
    }
}

} // namespace

FeasibleSet FeasibleSet::optical(const OpticalConstellation& c) {
    FeasibleSet s;
    s.dim = c.size();
    s.has_cap1 = true;
    s.cap1 = c.points;
    s.bound1 = c.mean_cap;
    s.has_cap2 = true;
    s.cap2.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) s.cap2[i] = c.points[i] * c.points[i];
    s.bound2 = c.elec_cap;
    drop_uniform_caps(s);
    return s;
}

FeasibleSet FeasibleSet::rf(const RFConstellation& c) {
    FeasibleSet s;
    s.dim = c.size();
    s.has_cap1 = true;
    s.cap1.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) s.cap1[i] = std::norm(c.points[i]);
    s.bound1 = c.elec_cap;
    drop_uniform_caps(s);
    return s;
}

FeasibleSet FeasibleSet::simplex(std::size_t dim) {
    FeasibleSet s;
    s.dim = dim;
    return s;
}

bool FeasibleSet::contains(std::span<const double> p, double tol) const {
    if (p.size() != dim) return false;
    double sum = 0.0;
    for (double v : p) {
        if (v < -tol) return false;
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
    if (has_cap1) {
        double v = 0.0;
        for (std::size_t i = 0; i < dim; ++i) v += cap1[i] * p[i];
        if (v > bound1 + tol * std::max(1.0, std::abs(bound1))) return false;
    }
    if (has_cap2) {
        double v = 0.0;
        for (std::size_t i = 0; i < dim; ++i) v += cap2[i] * p[i];
        if (v > bound2 + tol * std::max(1.0, std::abs(bound2))) return false;
    }
    return true;
}

bool FeasibleSet::infeasible() const {
    if (dim == 0) return true;
    if (has_cap2) {
        const double lo = *std::min_element(cap2.begin(), cap2.end());
        if (lo > bound2 + kFeasTol * std::max(1.0, std::abs(bound2))) return true;
    }
    if (has_cap1) {
        // exact: minimize cap1 over the simplex under cap2 alone
        FeasibleSet sub = *this;
        sub.has_cap1 = false;
        const std::vector<double> v = lp_min_vertex(cap1, sub);
        double best = 0.0;
        for (std::size_t i = 0; i < dim; ++i) best += cap1[i] * v[i];
        if (best > bound1 + kFeasTol * std::max(1.0, std::abs(bound1))) return true;
    }
    return false;
}

namespace {

// projection onto { sum x = 1, x >= 0 } (sort-and-threshold)
void project_simplex(std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> u(x);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t k = 0; k < n; ++k) {
        css += u[k];
        const double t = (css - 1.0) / static_cast<double>(k + 1);
        if (u[k] > t) {
            rho = k + 1;
            theta = t;
        }
    }
    (void)rho;
    for (double& v : x) v = std::max(v - theta, 0.0);
}

// least-squares solve of a symmetric system up to 3x3, partial pivoting
bool solve_small(double a[3][3], double rhs[3], int n, double out[3]) {
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < n; ++col) {
        int best = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[piv[r]][col]) > std::abs(a[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        const double d = a[piv[col]][col];
        if (std::abs(d) < 1e-14) return false;
        for (int r = col + 1; r < n; ++r) {
            const double f = a[piv[r]][col] / d;
            for (int cc = col; cc < n; ++cc) a[piv[r]][cc] -= f * a[piv[col]][cc];
            rhs[piv[r]] -= f * rhs[piv[col]];
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        double v = rhs[piv[col]];
        for (int cc = col + 1; cc < n; ++cc) v -= a[piv[col]][cc] * out[cc];
        out[col] = v / a[piv[col]][col];
    }
    return true;
}

struct EqualitySolve {
    std::vector<double> x;
    double mu = 0.0;
    double lam[2] = {0.0, 0.0};
    bool ok = false;
};

// projection of p onto { x_Z = 0, sum x = 1, c_j^T x = b_j for j in act }
EqualitySolve solve_on_active_set(std::span<const double> p, const FeasibleSet& set,
                                  const std::vector<char>& zeroed, bool act1, bool act2) {
    const std::size_t n = set.dim;
    EqualitySolve r;
    r.x.assign(n, 0.0);

    const std::vector<double>* caps[2] = {act1 ? &set.cap1 : nullptr,
                                          act2 ? &set.cap2 : nullptr};
    const double bounds[2] = {set.bound1, set.bound2};
    int na = 0;
    int map[2] = {-1, -1};
    for (int j = 0; j < 2; ++j)
        if (caps[j]) map[na++] = j;

    double a[3][3] = {{0}}, rhs[3] = {0};
    // row 0: simplex equality; rows 1..na: active caps
    double psum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (zeroed[i]) continue;
        a[0][0] += 1.0;
        psum += p[i];
        for (int u = 0; u < na; ++u) {
            const double cu = (*caps[map[u]])[i];
            a[0][u + 1] += cu;
            a[u + 1][0] += cu;
            for (int v = 0; v < na; ++v)
                a[u + 1][v + 1] += cu * (*caps[map[v]])[i];
        }
    }
    if (a[0][0] == 0.0) return r; // all coordinates pinned to zero
    rhs[0] = psum - 1.0;
    for (int u = 0; u < na; ++u) {
        double cp = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!zeroed[i]) cp += (*caps[map[u]])[i] * p[i];
        rhs[u + 1] = cp - bounds[map[u]];
    }
    double sol[3] = {0, 0, 0};
    if (!solve_small(a, rhs, 1 + na, sol)) return r;
    r.mu = sol[0];
    for (int u = 0; u < na; ++u) r.lam[map[u]] = sol[u + 1];
    for (std::size_t i = 0; i < n; ++i) {
        if (zeroed[i]) continue;
        double v = p[i] - r.mu;
        if (act1) v -= r.lam[0] * set.cap1[i];
        if (act2) v -= r.lam[1] * set.cap2[i];
        r.x[i] = v;
    }
    r.ok = true;
    return r;
}

double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

std::vector<double> project_feasible(std::span<const double> p, const FeasibleSet& set) {
    if (p.size() != set.dim) throw ConfigError("projection: dimension mismatch");
    if (set.infeasible()) throw InfeasibleError("feasible set is empty under the given caps");
    const std::size_t n = set.dim;
    if (n == 1) return {1.0};
    if (set.contains(p, 1e-11)) return std::vector<double>(p.begin(), p.end());

    // Dual view over the cap multipliers: x(l1, l2) projects the shifted
    // point onto the simplex, and each cap residual is a non-increasing
    // function of its own multiplier after maximizing over the other
    // (concavity of the dual). Nested bisection is therefore globally
    // convergent; an active-set equality solve then polishes the result,
    // certified by the KKT conditions.
    std::vector<double> shifted(n);
    const auto x_of = [&](double l1, double l2) {
        for (std::size_t i = 0; i < n; ++i) {
            double v = p[i];
            if (set.has_cap1) v -= l1 * set.cap1[i];
            if (set.has_cap2) v -= l2 * set.cap2[i];
            shifted[i] = v;
        }
        std::vector<double> x = shifted;
        project_simplex(x);
        return x;
    };
    const auto residual = [&](const std::vector<double>& x, bool first) {
        const std::vector<double>& c = first ? set.cap1 : set.cap2;
        const double b = first ? set.bound1 : set.bound2;
        return dot_vec(c, x) - b;
    };

    // inner problem: smallest l1 >= 0 putting cap1 on or under its bound
    const auto solve_l1 = [&](double l2) {
        std::pair<double, std::vector<double>> out{0.0, x_of(0.0, l2)};
        if (!set.has_cap1 || residual(out.second, true) <= 0.0) return out;
        double lo = 0.0, hi = 1.0;
        std::vector<double> xhi = x_of(hi, l2);
        int guard = 0;
        while (residual(xhi, true) > 0.0) {
            lo = hi;
            hi *= 2.0;
            xhi = x_of(hi, l2);
            if (++guard > 200) throw SolverError("projection: cap multiplier diverged");
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            const std::vector<double> xm = x_of(mid, l2);
            if (residual(xm, true) > 0.0) {
                lo = mid;
            } else {
                hi = mid;
                xhi = xm;
            }
        }
        out.first = hi;
        out.second = std::move(xhi);
        return out;
    };

    double l1 = 0.0, l2 = 0.0;
    std::vector<double> x;
    if (!set.has_cap2) {
        auto r = solve_l1(0.0);
        l1 = r.first;
        x = std::move(r.second);
    } else {
        auto r0 = solve_l1(0.0);
        if (residual(r0.second, false) <= 0.0) {
            l1 = r0.first;
            x = std::move(r0.second);
        } else {
            double lo = 0.0, hi = 1.0;
            auto rhi = solve_l1(hi);
            int guard = 0;
            while (residual(rhi.second, false) > 0.0) {
                lo = hi;
                hi *= 2.0;
                rhi = solve_l1(hi);
                if (++guard > 200) throw SolverError("projection: cap multiplier diverged");
            }
            for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                auto rm = solve_l1(mid);
                if (residual(rm.second, false) > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                    rhi = std::move(rm);
                }
            }
            l2 = hi;
            l1 = rhi.first;
            x = std::move(rhi.second);
        }
    }

    // polish: exact equality solve on the identified active set
    std::vector<char> zeroed(n, 0);
    for (std::size_t i = 0; i < n; ++i) zeroed[i] = (x[i] <= 1e-9) ? 1 : 0;
    const bool act1 = set.has_cap1 && l1 > 0.0;
    const bool act2 = set.has_cap2 && l2 > 0.0;
    const EqualitySolve es = solve_on_active_set(p, set, zeroed, act1, act2);
    if (es.ok) {
        const double tol = 1e-11;
        bool good = es.lam[0] >= -tol && es.lam[1] >= -tol;
        for (std::size_t i = 0; i < n && good; ++i)
            if (!zeroed[i] && es.x[i] < -tol) good = false;
        if (good && set.has_cap1 && !act1)
            good = dot_vec(set.cap1, es.x) <=
                   set.bound1 + tol * std::max(1.0, std::abs(set.bound1));
        if (good && set.has_cap2 && !act2)
            good = dot_vec(set.cap2, es.x) <=
                   set.bound2 + tol * std::max(1.0, std::abs(set.bound2));
        for (std::size_t i = 0; i < n && good; ++i) {
            if (!zeroed[i]) continue;
            double slack = es.mu - p[i];
            if (act1) slack += es.lam[0] * set.cap1[i];
            if (act2) slack += es.lam[1] * set.cap2[i];
            if (slack < -1e-9) good = false;
        }
        if (good) {
            std::vector<double> out = es.x;
            for (double& v : out)
                if (v < 0.0) v = 0.0;
            return out;
        }
    }
    // the bisection iterate already satisfies the feasibility contract
    for (double& v : x)
        if (v < 0.0) v = 0.0;
    return x;
}

std::vector<double> lp_min_vertex(std::span<const double> grad, const FeasibleSet& set) {
    const std::size_t n = set.dim;
    if (grad.size() != n) throw ConfigError("lp: dimension mismatch");
    if (set.infeasible()) throw InfeasibleError("feasible set is empty under the given caps");
    for (double g : grad)
        if (!std::isfinite(g)) throw ConfigError("lp: gradient must be finite");

    const double relax = 1.0 + 1e-12;
    auto cap_ok = [&](const std::vector<double>& c, double b, const double* x,
                      const std::size_t* idx, std::size_t k) {
        double v = 0.0;
        for (std::size_t t = 0; t < k; ++t) v += c[idx[t]] * x[t];
        return v <= b * relax + 1e-15;
    };

    std::vector<double> best;
    double bestval = 0.0;
    auto consider = [&](const std::size_t* idx, const double* w, std::size_t k) {
        double val = 0.0;
        for (std::size_t t = 0; t < k; ++t) val += grad[idx[t]] * w[t];
        if (best.empty() || val < bestval - 1e-15 * (1.0 + std::abs(bestval))) {
            best.assign(n, 0.0);
            for (std::size_t t = 0; t < k; ++t) best[idx[t]] = w[t];
            bestval = val;
        }
    };

    // singletons
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx[1] = {i};
        const double w[1] = {1.0};
        if (set.has_cap1 && !cap_ok(set.cap1, set.bound1, w, idx, 1)) continue;
        if (set.has_cap2 && !cap_ok(set.cap2, set.bound2, w, idx, 1)) continue;
        consider(idx, w, 1);
    }
    if (!set.has_cap1 && !set.has_cap2) return best;

    // two-point supports with one cap tight
    for (int capsel = 0; capsel < 2; ++capsel) {
        const bool use1 = capsel == 0;
        if (use1 && !set.has_cap1) continue;
        if (!use1 && !set.has_cap2) continue;
        const std::vector<double>& c = use1 ? set.cap1 : set.cap2;
        const double b = use1 ? set.bound1 : set.bound2;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double den = c[j] - c[i];
                if (std::abs(den) < 1e-15) continue;
                const double wj = (b - c[i]) / den;
                if (wj <= 0.0 || wj >= 1.0) continue;
                const std::size_t idx[2] = {i, j};
                const double w[2] = {1.0 - wj, wj};
                const std::vector<double>& other = use1 ? set.cap2 : set.cap1;
                const double otherb = use1 ? set.bound2 : set.bound1;
                const bool other_exists = use1 ? set.has_cap2 : set.has_cap1;
                if (other_exists && !cap_ok(other, otherb, w, idx, 2)) continue;
                consider(idx, w, 2);
            }
    }

    // three-point supports with both caps tight
    if (set.has_cap1 && set.has_cap2) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                for (std::size_t k = j + 1; k < n; ++k) {
                    double a[3][3] = {{1.0, 1.0, 1.0},
                                      {set.cap1[i], set.cap1[j], set.cap1[k]},
                                      {set.cap2[i], set.cap2[j], set.cap2[k]}};
                    double rhs[3] = {1.0, set.bound1, set.bound2};
                    double w[3];
                    if (!solve_small(a, rhs, 3, w)) continue;
                    if (w[0] < -1e-12 || w[1] < -1e-12 || w[2] < -1e-12) continue;
                    double cw[3] = {std::max(w[0], 0.0), std::max(w[1], 0.0),
                                    std::max(w[2], 0.0)};
                    const std::size_t idx[3] = {i, j, k};
                    consider(idx, cw, 3);
                }
    }

    if (best.empty()) throw InfeasibleError("lp: no feasible vertex found");
    return best;
}

} // namespace aggrate
