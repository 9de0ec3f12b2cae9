#include "aggrate/quadrature.hpp"

#include <cmath>
#include <random>

namespace aggrate {

QuadMethod parse_quad_method(std::string_view name) {
    if (name == "gauss-hermite" || name == "gh") return QuadMethod::gauss_hermite;
    if (name == "grid" || name == "truncated-grid") return QuadMethod::grid;
    if (name == "mc" || name == "monte-carlo") return QuadMethod::monte_carlo;
    throw ConfigError("unknown quadrature method: " + std::string(name));
}

std::string to_string(QuadMethod m) {
    switch (m) {
        case QuadMethod::gauss_hermite: return "gauss-hermite";
        case QuadMethod::grid: return "grid";
        case QuadMethod::monte_carlo: return "monte-carlo";
    }
    return "?";
}

void QuadratureSpec::validate() const {
    // per-method caps keep the tensorized pair tables within memory reason
    switch (method) {
        case QuadMethod::gauss_hermite:
            if (order < 8 || order > 512)
                throw ConfigError("gauss-hermite order must lie in [8, 512]");
            break;
        case QuadMethod::grid:
            if (order < 8 || order > 2001)
                throw ConfigError("grid point count must lie in [8, 2001]");
            break;
        case QuadMethod::monte_carlo:
            if (order < 1 || order > 2000000)
                throw ConfigError("monte-carlo draw count must lie in [1, 2000000]");
            break;
    }
    if (truncation < 4.0)
        throw ConfigError("truncation must be >= 4 sigma");
}

void gauss_hermite(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 1) throw ConfigError("gauss-hermite order must be >= 1");
    const int n = order;
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);

    // Newton iteration on the orthonormal Hermite recurrence, largest root
    // first; classic asymptotic starting guesses.
    const double pim4 = 0.7511255444649424828587; // pi^(-1/4)
    const int half = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * nodes[n - 1];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * nodes[n - 2];
        } else {
            z = 2.0 * z - nodes[n - i + 1];
        }
        double pprev = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pprev = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pprev;
            z -= dz;
            if (std::abs(dz) <= 1e-15 * (1.0 + std::abs(z))) break;
        }
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[i] = 2.0 / (pprev * pprev);
        weights[n - 1 - i] = weights[i];
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
}

double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

GaussianExpectation::GaussianExpectation(const QuadratureSpec& spec) : spec_(spec) {
    spec_.validate();
    const int n = spec_.order;
    switch (spec_.method) {
        case QuadMethod::gauss_hermite: {
            std::vector<double> t, w;
            gauss_hermite(n, t, w);
            const double inv_sqrt_pi = 1.0 / std::sqrt(kPi);
            nodes_.resize(n);
            weights_.resize(n);
            for (int i = 0; i < n; ++i) {
                nodes_[i] = std::sqrt(2.0) * t[i]; // s ~ N(0,1)
                weights_[i] = w[i] * inv_sqrt_pi;
            }
            // E{f(w)} = (1/pi) sum_ij w_i w_j f(t_i + j t_j) for w ~ CN(0,1)
            tensor_ = true;
            cx_axis_nodes_ = t;
            cx_axis_weights_.resize(n);
            for (int i = 0; i < n; ++i) cx_axis_weights_[i] = w[i] * inv_sqrt_pi;
            break;
        }
        case QuadMethod::grid: {
            // trapezoid on [-tau, tau] against the normal density; the lost
            // tail mass is the method's deliberate truncation error
            const double tau = spec_.truncation;
            const double h = 2.0 * tau / (n - 1);
            nodes_.resize(n);
            weights_.resize(n);
            for (int i = 0; i < n; ++i) {
                const double s = -tau + h * i;
                nodes_[i] = s;
                const double pdf = std::exp(-0.5 * s * s) / std::sqrt(2.0 * kPi);
                weights_[i] = pdf * h * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
            }
            // complex components are N(0, 1/2): sigma = 1/sqrt(2)
            tensor_ = true;
            const double taus = tau / std::sqrt(2.0);
            const double hs = 2.0 * taus / (n - 1);
            cx_axis_nodes_.resize(n);
            cx_axis_weights_.resize(n);
            for (int i = 0; i < n; ++i) {
                const double s = -taus + hs * i;
                cx_axis_nodes_[i] = s;
                const double pdf = std::exp(-s * s) / std::sqrt(kPi);
                cx_axis_weights_[i] = pdf * hs * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
            }
            break;
        }
        case QuadMethod::monte_carlo: {
            std::mt19937_64 rng(splitmix64(spec_.seed));
            std::normal_distribution<double> unit(0.0, 1.0);
            nodes_.resize(n);
            weights_.assign(n, 1.0 / n);
            for (int i = 0; i < n; ++i) nodes_[i] = unit(rng);
            tensor_ = false;
            cx_re_.resize(n);
            cx_im_.resize(n);
            cx_w_.assign(n, 1.0 / n);
            const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
            for (int i = 0; i < n; ++i) {
                cx_re_[i] = unit(rng) * inv_sqrt2;
                cx_im_[i] = unit(rng) * inv_sqrt2;
            }
            break;
        }
    }
    if (tensor_) {
        // flattened pair view for callers that do not exploit the tensor form
        cx_re_.reserve(static_cast<std::size_t>(n) * n);
        cx_im_.reserve(static_cast<std::size_t>(n) * n);
        cx_w_.reserve(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                cx_re_.push_back(cx_axis_nodes_[i]);
                cx_im_.push_back(cx_axis_nodes_[j]);
                cx_w_.push_back(cx_axis_weights_[i] * cx_axis_weights_[j]);
            }
    }
}

} // namespace aggrate
