#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aggrate/common.hpp"

namespace aggrate {

enum class QuadMethod { gauss_hermite, grid, monte_carlo };

QuadMethod parse_quad_method(std::string_view name);
std::string to_string(QuadMethod m);

struct QuadratureSpec {
    QuadMethod method = QuadMethod::gauss_hermite;
    // Gauss-Hermite order, grid points per axis, or Monte Carlo draws.
    int order = 48;
    // Half-width of the truncated integration window, in noise sigmas
    // (grid method only; ignored by Gauss-Hermite).
    double truncation = 8.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Hermite nodes and weights for the weight function e^{-t^2}.
// weights sum to sqrt(pi).
void gauss_hermite(int order, std::vector<double>& nodes, std::vector<double>& weights);

// deterministic pairwise reduction; summation order depends only on n
double pairwise_sum(std::span<const double> v);

// Node tables for expectations over the standardized channel noise:
// real link   E{f(s)},  s ~ N(0,1)
// complex link E{f(w)}, w ~ CN(0,1), evaluated on (Re w, Im w) node pairs.
// Tables are immutable after construction.
class GaussianExpectation {
public:
    explicit GaussianExpectation(const QuadratureSpec& spec);

    const QuadratureSpec& spec() const { return spec_; }
    bool stochastic() const { return spec_.method == QuadMethod::monte_carlo; }

    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }

    // Complex tables. For tensorized rules (Gauss-Hermite, grid) the pairs
    // factor as axis_nodes x axis_nodes and evaluators may exploit that.
    bool tensorized() const { return tensor_; }
    std::span<const double> cx_axis_nodes() const { return cx_axis_nodes_; }
    std::span<const double> cx_axis_weights() const { return cx_axis_weights_; }
    std::span<const double> cx_re() const { return cx_re_; }
    std::span<const double> cx_im() const { return cx_im_; }
    std::span<const double> cx_weights() const { return cx_w_; }

private:
    QuadratureSpec spec_;
    bool tensor_ = false;
    std::vector<double> nodes_, weights_;
    std::vector<double> cx_axis_nodes_, cx_axis_weights_;
    std::vector<double> cx_re_, cx_im_, cx_w_;
};

// scrambles consecutive seeds into well-separated RNG streams
std::uint64_t splitmix64(std::uint64_t x);

} // namespace aggrate
