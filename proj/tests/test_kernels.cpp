#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "aggrate/simd/kernels.hpp"

using namespace aggrate;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

} // namespace

TEST_CASE("vexp matches std::exp on every variant") {
    std::mt19937_64 rng(1);
    for (const std::string& name : simd::available()) {
        REQUIRE(simd::select(name));
        const auto& k = simd::active();
        // odd length exercises the tail path
        std::vector<double> x = random_vec(rng, 1001, -700.0, 700.0);
        x.push_back(0.0);
        x.push_back(-745.0); // flushes to zero
        x.push_back(710.0);  // overflows to inf
        std::vector<double> y(x.size());
        k.vexp(x.data(), y.data(), x.size());
        for (std::size_t i = 0; i + 2 < x.size(); ++i) {
            const double ref = std::exp(x[i]);
            CHECK(rel_err(y[i], ref) < 5e-16);
        }
        CHECK(y[x.size() - 3] == 1.0);
        CHECK(y[x.size() - 2] <= 1e-300); // flushed or subnormal
        CHECK(std::isinf(y[x.size() - 1]));
    }
    simd::select("auto");
}

TEST_CASE("scalar and vector kernels agree") {
    const auto variants = simd::available();
    if (variants.size() < 2) return; // scalar-only host
    const auto& ref = simd::scalar_kernels();
    REQUIRE(simd::select("avx2"));
    const auto& vec = simd::active();

    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng() % 67;
        const auto d = random_vec(rng, n, -12.0, 12.0);
        const auto di = random_vec(rng, n, -12.0, 12.0);
        const auto p = random_vec(rng, n, 0.0, 1.0);
        const double shift = random_vec(rng, 1, -9.0, 9.0)[0];
        const double sim = random_vec(rng, 1, -9.0, 9.0)[0];

        CHECK(rel_err(vec.gauss_mix(d.data(), p.data(), n, shift),
                      ref.gauss_mix(d.data(), p.data(), n, shift)) < 1e-13);
        CHECK(rel_err(vec.gauss_mix_cx(d.data(), di.data(), p.data(), n, shift, sim),
                      ref.gauss_mix_cx(d.data(), di.data(), p.data(), n, shift, sim)) < 1e-13);

        std::vector<double> r1(n), r2(n);
        vec.gauss_row(d.data(), n, shift, r1.data());
        ref.gauss_row(d.data(), n, shift, r2.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(r1[i], r2[i]) < 1e-13);

        vec.sq_exp_row(d.data(), n, shift, r1.data());
        ref.sq_exp_row(d.data(), n, shift, r2.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(r1[i], r2[i]) < 1e-13);

        vec.gauss_row_cx(d.data(), di.data(), n, shift, sim, r1.data());
        ref.gauss_row_cx(d.data(), di.data(), n, shift, sim, r2.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(r1[i], r2[i]) < 1e-13);

        CHECK(rel_err(vec.mix_prod(p.data(), d.data(), di.data(), n),
                      ref.mix_prod(p.data(), d.data(), di.data(), n)) < 1e-12);
        CHECK(rel_err(vec.dot(d.data(), p.data(), n), ref.dot(d.data(), p.data(), n)) < 1e-12);

        std::vector<double> y1(p), y2(p);
        vec.axpy(0.37, d.data(), y1.data(), n);
        ref.axpy(0.37, d.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(y1[i], y2[i]) < 1e-12);
    }
    simd::select("auto");
}

TEST_CASE("kernel selection is explicit and reversible") {
    CHECK(simd::select("scalar"));
    CHECK(std::string(simd::active().name) == "scalar");
    CHECK_FALSE(simd::select("not-a-kernel"));
    CHECK(std::string(simd::active().name) == "scalar");
    CHECK(simd::select("auto"));
}
