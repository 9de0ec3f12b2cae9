#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aggrate/quadrature.hpp"

using namespace aggrate;

TEST_CASE("gauss-hermite nodes satisfy the classical identities") {
    for (int order : {8, 16, 48, 64, 101}) {
        std::vector<double> t, w;
        gauss_hermite(order, t, w);
        double sum = 0.0, m2 = 0.0;
        for (int i = 0; i < order; ++i) {
            sum += w[i];
            m2 += w[i] * t[i] * t[i];
        }
        CHECK(sum == doctest::Approx(std::sqrt(kPi)).epsilon(1e-12));
        CHECK(m2 == doctest::Approx(0.5 * std::sqrt(kPi)).epsilon(1e-10));
        for (int i = 1; i < order; ++i) CHECK(t[i] > t[i - 1]);
    }
}

TEST_CASE("real table integrates gaussian moments") {
    for (auto method : {QuadMethod::gauss_hermite, QuadMethod::grid}) {
        GaussianExpectation e(QuadratureSpec{method, 64, 8.0, 0});
        double m0 = 0, m2 = 0, m4 = 0;
        for (std::size_t i = 0; i < e.nodes().size(); ++i) {
            const double s = e.nodes()[i], w = e.weights()[i];
            m0 += w;
            m2 += w * s * s;
            m4 += w * s * s * s * s;
        }
        CHECK(m0 == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(m2 == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(m4 == doctest::Approx(3.0).epsilon(1e-3));
    }
}

TEST_CASE("complex table has unit second moment") {
    GaussianExpectation e(QuadratureSpec{QuadMethod::gauss_hermite, 48, 8.0, 0});
    REQUIRE(e.tensorized());
    double m0 = 0, m2 = 0;
    const auto re = e.cx_re();
    const auto im = e.cx_im();
    const auto w = e.cx_weights();
    for (std::size_t i = 0; i < re.size(); ++i) {
        m0 += w[i];
        m2 += w[i] * (re[i] * re[i] + im[i] * im[i]);
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-10)); // E|w|^2 = 1 for CN(0,1)
}

TEST_CASE("monte carlo tables are seed-deterministic and close to moments") {
    GaussianExpectation a(QuadratureSpec{QuadMethod::monte_carlo, 20000, 8.0, 5});
    GaussianExpectation b(QuadratureSpec{QuadMethod::monte_carlo, 20000, 8.0, 5});
    GaussianExpectation c(QuadratureSpec{QuadMethod::monte_carlo, 20000, 8.0, 6});
    REQUIRE(a.nodes().size() == b.nodes().size());
    bool identical = true, differs = false;
    double m2 = 0.0;
    for (std::size_t i = 0; i < a.nodes().size(); ++i) {
        identical &= a.nodes()[i] == b.nodes()[i];
        differs |= a.nodes()[i] != c.nodes()[i];
        m2 += a.weights()[i] * a.nodes()[i] * a.nodes()[i];
    }
    CHECK(identical);
    CHECK(differs);
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("pairwise sum is deterministic and accurate") {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (i + 1.0);
    const double s1 = pairwise_sum(v);
    const double s2 = pairwise_sum(v);
    CHECK(s1 == s2);
    CHECK(s1 == doctest::Approx(7.4854708605503449).epsilon(1e-14));
}

TEST_CASE("spec validation rejects out-of-range configs") {
    CHECK_THROWS_AS(QuadratureSpec({QuadMethod::gauss_hermite, 4, 8.0, 0}).validate(),
                    ConfigError);
    CHECK_THROWS_AS(QuadratureSpec({QuadMethod::grid, 64, 2.0, 0}).validate(), ConfigError);
    CHECK_NOTHROW(QuadratureSpec{}.validate());
}
