#include "aggrate/simd/kernels.hpp"

#include <cmath>

// Reference kernels. Plain loops over std::exp; the vector variants are
// validated against these.

namespace aggrate::simd {
namespace {

void vexp_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

void gauss_row_scalar(const double* d, std::size_t n, double shift, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = d[i] + shift;
        out[i] = std::exp(-0.5 * t * t);
    }
}

double gauss_mix_scalar(const double* d, const double* p, std::size_t n, double shift) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = d[i] + shift;
        acc += p[i] * std::exp(-0.5 * t * t);
    }
    return acc;
}

void sq_exp_row_scalar(const double* d, std::size_t n, double shift, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = d[i] + shift;
        out[i] = std::exp(-t * t);
    }
}

double gauss_mix_cx_scalar(const double* dre, const double* dim, const double* p,
                           std::size_t n, double sre, double sim) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double tr = dre[i] + sre;
        const double ti = dim[i] + sim;
        acc += p[i] * std::exp(-(tr * tr + ti * ti));
    }
    return acc;
}

void gauss_row_cx_scalar(const double* dre, const double* dim, std::size_t n,
                         double sre, double sim, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double tr = dre[i] + sre;
        const double ti = dim[i] + sim;
        out[i] = std::exp(-(tr * tr + ti * ti));
    }
}

double mix_prod_scalar(const double* p, const double* e1, const double* e2, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += p[i] * e1[i] * e2[i];
    return acc;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

} // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        "scalar",
        vexp_scalar,
        gauss_row_scalar,
        gauss_mix_scalar,
        sq_exp_row_scalar,
        gauss_mix_cx_scalar,
        gauss_row_cx_scalar,
        mix_prod_scalar,
        dot_scalar,
        axpy_scalar,
    };
    return k;
}

} // namespace aggrate::simd
