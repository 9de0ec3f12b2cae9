#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Data-parallel inner kernels shared by the rate, shaping and estimator code.
// Every entry point has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant selected at runtime. The two variants are
// equivalence-tested; results are deterministic for a fixed variant.

namespace aggrate::simd {

struct Kernels {
    const char* name;

    // y[i] = exp(x[i])
    void (*vexp)(const double* x, double* y, std::size_t n);

    // out[m] = exp(-0.5 * (d[m] + shift)^2)
    void (*gauss_row)(const double* d, std::size_t n, double shift, double* out);

    // sum_m p[m] * exp(-0.5 * (d[m] + shift)^2)
    double (*gauss_mix)(const double* d, const double* p, std::size_t n, double shift);

    // out[m] = exp(-(d[m] + shift)^2)   (unit-variance complex component)
    void (*sq_exp_row)(const double* d, std::size_t n, double shift, double* out);

    // sum_m p[m] * exp(-((dre[m] + sre)^2 + (dim[m] + sim)^2))
    double (*gauss_mix_cx)(const double* dre, const double* dim, const double* p,
                           std::size_t n, double sre, double sim);

    // out[m] = exp(-((dre[m] + sre)^2 + (dim[m] + sim)^2))
    void (*gauss_row_cx)(const double* dre, const double* dim, std::size_t n,
                         double sre, double sim, double* out);

    // sum_m p[m] * e1[m] * e2[m]
    double (*mix_prod)(const double* p, const double* e1, const double* e2, std::size_t n);

    // sum_m a[m] * b[m]
    double (*dot)(const double* a, const double* b, std::size_t n);

    // y[m] += a * x[m]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
};

const Kernels& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_kernels();
#endif

// Active kernel table. Selection order: explicit select() call, then the
// AGGRATE_KERNEL environment variable, then the best variant the CPU supports.
const Kernels& active();

// name: "auto", "scalar" or "avx2". Returns false if unavailable on this host.
bool select(std::string_view name);

std::vector<std::string> available();

} // namespace aggrate::simd
