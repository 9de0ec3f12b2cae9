#include "aggrate/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <cmath>
#include <immintrin.h>

// AVX2+FMA kernels. exp() is a Cody-Waite range reduction followed by the
// classic rational approximation exp(r) = 1 + 2r*P(r^2)/(Q(r^2) - r*P(r^2)),
// accurate to ~1 ulp on [-708, 709]. Inputs below -708 flush to zero, which
// is harmless here: all call sites floor mixtures well above 1e-300.

namespace aggrate::simd {
namespace {

constexpr double kExpLo = -708.0;
constexpr double kExpHi = 709.0;

constexpr double kLog2E  = 1.44269504088896340736;
constexpr double kC1     = 6.93145751953125e-1;
constexpr double kC2     = 1.42860682030941723212e-6;
constexpr double kP0     = 1.26177193074810590878e-4;
constexpr double kP1     = 3.02994407707441961300e-2;
constexpr double kP2     = 9.99999999999999999910e-1;
constexpr double kQ0     = 3.00198505138664455042e-6;
constexpr double kQ1     = 2.52448340349684104192e-3;
constexpr double kQ2     = 2.27265548208155028766e-1;
constexpr double kQ3     = 2.00000000000000000005e0;

inline __m256d exp_pd(__m256d x) {
    const __m256d lo = _mm256_set1_pd(kExpLo);
    const __m256d hi = _mm256_set1_pd(kExpHi);
    const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    const __m256d over  = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
    __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(kLog2E)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kC1), xc);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kC2), r);

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d px = _mm256_fmadd_pd(_mm256_set1_pd(kP0), rr, _mm256_set1_pd(kP1));
    px = _mm256_fmadd_pd(px, rr, _mm256_set1_pd(kP2));
    px = _mm256_mul_pd(px, r);
    __m256d qx = _mm256_fmadd_pd(_mm256_set1_pd(kQ0), rr, _mm256_set1_pd(kQ1));
    qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(kQ2));
    qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(kQ3));
    const __m256d e = _mm256_fmadd_pd(_mm256_set1_pd(2.0),
                                      _mm256_div_pd(px, _mm256_sub_pd(qx, px)),
                                      _mm256_set1_pd(1.0));

    // scale by 2^n through the exponent bits (|n| <= 1023 after clamping)
    const __m128i n32 = _mm256_cvtpd_epi32(n);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    __m256d res = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));

    res = _mm256_blendv_pd(res, _mm256_setzero_pd(), under);
    res = _mm256_blendv_pd(res, _mm256_set1_pd(HUGE_VAL), over);
    return res;
}

// scalar path for loop tails, same reduction and polynomial
inline double exp_one(double x) {
    if (x < kExpLo) return 0.0;
    if (x > kExpHi) return HUGE_VAL;
    const double n = std::nearbyint(x * kLog2E);
    double r = std::fma(-n, kC1, x);
    r = std::fma(-n, kC2, r);
    const double rr = r * r;
    double px = std::fma(kP0, rr, kP1);
    px = std::fma(px, rr, kP2);
    px *= r;
    double qx = std::fma(kQ0, rr, kQ1);
    qx = std::fma(qx, rr, kQ2);
    qx = std::fma(qx, rr, kQ3);
    const double e = 1.0 + 2.0 * (px / (qx - px));
    return std::ldexp(e, static_cast<int>(n));
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s2 = _mm_add_pd(lo, hi);
    const __m128d s1 = _mm_add_sd(s2, _mm_unpackhi_pd(s2, s2));
    return _mm_cvtsd_f64(s1);
}

void vexp_avx2(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, exp_pd(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = exp_one(x[i]);
}

void gauss_row_avx2(const double* d, std::size_t n, double shift, double* out) {
    const __m256d sh = _mm256_set1_pd(shift);
    const __m256d mh = _mm256_set1_pd(-0.5);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_add_pd(_mm256_loadu_pd(d + i), sh);
        _mm256_storeu_pd(out + i, exp_pd(_mm256_mul_pd(mh, _mm256_mul_pd(t, t))));
    }
    for (; i < n; ++i) {
        const double t = d[i] + shift;
        out[i] = exp_one(-0.5 * t * t);
    }
}

double gauss_mix_avx2(const double* d, const double* p, std::size_t n, double shift) {
    const __m256d sh = _mm256_set1_pd(shift);
    const __m256d mh = _mm256_set1_pd(-0.5);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_add_pd(_mm256_loadu_pd(d + i), sh);
        const __m256d e = exp_pd(_mm256_mul_pd(mh, _mm256_mul_pd(t, t)));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(p + i), e, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double t = d[i] + shift;
        s += p[i] * exp_one(-0.5 * t * t);
    }
    return s;
}

void sq_exp_row_avx2(const double* d, std::size_t n, double shift, double* out) {
    const __m256d sh = _mm256_set1_pd(shift);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_add_pd(_mm256_loadu_pd(d + i), sh);
        _mm256_storeu_pd(out + i, exp_pd(_mm256_sub_pd(_mm256_setzero_pd(),
                                                       _mm256_mul_pd(t, t))));
    }
    for (; i < n; ++i) {
        const double t = d[i] + shift;
        out[i] = exp_one(-t * t);
    }
}

double gauss_mix_cx_avx2(const double* dre, const double* dim, const double* p,
                         std::size_t n, double sre, double sim) {
    const __m256d shr = _mm256_set1_pd(sre);
    const __m256d shi = _mm256_set1_pd(sim);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d tr = _mm256_add_pd(_mm256_loadu_pd(dre + i), shr);
        const __m256d ti = _mm256_add_pd(_mm256_loadu_pd(dim + i), shi);
        // keep both squares individually rounded so results match the
        // scalar reference to within the exp approximation alone
        const __m256d q = _mm256_add_pd(_mm256_mul_pd(tr, tr), _mm256_mul_pd(ti, ti));
        const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), q));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(p + i), e, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double tr = dre[i] + sre;
        const double ti = dim[i] + sim;
        s += p[i] * exp_one(-(tr * tr + ti * ti));
    }
    return s;
}

void gauss_row_cx_avx2(const double* dre, const double* dim, std::size_t n,
                       double sre, double sim, double* out) {
    const __m256d shr = _mm256_set1_pd(sre);
    const __m256d shi = _mm256_set1_pd(sim);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d tr = _mm256_add_pd(_mm256_loadu_pd(dre + i), shr);
        const __m256d ti = _mm256_add_pd(_mm256_loadu_pd(dim + i), shi);
        const __m256d q = _mm256_add_pd(_mm256_mul_pd(tr, tr), _mm256_mul_pd(ti, ti));
        _mm256_storeu_pd(out + i, exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), q)));
    }
    for (; i < n; ++i) {
        const double tr = dre[i] + sre;
        const double ti = dim[i] + sim;
        out[i] = exp_one(-(tr * tr + ti * ti));
    }
}

double mix_prod_avx2(const double* p, const double* e1, const double* e2, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_mul_pd(_mm256_loadu_pd(e1 + i), _mm256_loadu_pd(e2 + i));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(p + i), v, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += p[i] * e1[i] * e2[i];
    return s;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, v);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

} // namespace

const Kernels& avx2_kernels() {
    static const Kernels k = {
        "avx2",
        vexp_avx2,
        gauss_row_avx2,
        gauss_mix_avx2,
        sq_exp_row_avx2,
        gauss_mix_cx_avx2,
        gauss_row_cx_avx2,
        mix_prod_avx2,
        dot_avx2,
        axpy_avx2,
    };
    return k;
}

} // namespace aggrate::simd

#endif // x86-64
