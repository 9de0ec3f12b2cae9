// Throughput comparison of the kernel variants. Not a test; numbers vary
// with the host. Run: aggrate_bench [elements] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <vector>

#include "aggrate/simd/kernels.hpp"

using namespace aggrate;

namespace {

using clock_type = std::chrono::steady_clock;

double bench(const char* what, std::size_t n, int repeats, double checksum,
             const std::function<double()>& body) {
    // warm up once, then take the best of the repeats
    volatile double sink = body();
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = clock_type::now();
        sink = body();
        const auto t1 = clock_type::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    (void)checksum;
    const double per = best / double(n) * 1e9;
    std::printf("  %-14s %8.2f ns/elem  (sink %.6g)\n", what, per, double(sink));
    return per;
}

} // namespace

int main(int argc, char** argv) {
    const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1u << 20;
    const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ud(-12.0, 0.0), up(0.0, 1.0);
    std::vector<double> x(n), y(n), p(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ud(rng);
        p[i] = up(rng);
        d2[i] = ud(rng) * 0.5;
    }

    for (const std::string& name : simd::available()) {
        simd::select(name);
        const auto& k = simd::active();
        std::printf("%s:\n", k.name);
        bench("vexp", n, repeats, 0.0, [&] {
            k.vexp(x.data(), y.data(), n);
            return y[n / 2];
        });
        bench("gauss_mix", n, repeats, 0.0,
              [&] { return k.gauss_mix(x.data(), p.data(), n, 0.37); });
        bench("gauss_mix_cx", n, repeats, 0.0, [&] {
            return k.gauss_mix_cx(x.data(), d2.data(), p.data(), n, 0.21, -0.4);
        });
        bench("mix_prod", n, repeats, 0.0,
              [&] { return k.mix_prod(p.data(), x.data(), d2.data(), n); });
        bench("dot", n, repeats, 0.0, [&] { return k.dot(x.data(), p.data(), n); });
    }
    simd::select("auto");
    return 0;
}
