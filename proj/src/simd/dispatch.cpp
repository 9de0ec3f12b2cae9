#include "aggrate/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace aggrate::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels* best_available() {
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2()) return &avx2_kernels();
#endif
    return &scalar_kernels();
}

const Kernels* lookup(std::string_view name) {
    if (name == "auto") return best_available();
    if (name == "scalar") return &scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2" && cpu_has_avx2()) return &avx2_kernels();
#endif
    return nullptr;
}

std::atomic<const Kernels*>& slot() {
    static std::atomic<const Kernels*> s{nullptr};
    return s;
}

const Kernels* init_from_env() {
    if (const char* env = std::getenv("AGGRATE_KERNEL")) {
        if (const Kernels* k = lookup(env)) return k;
    }
    return best_available();
}

} // namespace

const Kernels& active() {
    const Kernels* k = slot().load(std::memory_order_acquire);
    if (!k) {
        k = init_from_env();
        slot().store(k, std::memory_order_release);
    }
    return *k;
}

bool select(std::string_view name) {
    const Kernels* k = lookup(name);
    if (!k) return false;
    slot().store(k, std::memory_order_release);
    return true;
}

std::vector<std::string> available() {
    std::vector<std::string> out{"scalar"};
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2()) out.emplace_back("avx2");
#endif
    return out;
}

} // namespace aggrate::simd
