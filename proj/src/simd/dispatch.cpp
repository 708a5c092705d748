#include "sqf/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace sqf::simd {

#if defined(SQF_HAVE_AVX2)
const KernelTable* avx2_kernels_unchecked();
#endif

const KernelTable* avx2_kernels()
{
#if defined(SQF_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? avx2_kernels_unchecked() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels()
{
    static const KernelTable& chosen = [&]() -> const KernelTable& {
        const char* env = std::getenv("SQF_SIMD");
        if (env && std::string_view(env) == "scalar")
            return scalar_kernels();
        if (const auto* wide = avx2_kernels())
            return *wide;
        return scalar_kernels();
    }();
    return chosen;
}

} // namespace sqf::simd
