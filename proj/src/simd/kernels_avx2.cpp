// Compiled with -mavx2; only reached after a runtime CPU check.

#include "sqf/hash.hpp"
#include "sqf/simd/kernels.hpp"

#include <immintrin.h>

namespace sqf::simd {

namespace {

const KernelTable& scalar = scalar_kernels();

inline __m256i load(const void* p) { return _mm256_loadu_si256(static_cast<const __m256i*>(p)); }

// Lane masks (all ones where true) for a op b, 4 x int64.
inline __m256i cmp4(__m256i a, __m256i b, Cmp op)
{
    const __m256i ones = _mm256_set1_epi64x(-1);
    switch (op) {
    case Cmp::Eq: return _mm256_cmpeq_epi64(a, b);
    case Cmp::Ne: return _mm256_xor_si256(_mm256_cmpeq_epi64(a, b), ones);
    case Cmp::Lt: return _mm256_cmpgt_epi64(b, a);
    case Cmp::Le: return _mm256_xor_si256(_mm256_cmpgt_epi64(a, b), ones);
    case Cmp::Gt: return _mm256_cmpgt_epi64(a, b);
    case Cmp::Ge: return _mm256_xor_si256(_mm256_cmpgt_epi64(b, a), ones);
    }
    return _mm256_setzero_si256();
}

// Sign bit of each 64-bit lane, expanded to four 0/1 bytes.
inline void store_signs(__m256i v, std::uint8_t* out)
{
    int bits = _mm256_movemask_pd(_mm256_castsi256_pd(v));
    out[0] = bits & 1;
    out[1] = (bits >> 1) & 1;
    out[2] = (bits >> 2) & 1;
    out[3] = (bits >> 3) & 1;
}

void compare(const std::int64_t* a, const std::int64_t* b, std::size_t n, Cmp op, std::uint8_t* out)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        store_signs(cmp4(load(a + i), load(b + i), op), out + i);
    scalar.compare(a + i, b + i, n - i, op, out + i);
}

void compare_scalar(const std::int64_t* a, std::int64_t b, std::size_t n, Cmp op, std::uint8_t* out)
{
    const __m256i bv = _mm256_set1_epi64x(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        store_signs(cmp4(load(a + i), bv, op), out + i);
    scalar.compare_scalar(a + i, b, n - i, op, out + i);
}

void add_checked(const std::int64_t* a, const std::int64_t* b, std::size_t n, std::int64_t* out,
                 std::uint8_t* overflow)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256i x = load(a + i), y = load(b + i);
        __m256i s = _mm256_add_epi64(x, y);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), s);
        // Overflow iff both operands differ in sign from the result.
        store_signs(_mm256_and_si256(_mm256_xor_si256(x, s), _mm256_xor_si256(y, s)), overflow + i);
    }
    scalar.add_checked(a + i, b + i, n - i, out + i, overflow + i);
}

void sub_checked(const std::int64_t* a, const std::int64_t* b, std::size_t n, std::int64_t* out,
                 std::uint8_t* overflow)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256i x = load(a + i), y = load(b + i);
        __m256i d = _mm256_sub_epi64(x, y);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), d);
        // Overflow iff the operands differ in sign and the result's sign
        // differs from the minuend.
        store_signs(_mm256_and_si256(_mm256_xor_si256(x, y), _mm256_xor_si256(x, d)), overflow + i);
    }
    scalar.sub_checked(a + i, b + i, n - i, out + i, overflow + i);
}

void mask_and(const std::uint8_t* a, const std::uint8_t* b, std::size_t n, std::uint8_t* out)
{
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32)
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_and_si256(load(a + i), load(b + i)));
    scalar.mask_and(a + i, b + i, n - i, out + i);
}

void mask_or(const std::uint8_t* a, const std::uint8_t* b, std::size_t n, std::uint8_t* out)
{
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32)
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_or_si256(load(a + i), load(b + i)));
    scalar.mask_or(a + i, b + i, n - i, out + i);
}

void mask_not(const std::uint8_t* a, std::size_t n, std::uint8_t* out)
{
    const __m256i one = _mm256_set1_epi8(1);
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32)
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_xor_si256(load(a + i), one));
    scalar.mask_not(a + i, n - i, out + i);
}

std::size_t mask_to_indices(const std::uint8_t* mask, std::size_t n, std::uint32_t* out)
{
    const __m256i zero = _mm256_setzero_si256();
    std::size_t k = 0, i = 0;
    for (; i + 32 <= n; i += 32) {
        __m256i m = load(mask + i);
        auto bits = static_cast<std::uint32_t>(~_mm256_movemask_epi8(_mm256_cmpeq_epi8(m, zero)));
        while (bits) {
            out[k++] = static_cast<std::uint32_t>(i) + static_cast<std::uint32_t>(__builtin_ctz(bits));
            bits &= bits - 1;
        }
    }
    std::size_t tail = scalar.mask_to_indices(mask + i, n - i, out + k);
    for (std::size_t j = 0; j < tail; ++j)
        out[k + j] += static_cast<std::uint32_t>(i);
    return k + tail;
}

// Low 64 bits of a * b per lane.
inline __m256i mul64(__m256i a, __m256i b)
{
    __m256i lo = _mm256_mul_epu32(a, b);
    __m256i cross = _mm256_add_epi64(_mm256_mul_epu32(_mm256_srli_epi64(a, 32), b),
                                     _mm256_mul_epu32(a, _mm256_srli_epi64(b, 32)));
    return _mm256_add_epi64(lo, _mm256_slli_epi64(cross, 32));
}

inline __m256i fmix4(__m256i h)
{
    const __m256i c1 = _mm256_set1_epi64x(static_cast<long long>(0xff51afd7ed558ccdULL));
    const __m256i c2 = _mm256_set1_epi64x(static_cast<long long>(0xc4ceb9fe1a85ec53ULL));
    h = _mm256_xor_si256(h, _mm256_srli_epi64(h, 33));
    h = mul64(h, c1);
    h = _mm256_xor_si256(h, _mm256_srli_epi64(h, 33));
    h = mul64(h, c2);
    return _mm256_xor_si256(h, _mm256_srli_epi64(h, 33));
}

void hash_keys(const std::uint64_t* keys, std::size_t n, std::uint64_t stage_seed, std::uint64_t* out)
{
    // The FNV prime is 2^40 + 0x1b3, so h * prime = (h << 40) + h * 0x1b3.
    const __m256i low_prime = _mm256_set1_epi64x(0x1b3);
    const __m256i byte_mask = _mm256_set1_epi64x(0xff);
    const __m256i start = _mm256_set1_epi64x(static_cast<long long>(hash::kFnvOffset ^ stage_seed));
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256i k = load(keys + i);
        __m256i h = start;
        for (int b = 0; b < 8; ++b) {
            h = _mm256_xor_si256(h, _mm256_and_si256(_mm256_srli_epi64(k, 8 * b), byte_mask));
            __m256i hi = _mm256_slli_epi64(_mm256_mul_epu32(_mm256_srli_epi64(h, 32), low_prime), 32);
            __m256i by_low = _mm256_add_epi64(_mm256_mul_epu32(h, low_prime), hi);
            h = _mm256_add_epi64(_mm256_slli_epi64(h, 40), by_low);
        }
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), fmix4(h));
    }
    scalar.hash_keys(keys + i, n - i, stage_seed, out + i);
}

} // namespace

const KernelTable* avx2_kernels_unchecked()
{
    static const KernelTable table{
        "avx2", compare, compare_scalar, add_checked, sub_checked, mask_and, mask_or, mask_not,
        mask_to_indices, hash_keys,
    };
    return &table;
}

} // namespace sqf::simd
