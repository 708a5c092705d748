#include "sqf/hash.hpp"
#include "sqf/simd/kernels.hpp"

namespace sqf::simd {

namespace {

bool apply(std::int64_t a, std::int64_t b, Cmp op)
{
    switch (op) {
    case Cmp::Eq: return a == b;
    case Cmp::Ne: return a != b;
    case Cmp::Lt: return a < b;
    case Cmp::Le: return a <= b;
    case Cmp::Gt: return a > b;
    case Cmp::Ge: return a >= b;
    }
    return false;
}

void compare(const std::int64_t* a, const std::int64_t* b, std::size_t n, Cmp op, std::uint8_t* out)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = apply(a[i], b[i], op);
}

void compare_scalar(const std::int64_t* a, std::int64_t b, std::size_t n, Cmp op, std::uint8_t* out)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = apply(a[i], b, op);
}

void add_checked(const std::int64_t* a, const std::int64_t* b, std::size_t n, std::int64_t* out,
                 std::uint8_t* overflow)
{
    for (std::size_t i = 0; i < n; ++i)
        overflow[i] = __builtin_add_overflow(a[i], b[i], &out[i]);
}

void sub_checked(const std::int64_t* a, const std::int64_t* b, std::size_t n, std::int64_t* out,
                 std::uint8_t* overflow)
{
    for (std::size_t i = 0; i < n; ++i)
        overflow[i] = __builtin_sub_overflow(a[i], b[i], &out[i]);
}

void mask_and(const std::uint8_t* a, const std::uint8_t* b, std::size_t n, std::uint8_t* out)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a[i] & b[i];
}

void mask_or(const std::uint8_t* a, const std::uint8_t* b, std::size_t n, std::uint8_t* out)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a[i] | b[i];
}

void mask_not(const std::uint8_t* a, std::size_t n, std::uint8_t* out)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a[i] ^ 1;
}

std::size_t mask_to_indices(const std::uint8_t* mask, std::size_t n, std::uint32_t* out)
{
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i])
            out[k++] = static_cast<std::uint32_t>(i);
    return k;
}

void hash_keys(const std::uint64_t* keys, std::size_t n, std::uint64_t stage_seed, std::uint64_t* out)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = hash::key_hash(keys[i], stage_seed);
}

} // namespace

const KernelTable& scalar_kernels()
{
    static const KernelTable table{
        "scalar", compare, compare_scalar, add_checked, sub_checked, mask_and, mask_or, mask_not,
        mask_to_indices, hash_keys,
    };
    return table;
}

} // namespace sqf::simd
