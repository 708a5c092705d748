#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Data-parallel inner loops of the engine. Every kernel has a scalar
// reference implementation; wider variants must produce identical output.
// Masks are one byte per row holding 0 or 1.

namespace sqf::simd {

enum class Cmp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

struct KernelTable {
    std::string_view name;

    void (*compare)(const std::int64_t* a, const std::int64_t* b, std::size_t n, Cmp op, std::uint8_t* out);
    void (*compare_scalar)(const std::int64_t* a, std::int64_t b, std::size_t n, Cmp op, std::uint8_t* out);
    /// out = a op b with wrap-around; overflow[i] = 1 where the exact result
    /// does not fit in 64 bits.
    void (*add_checked)(const std::int64_t* a, const std::int64_t* b, std::size_t n, std::int64_t* out,
                        std::uint8_t* overflow);
    void (*sub_checked)(const std::int64_t* a, const std::int64_t* b, std::size_t n, std::int64_t* out,
                        std::uint8_t* overflow);
    void (*mask_and)(const std::uint8_t* a, const std::uint8_t* b, std::size_t n, std::uint8_t* out);
    void (*mask_or)(const std::uint8_t* a, const std::uint8_t* b, std::size_t n, std::uint8_t* out);
    void (*mask_not)(const std::uint8_t* a, std::size_t n, std::uint8_t* out);
    /// Writes the positions of set bytes in ascending order; returns count.
    std::size_t (*mask_to_indices)(const std::uint8_t* mask, std::size_t n, std::uint32_t* out);
    /// out[i] = hash::key_hash(keys[i], stage_seed).
    void (*hash_keys)(const std::uint64_t* keys, std::size_t n, std::uint64_t stage_seed, std::uint64_t* out);
};

const KernelTable& scalar_kernels();
/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();

/// Widest supported table, unless SQF_SIMD=scalar is set in the
/// environment. Resolved once.
const KernelTable& active_kernels();

} // namespace sqf::simd
