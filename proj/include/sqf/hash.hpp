#pragma once

#include <cstdint>
#include <string_view>

namespace sqf::hash {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// MurmurHash3 64-bit finalizer.
constexpr std::uint64_t fmix64(std::uint64_t h)
{
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset)
{
    for (char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

/// FNV-1a over the 8 little-endian bytes of `key`, started from
/// `kFnvOffset ^ stage_seed`, then finalized with fmix64.
constexpr std::uint64_t key_hash(std::uint64_t key, std::uint64_t stage_seed)
{
    std::uint64_t h = kFnvOffset ^ stage_seed;
    for (int i = 0; i < 8; ++i) {
        h ^= (key >> (8 * i)) & 0xffU;
        h *= kFnvPrime;
    }
    return fmix64(h);
}

constexpr std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stage)
{
    return splitmix64(seed + stage * kGolden);
}

} // namespace sqf::hash
