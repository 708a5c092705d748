#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sqf {

struct BloomCascadeConfig {
    std::uint32_t stages = 1;
    std::uint64_t bits_per_stage = 1024; // m
    std::uint32_t hashes_per_stage = 1;  // k
    std::uint64_t seed = 0;

    bool operator==(const BloomCascadeConfig&) const = default;
};

struct BloomProbe {
    bool pass = false;
    /// Stage-0 hash of the key, forwarded to the host join.
    std::uint64_t hash = 0;
};

/// Chain of identically configured bloom filters with stage-distinct
/// seeds; a key passes only if every stage accepts it. Hashing is
/// specified in docs/hashing.md.
class BloomCascade {
public:
    /// Throws ParamOutOfRange unless stages >= 1 and m >= k >= 1.
    explicit BloomCascade(const BloomCascadeConfig& cfg);

    void insert(std::uint64_t key);
    BloomProbe probe(std::uint64_t key) const;
    /// Batched probe: `pass[i]` is 0/1, `hashes[i]` the stage-0 hash.
    void probe_batch(std::span<const std::uint64_t> keys, std::uint8_t* pass, std::uint64_t* hashes) const;

    const BloomCascadeConfig& config() const noexcept { return cfg_; }
    std::uint64_t inserted() const noexcept { return inserted_; }
    /// Bit array of one stage, exactly m bits packed into 64-bit words.
    const std::vector<std::uint64_t>& bits(std::uint32_t stage) const { return bits_.at(stage); }
    std::uint64_t stage_seed(std::uint32_t stage) const { return seeds_.at(stage); }

private:
    BloomCascadeConfig cfg_;
    std::vector<std::uint64_t> seeds_;
    std::vector<std::vector<std::uint64_t>> bits_;
    std::uint64_t inserted_ = 0;

    bool test(std::uint32_t stage, std::uint64_t h) const;
};

/// Positions of the k bits for hash `h` in an m-bit array:
/// fmix64(h + j * kGolden) mod m for j in [0, k).
std::uint64_t bloom_bit_index(std::uint64_t h, std::uint32_t j, std::uint64_t m);

BloomCascade bloom_build(const BloomCascadeConfig& cfg, std::span<const std::uint64_t> keys);
BloomProbe bloom_probe(const BloomCascade& bc, std::uint64_t key);

/// Keys are hashed as the two's-complement bit pattern of the INT value.
inline std::uint64_t key_bits(std::int64_t v) { return static_cast<std::uint64_t>(v); }

} // namespace sqf
