#include "sqf/engine/bloom.hpp"

#include "sqf/error.hpp"
#include "sqf/hash.hpp"
#include "sqf/simd/kernels.hpp"

#include <fmt/format.h>

namespace sqf {

std::uint64_t bloom_bit_index(std::uint64_t h, std::uint32_t j, std::uint64_t m)
{
    // Each index gets its own remix; plain double hashing (h + j * step)
    // overshoots the analytic rate on small filters.
    return hash::fmix64(h + j * hash::kGolden) % m;
}

BloomCascade::BloomCascade(const BloomCascadeConfig& cfg) : cfg_(cfg)
{
    if (cfg.stages < 1 || cfg.hashes_per_stage < 1 || cfg.bits_per_stage < cfg.hashes_per_stage)
        throw Error(ErrorCode::ParamOutOfRange,
                    fmt::format("bloom cascade needs stages >= 1 and m >= k >= 1 (stages={}, m={}, k={})", cfg.stages,
                                cfg.bits_per_stage, cfg.hashes_per_stage));
    for (std::uint32_t s = 0; s < cfg.stages; ++s) {
        seeds_.push_back(hash::stage_seed(cfg.seed, s));
        bits_.emplace_back((cfg.bits_per_stage + 63) / 64, 0);
    }
}

void BloomCascade::insert(std::uint64_t key)
{
    for (std::uint32_t s = 0; s < cfg_.stages; ++s) {
        std::uint64_t h = hash::key_hash(key, seeds_[s]);
        for (std::uint32_t j = 0; j < cfg_.hashes_per_stage; ++j) {
            auto bit = bloom_bit_index(h, j, cfg_.bits_per_stage);
            bits_[s][bit / 64] |= std::uint64_t{1} << (bit % 64);
        }
    }
    ++inserted_;
}

bool BloomCascade::test(std::uint32_t stage, std::uint64_t h) const
{
    for (std::uint32_t j = 0; j < cfg_.hashes_per_stage; ++j) {
        auto bit = bloom_bit_index(h, j, cfg_.bits_per_stage);
        if (!((bits_[stage][bit / 64] >> (bit % 64)) & 1))
            return false;
    }
    return true;
}

BloomProbe BloomCascade::probe(std::uint64_t key) const
{
    BloomProbe r;
    r.hash = hash::key_hash(key, seeds_[0]);
    r.pass = test(0, r.hash);
    for (std::uint32_t s = 1; s < cfg_.stages; ++s)
        r.pass = test(s, hash::key_hash(key, seeds_[s])) && r.pass;
    return r;
}

void BloomCascade::probe_batch(std::span<const std::uint64_t> keys, std::uint8_t* pass, std::uint64_t* hashes) const
{
    const auto& k = simd::active_kernels();
    const std::size_t n = keys.size();
    k.hash_keys(keys.data(), n, seeds_[0], hashes);
    for (std::size_t i = 0; i < n; ++i)
        pass[i] = test(0, hashes[i]);
    std::vector<std::uint64_t> h(n);
    for (std::uint32_t s = 1; s < cfg_.stages; ++s) {
        k.hash_keys(keys.data(), n, seeds_[s], h.data());
        for (std::size_t i = 0; i < n; ++i)
            pass[i] &= static_cast<std::uint8_t>(test(s, h[i]));
    }
}

BloomCascade bloom_build(const BloomCascadeConfig& cfg, std::span<const std::uint64_t> keys)
{
    BloomCascade bc(cfg);
    for (auto key : keys)
        bc.insert(key);
    return bc;
}

BloomProbe bloom_probe(const BloomCascade& bc, std::uint64_t key) { return bc.probe(key); }

} // namespace sqf
