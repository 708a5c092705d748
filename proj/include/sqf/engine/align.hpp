#pragma once

#include "sqf/frontend/ast.hpp"
#include "sqf/relcore/table.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sqf {

/// One cache-line-sized block of packed records. A record is the tuple's
/// columns (INT as 8 little-endian bytes, CHAR as its padded bytes),
/// followed by the 8-byte little-endian forwarded hash in co-design mode.
/// Records never straddle blocks; unused tail bytes are zero.
struct AlignedBlock {
    std::vector<std::uint8_t> bytes;
    std::uint32_t count = 0;
};

struct AlignedStream {
    Schema schema;
    bool with_hash = false;
    std::uint32_t block_bytes = 0;
    std::uint32_t record_bytes = 0;
    std::vector<AlignedBlock> blocks;

    std::size_t tuples() const;
    std::uint32_t tuples_per_block() const { return block_bytes / record_bytes; }
    /// Forwarded hash of record `i` of `block`.
    std::uint64_t hash_at(std::size_t block, std::uint32_t i) const;
    /// Decodes every record back into a table.
    Table unpack() const;
};

/// Greedy packing in stream order, floor(block_bytes / record_bytes)
/// records per block. `hashes` (one per row) is required when `with_hash`.
/// Throws TupleTooLarge when a record does not fit in a block.
AlignedStream align(const Table& t, std::uint32_t block_bytes, bool with_hash,
                    std::span<const std::uint64_t> hashes = {});

/// Joins two aligned streams on their forwarded hashes, confirming every
/// candidate pair by key equality. Output is left ++ right columns,
/// following probe order, then build order.
Table host_hash_join(const AlignedStream& build, const AlignedStream& probe, std::size_t build_key,
                     std::size_t probe_key, Side build_side, const Schema& out);

} // namespace sqf
