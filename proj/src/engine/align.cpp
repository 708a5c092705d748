#include "sqf/engine/align.hpp"

#include "sqf/engine/operators.hpp"
#include "sqf/error.hpp"

#include <cstring>
#include <fmt/format.h>
#include <unordered_map>

namespace sqf {

namespace {

void put_le64(std::uint8_t* dst, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        dst[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_le64(const std::uint8_t* src)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= std::uint64_t{src[i]} << (8 * i);
    return v;
}

} // namespace

std::size_t AlignedStream::tuples() const
{
    std::size_t n = 0;
    for (const auto& b : blocks)
        n += b.count;
    return n;
}

std::uint64_t AlignedStream::hash_at(std::size_t block, std::uint32_t i) const
{
    const auto* rec = blocks.at(block).bytes.data() + std::size_t{i} * record_bytes;
    return get_le64(rec + schema.tuple_bytes());
}

AlignedStream align(const Table& t, std::uint32_t block_bytes, bool with_hash, std::span<const std::uint64_t> hashes)
{
    AlignedStream s;
    s.schema = t.schema();
    s.with_hash = with_hash;
    s.block_bytes = block_bytes;
    s.record_bytes = static_cast<std::uint32_t>(t.schema().tuple_bytes() + (with_hash ? 8 : 0));
    if (s.record_bytes > block_bytes)
        throw Error(ErrorCode::TupleTooLarge,
                    fmt::format("{}-byte record does not fit a {}-byte block", s.record_bytes, block_bytes));
    if (with_hash && hashes.size() != t.rows())
        throw std::invalid_argument("align: one forwarded hash per tuple required");

    const std::uint32_t per_block = s.tuples_per_block();
    for (std::size_t r = 0; r < t.rows(); ++r) {
        if (s.blocks.empty() || s.blocks.back().count == per_block)
            s.blocks.push_back({std::vector<std::uint8_t>(block_bytes, 0), 0});
        auto& b = s.blocks.back();
        std::uint8_t* rec = b.bytes.data() + std::size_t{b.count} * s.record_bytes;
        for (std::size_t c = 0; c < t.arity(); ++c) {
            const auto& col = t.column(c);
            if (col.type().is_int()) {
                put_le64(rec, static_cast<std::uint64_t>(col.int_at(r)));
                rec += 8;
            } else {
                auto padded = col.padded_at(r);
                std::memcpy(rec, padded.data(), padded.size());
                rec += padded.size();
            }
        }
        if (with_hash)
            put_le64(rec, hashes[r]);
        ++b.count;
    }
    return s;
}

Table AlignedStream::unpack() const
{
    std::vector<ColumnData> cols;
    for (std::size_t c = 0; c < schema.arity(); ++c)
        cols.emplace_back(schema.column(c).type);
    for (const auto& b : blocks) {
        for (std::uint32_t i = 0; i < b.count; ++i) {
            const std::uint8_t* rec = b.bytes.data() + std::size_t{i} * record_bytes;
            for (std::size_t c = 0; c < schema.arity(); ++c) {
                const auto& type = schema.column(c).type;
                if (type.is_int()) {
                    cols[c].push_int(static_cast<std::int64_t>(get_le64(rec)));
                    rec += 8;
                } else {
                    cols[c].push_padded({reinterpret_cast<const char*>(rec), type.width});
                    rec += type.width;
                }
            }
        }
    }
    return Table::from_columns(schema, std::move(cols));
}

Table host_hash_join(const AlignedStream& build, const AlignedStream& probe, std::size_t build_key,
                     std::size_t probe_key, Side build_side, const Schema& out)
{
    if (!build.with_hash || !probe.with_hash)
        throw std::invalid_argument("host_hash_join needs streams aligned with forwarded hashes");
    Table b = build.unpack();
    Table p = probe.unpack();

    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_hash;
    by_hash.reserve(b.rows());
    std::uint32_t row = 0;
    for (std::size_t blk = 0; blk < build.blocks.size(); ++blk)
        for (std::uint32_t i = 0; i < build.blocks[blk].count; ++i)
            by_hash[build.hash_at(blk, i)].push_back(row++);

    auto bkeys = b.column(build_key).ints();
    auto pkeys = p.column(probe_key).ints();
    std::vector<std::uint32_t> bi, pi;
    row = 0;
    for (std::size_t blk = 0; blk < probe.blocks.size(); ++blk)
        for (std::uint32_t i = 0; i < probe.blocks[blk].count; ++i, ++row) {
            auto it = by_hash.find(probe.hash_at(blk, i));
            if (it == by_hash.end())
                continue;
            for (auto cand : it->second)
                if (bkeys[cand] == pkeys[row]) {
                    bi.push_back(cand);
                    pi.push_back(row);
                }
        }
    return build_side == Side::Left ? join_gather(b, p, bi, pi, out) : join_gather(p, b, pi, bi, out);
}

} // namespace sqf
