#include "sqf/engine/operators.hpp"

#include "sqf/simd/kernels.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace sqf {

Table restrict_rows(const Table& in, const VectorExpr& predicate)
{
    const auto& k = simd::active_kernels();
    std::vector<std::uint32_t> keep;
    std::vector<std::uint32_t> hits(kBatchRows);
    FaultLog faults;
    for (std::size_t begin = 0; begin < in.rows(); begin += kBatchRows) {
        std::size_t count = std::min(kBatchRows, in.rows() - begin);
        faults.reset(count);
        auto mask = predicate.eval_mask({in, begin, count}, faults);
        faults.raise_first(begin);
        std::size_t n = k.mask_to_indices(mask.data(), count, hits.data());
        for (std::size_t i = 0; i < n; ++i)
            keep.push_back(static_cast<std::uint32_t>(begin + hits[i]));
    }
    if (keep.size() == in.rows())
        return in;
    return in.gather(keep);
}

Table append_computed(const Table& in, std::span<const VectorExpr> exprs, const Schema& out)
{
    std::vector<ColumnData> cols;
    for (std::size_t c = 0; c < in.arity(); ++c)
        cols.push_back(in.column(c));
    std::vector<ColumnData> extra(exprs.size(), ColumnData(ColumnType::integer()));
    for (auto& e : extra)
        e.reserve(in.rows());
    FaultLog faults;
    for (std::size_t begin = 0; begin < in.rows(); begin += kBatchRows) {
        std::size_t count = std::min(kBatchRows, in.rows() - begin);
        faults.reset(count);
        std::vector<std::vector<std::int64_t>> values;
        for (const auto& e : exprs)
            values.push_back(e.eval_int({in, begin, count}, faults));
        faults.raise_first(begin);
        for (std::size_t j = 0; j < exprs.size(); ++j)
            for (auto v : values[j])
                extra[j].push_int(v);
    }
    for (auto& e : extra)
        cols.push_back(std::move(e));
    return Table::from_columns(out, std::move(cols));
}

namespace {

struct Accumulator {
    std::int64_t count = 0;
    __int128 sum = 0;
    std::int64_t min = std::numeric_limits<std::int64_t>::max();
    std::int64_t max = std::numeric_limits<std::int64_t>::min();
};

void append_key(std::string& key, const Table& t, std::size_t col, std::size_t row)
{
    const auto& c = t.column(col);
    if (c.type().is_int()) {
        auto v = c.int_at(row);
        key.append(reinterpret_cast<const char*>(&v), sizeof v);
    } else {
        key.append(c.padded_at(row));
    }
}

} // namespace

Table aggregate_rows(const Table& in, std::span<const std::size_t> group_by, std::span<const BoundAggregate> aggs,
                     std::span<const std::string> labels, const Schema& out)
{
    std::unordered_map<std::string, std::uint32_t> index;
    std::vector<std::uint32_t> first_row;
    std::vector<Accumulator> acc; // groups x aggs
    const std::size_t width = aggs.size();

    std::vector<const std::int64_t*> inputs(width, nullptr);
    for (std::size_t j = 0; j < width; ++j)
        if (aggs[j].column && in.column(*aggs[j].column).type().is_int())
            inputs[j] = in.column(*aggs[j].column).ints().data();

    auto add_group = [&](std::uint32_t row) {
        first_row.push_back(row);
        acc.resize(acc.size() + width);
        return static_cast<std::uint32_t>(first_row.size() - 1);
    };
    if (group_by.empty())
        add_group(0);

    std::string key;
    for (std::size_t r = 0; r < in.rows(); ++r) {
        std::uint32_t g = 0;
        if (!group_by.empty()) {
            key.clear();
            for (auto c : group_by)
                append_key(key, in, c, r);
            auto [it, fresh] = index.try_emplace(key, 0);
            if (fresh)
                it->second = add_group(static_cast<std::uint32_t>(r));
            g = it->second;
        }
        Accumulator* a = &acc[g * width];
        for (std::size_t j = 0; j < width; ++j) {
            ++a[j].count;
            if (!inputs[j])
                continue;
            std::int64_t v = inputs[j][r];
            a[j].sum += v;
            a[j].min = std::min(a[j].min, v);
            a[j].max = std::max(a[j].max, v);
        }
    }

    std::vector<ColumnData> cols;
    for (auto c : group_by)
        cols.push_back(in.column(c).gather(first_row));
    const std::size_t groups = first_row.size();
    // Sums are exact; a total outside the INT range faults at the group's
    // first row, whatever the order of the stream.
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t j = 0; j < width; ++j) {
            auto sum = acc[g * width + j].sum;
            bool summed = aggs[j].fn == AggFn::Sum || aggs[j].fn == AggFn::Avg;
            if (summed && (sum > std::numeric_limits<std::int64_t>::max() ||
                           sum < std::numeric_limits<std::int64_t>::min()))
                throw ArithmeticError(ErrorCode::ArithmeticOverflow, first_row[g], labels[j]);
        }
    for (std::size_t j = 0; j < width; ++j) {
        ColumnData col(ColumnType::integer());
        col.reserve(groups);
        for (std::size_t g = 0; g < groups; ++g) {
            const auto& a = acc[g * width + j];
            std::int64_t v = 0;
            switch (aggs[j].fn) {
            case AggFn::Count: v = a.count; break;
            case AggFn::Sum: v = static_cast<std::int64_t>(a.sum); break;
            case AggFn::Min: v = a.count ? a.min : 0; break;
            case AggFn::Max: v = a.count ? a.max : 0; break;
            case AggFn::Avg: v = a.count ? static_cast<std::int64_t>(a.sum / a.count) : 0; break;
            }
            col.push_int(v);
        }
        cols.push_back(std::move(col));
    }
    return Table::from_columns(out, std::move(cols));
}

Table project_columns(const Table& in, std::span<const std::size_t> columns, const Schema& out)
{
    std::vector<ColumnData> cols;
    cols.reserve(columns.size());
    for (auto c : columns)
        cols.push_back(in.column(c));
    return Table::from_columns(out, std::move(cols));
}

std::vector<std::uint32_t> sort_permutation(const Table& in, std::span<const SortKey> keys,
                                            std::uint32_t run_capacity, std::uint32_t* merge_passes)
{
    if (run_capacity == 0)
        throw std::invalid_argument("sort run capacity must be positive");
    std::vector<const std::int64_t*> data;
    for (const auto& k : keys)
        data.push_back(in.column(k.column).ints().data());
    auto less = [&](std::uint32_t a, std::uint32_t b) {
        for (std::size_t i = 0; i < keys.size(); ++i) {
            auto x = data[i][a], y = data[i][b];
            if (x != y)
                return keys[i].descending ? x > y : x < y;
        }
        return false;
    };

    const std::size_t n = in.rows();
    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i)
        perm[i] = static_cast<std::uint32_t>(i);
    for (std::size_t b = 0; b < n; b += run_capacity)
        std::stable_sort(perm.begin() + static_cast<std::ptrdiff_t>(b),
                         perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, b + run_capacity)), less);

    std::uint32_t passes = 0;
    std::vector<std::uint32_t> buf(n);
    for (std::size_t width = run_capacity; width < n; width *= 2) {
        for (std::size_t lo = 0; lo < n; lo += 2 * width) {
            std::size_t mid = std::min(n, lo + width), hi = std::min(n, lo + 2 * width);
            std::merge(perm.begin() + static_cast<std::ptrdiff_t>(lo), perm.begin() + static_cast<std::ptrdiff_t>(mid),
                       perm.begin() + static_cast<std::ptrdiff_t>(mid), perm.begin() + static_cast<std::ptrdiff_t>(hi),
                       buf.begin() + static_cast<std::ptrdiff_t>(lo), less);
        }
        perm.swap(buf);
        ++passes;
    }
    if (merge_passes)
        *merge_passes = passes;
    return perm;
}

Table sort_rows(const Table& in, std::span<const SortKey> keys, std::uint32_t run_capacity,
                std::uint32_t* merge_passes)
{
    auto perm = sort_permutation(in, keys, run_capacity, merge_passes);
    return in.gather(perm);
}

Table join_gather(const Table& left, const Table& right, std::span<const std::uint32_t> li,
                  std::span<const std::uint32_t> ri, const Schema& out)
{
    std::vector<ColumnData> cols;
    cols.reserve(left.arity() + right.arity());
    for (std::size_t c = 0; c < left.arity(); ++c)
        cols.push_back(left.column(c).gather(li));
    for (std::size_t c = 0; c < right.arity(); ++c)
        cols.push_back(right.column(c).gather(ri));
    return Table::from_columns(out, std::move(cols));
}

Table merge_join(const Table& left, const Table& right, std::size_t left_key, std::size_t right_key,
                 const Schema& out)
{
    auto l = left.column(left_key).ints();
    auto r = right.column(right_key).ints();
    if (!std::is_sorted(l.begin(), l.end()) || !std::is_sorted(r.begin(), r.end()))
        throw std::logic_error("merge_join: inputs are not ordered on the join key");
    std::vector<std::uint32_t> li, ri;
    std::size_t i = 0, j = 0;
    while (i < l.size() && j < r.size()) {
        if (l[i] < r[j]) {
            ++i;
        } else if (r[j] < l[i]) {
            ++j;
        } else {
            std::size_t i_end = i, j_end = j;
            while (i_end < l.size() && l[i_end] == l[i])
                ++i_end;
            while (j_end < r.size() && r[j_end] == r[j])
                ++j_end;
            for (std::size_t a = i; a < i_end; ++a)
                for (std::size_t b = j; b < j_end; ++b) {
                    li.push_back(static_cast<std::uint32_t>(a));
                    ri.push_back(static_cast<std::uint32_t>(b));
                }
            i = i_end;
            j = j_end;
        }
    }
    return join_gather(left, right, li, ri, out);
}

Table hash_join(const Table& left, const Table& right, std::size_t left_key, std::size_t right_key, Side build,
                const Schema& out)
{
    const bool build_left = build == Side::Left;
    auto bkeys = (build_left ? left : right).column(build_left ? left_key : right_key).ints();
    auto pkeys = (build_left ? right : left).column(build_left ? right_key : left_key).ints();

    std::unordered_map<std::int64_t, std::vector<std::uint32_t>> table;
    table.reserve(bkeys.size());
    for (std::size_t i = 0; i < bkeys.size(); ++i)
        table[bkeys[i]].push_back(static_cast<std::uint32_t>(i));

    std::vector<std::uint32_t> bi, pi;
    for (std::size_t p = 0; p < pkeys.size(); ++p) {
        auto it = table.find(pkeys[p]);
        if (it == table.end())
            continue;
        for (auto b : it->second) {
            bi.push_back(b);
            pi.push_back(static_cast<std::uint32_t>(p));
        }
    }
    return build_left ? join_gather(left, right, bi, pi, out) : join_gather(left, right, pi, bi, out);
}

} // namespace sqf
