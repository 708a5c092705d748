#pragma once

#include "sqf/engine/expr_eval.hpp"
#include "sqf/frontend/binder.hpp"
#include "sqf/relcore/table.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

// Functional semantics of the operator modules, over whole streams.

namespace sqf {

/// Rows per evaluation batch.
inline constexpr std::size_t kBatchRows = 4096;

/// Rows where the predicate holds, in input order.
Table restrict_rows(const Table& in, const VectorExpr& predicate);

/// `in` with one INT column appended per expression; `out` names the
/// widened layout.
Table append_computed(const Table& in, std::span<const VectorExpr> exprs, const Schema& out);

/// Grouped (or, with no group columns, global) fold. Output layout is
/// group columns followed by one INT per aggregate; groups appear in order
/// of first occurrence. `labels` name the aggregates in fault reports.
Table aggregate_rows(const Table& in, std::span<const std::size_t> group_by, std::span<const BoundAggregate> aggs,
                     std::span<const std::string> labels, const Schema& out);

Table project_columns(const Table& in, std::span<const std::size_t> columns, const Schema& out);

struct SortKey {
    std::size_t column = 0;
    bool descending = false;
};

/// Stable sort on INT keys the way the SORT module does it: sorted runs
/// of `run_capacity` tuples, then pairwise merge passes. Returns the
/// permutation; `merge_passes` receives the number of passes.
std::vector<std::uint32_t> sort_permutation(const Table& in, std::span<const SortKey> keys,
                                            std::uint32_t run_capacity, std::uint32_t* merge_passes = nullptr);
Table sort_rows(const Table& in, std::span<const SortKey> keys, std::uint32_t run_capacity,
                std::uint32_t* merge_passes = nullptr);

/// Concatenation `left[li[i]] ++ right[ri[i]]` for every pair.
Table join_gather(const Table& left, const Table& right, std::span<const std::uint32_t> li,
                  std::span<const std::uint32_t> ri, const Schema& out);

/// Equi-join of inputs already ascending on their keys.
Table merge_join(const Table& left, const Table& right, std::size_t left_key, std::size_t right_key,
                 const Schema& out);

/// Builds on `build`, probes with the other input; output follows probe
/// order, then build insertion order.
Table hash_join(const Table& left, const Table& right, std::size_t left_key, std::size_t right_key, Side build,
                const Schema& out);

} // namespace sqf
