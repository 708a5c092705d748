#pragma once

#include "sqf/frontend/ast.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sqf {

/// Keyed by lower-cased table name.
using Catalog = std::map<std::string, Schema>;

struct BoundAggregate {
    AggFn fn = AggFn::Count;
    /// Index into the joined tuple; absent for COUNT(*).
    std::optional<std::size_t> column;
    std::string name;

    bool operator==(const BoundAggregate&) const = default;
};

struct BoundOrder {
    std::size_t output_index = 0;
    bool descending = false;

    bool operator==(const BoundOrder&) const = default;
};

/// A type-checked query. Tuple layouts flow as follows:
///
///   joined   = left columns ++ right columns (left only without a join)
///   extended = joined ++ computed                (non-aggregating plans)
///   grouped  = group_by columns ++ aggregates    (aggregating plans)
///   output   = `projection` picked from extended or grouped
///
/// The WHERE clause is split at top-level AND: conjuncts over one input
/// filter that input before the join; the rest filter joined tuples.
/// Conjuncts that reference no column count as left-side.
struct BoundPlan {
    QueryPlan source_plan;

    std::string left_table;
    Schema left_schema;
    std::optional<std::string> right_table;
    std::optional<Schema> right_schema;
    /// (left column, right column) of the equi-join.
    std::optional<std::pair<std::size_t, std::size_t>> join_keys;

    std::optional<Expr> left_filter;
    std::optional<Expr> right_filter;
    std::optional<Expr> joined_filter;

    std::vector<ComputedColumn> computed;
    bool aggregating = false;
    std::vector<std::size_t> group_by; // joined-tuple indices
    std::vector<BoundAggregate> aggregates;

    /// Indices into extended (non-aggregating) or grouped (aggregating).
    std::vector<std::size_t> projection;
    std::vector<BoundOrder> order_by;
    Schema output_schema;

    std::vector<bool> touched_left;
    std::vector<bool> touched_right;

    bool has_join() const noexcept { return right_schema.has_value(); }
    std::size_t left_arity() const noexcept { return left_schema.arity(); }
    std::size_t joined_arity() const noexcept;
    std::vector<ColumnType> joined_types() const;
    /// Types of the layout the projection picks from.
    std::vector<ColumnType> pre_projection_types() const;
    /// Joined-tuple position of a bound column reference.
    std::size_t joined_index(const ColumnRef& ref) const;

    bool operator==(const BoundPlan&) const = default;
};

BoundPlan bind(const QueryPlan& plan, const Catalog& catalog);

/// Schema with synthetic unique names `c0, c1, ...` for intermediate tuples.
Schema internal_schema(const std::vector<ColumnType>& types);

} // namespace sqf
