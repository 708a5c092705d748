#pragma once

#include "sqf/relcore/table.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sqf {

enum class ExprKind : std::uint8_t { ColumnRef, IntLiteral, StrLiteral, Arith, Cmp, Bool };
enum class ArithOp : std::uint8_t { Add, Sub, Mul, Div };
enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };
enum class BoolOp : std::uint8_t { And, Or, Not };
enum class Side : std::uint8_t { Left, Right };
enum class ValueType : std::uint8_t { Unknown, Int, Char, Bool };
enum class AggFn : std::uint8_t { Count, Sum, Min, Max, Avg };

std::string_view arith_symbol(ArithOp op);
std::string_view cmp_symbol(CmpOp op);
std::string_view agg_name(AggFn fn);
/// Operator with operands swapped: `a < b` == `b > a`.
CmpOp flip(CmpOp op);

struct ColumnRef {
    std::optional<std::string> table;
    std::string name;
    /// Resolved by bind().
    std::optional<Side> side;
    std::size_t index = 0;

    std::string display() const;
    bool operator==(const ColumnRef& o) const;
};

/// Expression tree. Only the fields relevant to `kind` are meaningful.
struct Expr {
    ExprKind kind = ExprKind::IntLiteral;
    ArithOp arith = ArithOp::Add;
    CmpOp cmp = CmpOp::Eq;
    BoolOp boolean = BoolOp::And;
    std::int64_t int_value = 0;
    std::string str_value;
    ColumnRef column;
    std::vector<Expr> children;

    /// Annotations written by bind(); `width` applies to CHAR.
    ValueType type = ValueType::Unknown;
    std::uint32_t width = 0;
    /// Byte offset in the query text; ignored by equality.
    std::size_t position = 0;

    static Expr column_ref(ColumnRef ref, std::size_t pos = 0);
    static Expr int_literal(std::int64_t v, std::size_t pos = 0);
    static Expr str_literal(std::string s, std::size_t pos = 0);
    static Expr arith_node(ArithOp op, Expr lhs, Expr rhs, std::size_t pos = 0);
    static Expr cmp_node(CmpOp op, Expr lhs, Expr rhs, std::size_t pos = 0);
    static Expr bool_node(BoolOp op, std::vector<Expr> children, std::size_t pos = 0);

    bool operator==(const Expr& o) const;
};

/// Number of Cmp nodes (predicate terms).
std::size_t count_terms(const Expr& e);
/// Number of Arith nodes.
std::size_t count_arith(const Expr& e);
std::string expr_to_sql(const Expr& e);

struct JoinClause {
    std::string table;
    ColumnRef left_key;
    ColumnRef right_key;

    bool operator==(const JoinClause&) const = default;
};

struct ComputedColumn {
    std::string name;
    Expr expr;

    bool operator==(const ComputedColumn&) const = default;
};

struct AggregateItem {
    AggFn fn = AggFn::Count;
    /// Absent for COUNT(*).
    std::optional<ColumnRef> column;
    std::string name;

    bool operator==(const AggregateItem&) const = default;
};

struct OutputItem {
    enum class Kind : std::uint8_t { Column, Computed, Aggregate };
    Kind kind = Kind::Column;
    ColumnRef column;      // Kind::Column
    std::size_t index = 0; // position in computed / aggregates
    std::string name;

    bool operator==(const OutputItem&) const = default;
};

struct OrderItem {
    ColumnRef column;
    bool descending = false;

    bool operator==(const OrderItem&) const = default;
};

/// Parsed, unbound query.
struct QueryPlan {
    std::string source;
    std::optional<JoinClause> join;
    std::optional<Expr> restriction;
    std::vector<ComputedColumn> computed;
    std::vector<ColumnRef> group_by;
    std::vector<AggregateItem> aggregates;
    /// `SELECT *`; projection stays empty until bind expands it.
    bool star = false;
    std::vector<OutputItem> projection;
    std::vector<OrderItem> order_by;

    bool operator==(const QueryPlan&) const = default;
};

} // namespace sqf
