#pragma once

#include "sqf/error.hpp"
#include "sqf/frontend/ast.hpp"
#include "sqf/relcore/table.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sqf {

/// Maps a bound column reference to a column of the evaluated table.
using ColumnBinder = std::function<std::size_t(const ColumnRef&)>;

/// First arithmetic fault per row across the expressions evaluated over one
/// batch. Expressions record in evaluation order and nodes in post-order,
/// so the surviving entry is the fault a row-at-a-time evaluator would hit
/// first.
class FaultLog {
public:
    void reset(std::size_t rows);
    bool any() const noexcept { return any_; }
    void record(std::size_t row, ErrorCode code, const std::string* expr);
    /// Throws for the lowest faulting row; `base` offsets the batch.
    void raise_first(std::size_t base) const;

private:
    std::vector<std::uint8_t> code_; // 0: none, 1: overflow, 2: division by zero
    std::vector<const std::string*> expr_;
    bool any_ = false;
};

/// An expression compiled for batch evaluation over a table: comparisons,
/// checked addition/subtraction and mask logic run through the SIMD
/// kernels. Children are always all evaluated (no short-circuit).
class VectorExpr {
public:
    VectorExpr(const Expr& e, const ColumnBinder& bind);

    /// Rows [begin, begin + count) of a table.
    struct Batch {
        const Table& table;
        std::size_t begin = 0;
        std::size_t count = 0;
    };

    /// INT expression per row of the batch. Faulting rows get value 0.
    std::vector<std::int64_t> eval_int(const Batch& b, FaultLog& faults) const;
    /// Boolean expression per row of the batch, one 0/1 byte per row.
    std::vector<std::uint8_t> eval_mask(const Batch& b, FaultLog& faults) const;

private:
    struct Node {
        ExprKind kind;
        ArithOp arith;
        CmpOp cmp;
        BoolOp boolean;
        ValueType type;
        std::int64_t int_value = 0;
        std::string str_value;
        std::size_t column = 0;
        std::vector<std::size_t> children;
        std::string text;
    };

    struct IntVec {
        const std::int64_t* data = nullptr;
        std::vector<std::int64_t> own;
        std::optional<std::int64_t> constant;
    };

    std::vector<Node> nodes_;
    std::size_t root_ = 0;

    std::size_t compile(const Expr& e, const ColumnBinder& bind);
    IntVec int_node(std::size_t id, const Batch& t, FaultLog& faults) const;
    std::vector<std::uint8_t> mask_node(std::size_t id, const Batch& t, FaultLog& faults) const;
    std::vector<std::uint8_t> char_compare(const Node& n, const Batch& t) const;
};

} // namespace sqf
