#include "sqf/engine/expr_eval.hpp"

#include "sqf/simd/kernels.hpp"

#include <limits>

namespace sqf {

namespace {

simd::Cmp to_simd(CmpOp op) { return static_cast<simd::Cmp>(static_cast<std::uint8_t>(op)); }

bool compare_strings(std::string_view a, std::string_view b, CmpOp op)
{
    int c = a.compare(b);
    switch (op) {
    case CmpOp::Eq: return c == 0;
    case CmpOp::Ne: return c != 0;
    case CmpOp::Lt: return c < 0;
    case CmpOp::Le: return c <= 0;
    case CmpOp::Gt: return c > 0;
    case CmpOp::Ge: return c >= 0;
    }
    return false;
}

} // namespace

void FaultLog::reset(std::size_t rows)
{
    code_.assign(rows, 0);
    expr_.assign(rows, nullptr);
    any_ = false;
}

void FaultLog::record(std::size_t row, ErrorCode code, const std::string* expr)
{
    if (code_[row] != 0)
        return;
    code_[row] = code == ErrorCode::DivisionByZero ? 2 : 1;
    expr_[row] = expr;
    any_ = true;
}

void FaultLog::raise_first(std::size_t base) const
{
    if (!any_)
        return;
    for (std::size_t i = 0; i < code_.size(); ++i)
        if (code_[i] != 0)
            throw ArithmeticError(code_[i] == 2 ? ErrorCode::DivisionByZero : ErrorCode::ArithmeticOverflow,
                                  base + i, *expr_[i]);
}

VectorExpr::VectorExpr(const Expr& e, const ColumnBinder& bind) { root_ = compile(e, bind); }

std::size_t VectorExpr::compile(const Expr& e, const ColumnBinder& bind)
{
    Node n;
    n.kind = e.kind;
    n.arith = e.arith;
    n.cmp = e.cmp;
    n.boolean = e.boolean;
    n.type = e.type;
    n.int_value = e.int_value;
    n.str_value = e.str_value;
    if (e.kind == ExprKind::ColumnRef)
        n.column = bind(e.column);
    for (const auto& c : e.children)
        n.children.push_back(compile(c, bind));
    if (e.kind == ExprKind::Arith)
        n.text = expr_to_sql(e);
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

VectorExpr::IntVec VectorExpr::int_node(std::size_t id, const Batch& t, FaultLog& faults) const
{
    const Node& n = nodes_[id];
    const std::size_t rows = t.count;
    IntVec out;
    switch (n.kind) {
    case ExprKind::IntLiteral:
        out.constant = n.int_value;
        return out;
    case ExprKind::ColumnRef:
        out.data = t.table.column(n.column).ints().data() + t.begin;
        return out;
    case ExprKind::Arith: break;
    default: throw std::logic_error("int_node on a non-integer expression");
    }

    IntVec a = int_node(n.children[0], t, faults);
    IntVec b = int_node(n.children[1], t, faults);
    auto expand = [rows](IntVec& v) {
        if (v.constant) {
            v.own.assign(rows, *v.constant);
            v.data = v.own.data();
            v.constant.reset();
        }
    };
    expand(a);
    expand(b);
    out.own.resize(rows);
    out.data = out.own.data();
    std::int64_t* dst = out.own.data();
    const auto& k = simd::active_kernels();

    if (n.arith == ArithOp::Add || n.arith == ArithOp::Sub) {
        std::vector<std::uint8_t> overflow(rows);
        if (n.arith == ArithOp::Add)
            k.add_checked(a.data, b.data, rows, dst, overflow.data());
        else
            k.sub_checked(a.data, b.data, rows, dst, overflow.data());
        std::vector<std::uint32_t> idx(rows);
        std::size_t hits = k.mask_to_indices(overflow.data(), rows, idx.data());
        for (std::size_t i = 0; i < hits; ++i) {
            faults.record(idx[i], ErrorCode::ArithmeticOverflow, &n.text);
            dst[idx[i]] = 0;
        }
        return out;
    }
    if (n.arith == ArithOp::Mul) {
        for (std::size_t i = 0; i < rows; ++i)
            if (__builtin_mul_overflow(a.data[i], b.data[i], &dst[i])) {
                faults.record(i, ErrorCode::ArithmeticOverflow, &n.text);
                dst[i] = 0;
            }
        return out;
    }
    for (std::size_t i = 0; i < rows; ++i) {
        std::int64_t x = a.data[i], y = b.data[i];
        if (y == 0) {
            faults.record(i, ErrorCode::DivisionByZero, &n.text);
            dst[i] = 0;
        } else if (x == std::numeric_limits<std::int64_t>::min() && y == -1) {
            faults.record(i, ErrorCode::ArithmeticOverflow, &n.text);
            dst[i] = 0;
        } else {
            dst[i] = x / y;
        }
    }
    return out;
}

std::vector<std::uint8_t> VectorExpr::char_compare(const Node& n, const Batch& t) const
{
    const Node& l = nodes_[n.children[0]];
    const Node& r = nodes_[n.children[1]];
    std::vector<std::uint8_t> out(t.count);
    auto value = [&t](const Node& side, std::size_t row) -> std::string_view {
        if (side.kind == ExprKind::StrLiteral)
            return side.str_value;
        return t.table.column(side.column).char_at(t.begin + row);
    };
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = compare_strings(value(l, i), value(r, i), n.cmp);
    return out;
}

std::vector<std::uint8_t> VectorExpr::mask_node(std::size_t id, const Batch& t, FaultLog& faults) const
{
    const Node& n = nodes_[id];
    const std::size_t rows = t.count;
    const auto& k = simd::active_kernels();
    std::vector<std::uint8_t> out(rows);

    if (n.kind == ExprKind::Cmp) {
        const Node& l = nodes_[n.children[0]];
        if (l.type == ValueType::Char)
            return char_compare(n, t);
        IntVec a = int_node(n.children[0], t, faults);
        IntVec b = int_node(n.children[1], t, faults);
        if (a.constant && b.constant) {
            std::int64_t x = *a.constant, y = *b.constant;
            k.compare_scalar(&x, y, 1, to_simd(n.cmp), out.data());
            std::fill(out.begin(), out.end(), rows ? out[0] : 0);
        } else if (b.constant) {
            k.compare_scalar(a.data, *b.constant, rows, to_simd(n.cmp), out.data());
        } else if (a.constant) {
            k.compare_scalar(b.data, *a.constant, rows, to_simd(flip(n.cmp)), out.data());
        } else {
            k.compare(a.data, b.data, rows, to_simd(n.cmp), out.data());
        }
        return out;
    }
    if (n.kind != ExprKind::Bool)
        throw std::logic_error("mask_node on a non-boolean expression");

    if (n.boolean == BoolOp::Not) {
        auto m = mask_node(n.children[0], t, faults);
        k.mask_not(m.data(), rows, out.data());
        return out;
    }
    out = mask_node(n.children[0], t, faults);
    for (std::size_t c = 1; c < n.children.size(); ++c) {
        auto m = mask_node(n.children[c], t, faults);
        if (n.boolean == BoolOp::And)
            k.mask_and(out.data(), m.data(), rows, out.data());
        else
            k.mask_or(out.data(), m.data(), rows, out.data());
    }
    return out;
}

std::vector<std::int64_t> VectorExpr::eval_int(const Batch& t, FaultLog& faults) const
{
    IntVec v = int_node(root_, t, faults);
    if (v.constant)
        return std::vector<std::int64_t>(t.count, *v.constant);
    if (!v.own.empty() || t.count == 0)
        return std::move(v.own);
    return std::vector<std::int64_t>(v.data, v.data + t.count);
}

std::vector<std::uint8_t> VectorExpr::eval_mask(const Batch& t, FaultLog& faults) const
{
    return mask_node(root_, t, faults);
}

} // namespace sqf
