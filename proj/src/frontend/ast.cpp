#include "sqf/frontend/ast.hpp"

#include <fmt/format.h>

namespace sqf {

std::string_view arith_symbol(ArithOp op)
{
    switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
    }
    return "?";
}

std::string_view cmp_symbol(CmpOp op)
{
    switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "<>";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    }
    return "?";
}

std::string_view agg_name(AggFn fn)
{
    switch (fn) {
    case AggFn::Count: return "COUNT";
    case AggFn::Sum: return "SUM";
    case AggFn::Min: return "MIN";
    case AggFn::Max: return "MAX";
    case AggFn::Avg: return "AVG";
    }
    return "?";
}

CmpOp flip(CmpOp op)
{
    switch (op) {
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Le: return CmpOp::Ge;
    case CmpOp::Gt: return CmpOp::Lt;
    case CmpOp::Ge: return CmpOp::Le;
    default: return op;
    }
}

std::string ColumnRef::display() const
{
    return table ? fmt::format("{}.{}", *table, name) : name;
}

bool ColumnRef::operator==(const ColumnRef& o) const
{
    return table == o.table && name == o.name && side == o.side && index == o.index;
}

Expr Expr::column_ref(ColumnRef ref, std::size_t pos)
{
    Expr e;
    e.kind = ExprKind::ColumnRef;
    e.column = std::move(ref);
    e.position = pos;
    return e;
}

Expr Expr::int_literal(std::int64_t v, std::size_t pos)
{
    Expr e;
    e.kind = ExprKind::IntLiteral;
    e.int_value = v;
    e.position = pos;
    return e;
}

Expr Expr::str_literal(std::string s, std::size_t pos)
{
    Expr e;
    e.kind = ExprKind::StrLiteral;
    e.str_value = std::move(s);
    e.position = pos;
    return e;
}

Expr Expr::arith_node(ArithOp op, Expr lhs, Expr rhs, std::size_t pos)
{
    Expr e;
    e.kind = ExprKind::Arith;
    e.arith = op;
    e.children.push_back(std::move(lhs));
    e.children.push_back(std::move(rhs));
    e.position = pos;
    return e;
}

Expr Expr::cmp_node(CmpOp op, Expr lhs, Expr rhs, std::size_t pos)
{
    Expr e;
    e.kind = ExprKind::Cmp;
    e.cmp = op;
    e.children.push_back(std::move(lhs));
    e.children.push_back(std::move(rhs));
    e.position = pos;
    return e;
}

Expr Expr::bool_node(BoolOp op, std::vector<Expr> children, std::size_t pos)
{
    Expr e;
    e.kind = ExprKind::Bool;
    e.boolean = op;
    e.children = std::move(children);
    e.position = pos;
    return e;
}

bool Expr::operator==(const Expr& o) const
{
    if (kind != o.kind || type != o.type || width != o.width || children != o.children)
        return false;
    switch (kind) {
    case ExprKind::ColumnRef: return column == o.column;
    case ExprKind::IntLiteral: return int_value == o.int_value;
    case ExprKind::StrLiteral: return str_value == o.str_value;
    case ExprKind::Arith: return arith == o.arith;
    case ExprKind::Cmp: return cmp == o.cmp;
    case ExprKind::Bool: return boolean == o.boolean;
    }
    return false;
}

std::size_t count_terms(const Expr& e)
{
    std::size_t n = e.kind == ExprKind::Cmp ? 1 : 0;
    for (const auto& c : e.children)
        n += count_terms(c);
    return n;
}

std::size_t count_arith(const Expr& e)
{
    std::size_t n = e.kind == ExprKind::Arith ? 1 : 0;
    for (const auto& c : e.children)
        n += count_arith(c);
    return n;
}

std::string expr_to_sql(const Expr& e)
{
    switch (e.kind) {
    case ExprKind::ColumnRef:
        return e.column.display();
    case ExprKind::IntLiteral:
        return std::to_string(e.int_value);
    case ExprKind::StrLiteral: {
        std::string out = "'";
        for (char c : e.str_value) {
            if (c == '\'')
                out += '\'';
            out += c;
        }
        return out + "'";
    }
    case ExprKind::Arith:
        return fmt::format("({} {} {})", expr_to_sql(e.children[0]), arith_symbol(e.arith),
                           expr_to_sql(e.children[1]));
    case ExprKind::Cmp:
        return fmt::format("({} {} {})", expr_to_sql(e.children[0]), cmp_symbol(e.cmp), expr_to_sql(e.children[1]));
    case ExprKind::Bool: {
        if (e.boolean == BoolOp::Not)
            return fmt::format("(NOT {})", expr_to_sql(e.children[0]));
        std::string sep = e.boolean == BoolOp::And ? " AND " : " OR ";
        std::string out = "(";
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            if (i)
                out += sep;
            out += expr_to_sql(e.children[i]);
        }
        return out + ")";
    }
    }
    return {};
}

} // namespace sqf
