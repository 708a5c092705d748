#include "sqf/oracle/oracle.hpp"

#include "sqf/error.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <limits>
#include <map>

namespace sqf {

namespace {

struct Fault {
    ErrorCode code;
    std::string expr;
};

using IndexOf = std::size_t (*)(const BoundPlan&, const ColumnRef&);

std::size_t side_index(const BoundPlan&, const ColumnRef& ref) { return ref.index; }
std::size_t joined_index(const BoundPlan& bp, const ColumnRef& ref) { return bp.joined_index(ref); }

/// Tree walk over one row. Every child is evaluated; the first fault in
/// post-order wins.
class RowEval {
public:
    RowEval(const BoundPlan& bp, IndexOf index) : bp_(bp), index_(index) {}

    Value eval(const Expr& e, const Row& row)
    {
        switch (e.kind) {
        case ExprKind::ColumnRef: return row.at(index_(bp_, e.column));
        case ExprKind::IntLiteral: return e.int_value;
        case ExprKind::StrLiteral: return e.str_value;
        case ExprKind::Arith: {
            auto a = std::get<std::int64_t>(eval(e.children[0], row));
            auto b = std::get<std::int64_t>(eval(e.children[1], row));
            std::int64_t r = 0;
            bool overflow = false;
            switch (e.arith) {
            case ArithOp::Add: overflow = __builtin_add_overflow(a, b, &r); break;
            case ArithOp::Sub: overflow = __builtin_sub_overflow(a, b, &r); break;
            case ArithOp::Mul: overflow = __builtin_mul_overflow(a, b, &r); break;
            case ArithOp::Div:
                if (b == 0) {
                    fault(ErrorCode::DivisionByZero, e);
                    return std::int64_t{0};
                }
                if (a == std::numeric_limits<std::int64_t>::min() && b == -1)
                    overflow = true;
                else
                    r = a / b;
                break;
            }
            if (overflow) {
                fault(ErrorCode::ArithmeticOverflow, e);
                return std::int64_t{0};
            }
            return r;
        }
        case ExprKind::Cmp: {
            Value a = eval(e.children[0], row);
            Value b = eval(e.children[1], row);
            int c = 0;
            if (std::holds_alternative<std::int64_t>(a)) {
                auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
                c = x < y ? -1 : (x > y ? 1 : 0);
            } else {
                c = std::get<std::string>(a).compare(std::get<std::string>(b));
            }
            bool t = false;
            switch (e.cmp) {
            case CmpOp::Eq: t = c == 0; break;
            case CmpOp::Ne: t = c != 0; break;
            case CmpOp::Lt: t = c < 0; break;
            case CmpOp::Le: t = c <= 0; break;
            case CmpOp::Gt: t = c > 0; break;
            case CmpOp::Ge: t = c >= 0; break;
            }
            return std::int64_t{t};
        }
        case ExprKind::Bool: {
            std::vector<bool> vals;
            for (const auto& c : e.children)
                vals.push_back(std::get<std::int64_t>(eval(c, row)) != 0);
            bool t = false;
            if (e.boolean == BoolOp::Not)
                t = !vals[0];
            else if (e.boolean == BoolOp::And)
                t = std::all_of(vals.begin(), vals.end(), [](bool v) { return v; });
            else
                t = std::any_of(vals.begin(), vals.end(), [](bool v) { return v; });
            return std::int64_t{t};
        }
        }
        return std::int64_t{0};
    }

    /// Evaluates and throws the row's first fault, if any.
    Value eval_checked(const Expr& e, const Row& row, std::size_t position)
    {
        first_.reset();
        Value v = eval(e, row);
        if (first_)
            throw ArithmeticError(first_->code, position, first_->expr);
        return v;
    }

private:
    const BoundPlan& bp_;
    IndexOf index_;
    std::optional<Fault> first_;

    void fault(ErrorCode code, const Expr& e)
    {
        if (!first_)
            first_ = Fault{code, expr_to_sql(e)};
    }
};

std::vector<Row> filter_rows(const BoundPlan& bp, const std::vector<Row>& rows, const Expr& pred, IndexOf index)
{
    RowEval ev(bp, index);
    std::vector<Row> out;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (std::get<std::int64_t>(ev.eval_checked(pred, rows[i], i)) != 0)
            out.push_back(rows[i]);
    return out;
}

std::string column_label(const BoundPlan& bp, std::size_t i)
{
    if (i < bp.left_arity())
        return fmt::format("{}.{}", bp.left_table, bp.left_schema.column(i).name);
    return fmt::format("{}.{}", *bp.right_table, bp.right_schema->column(i - bp.left_arity()).name);
}

std::vector<Row> aggregate(const BoundPlan& bp, const std::vector<Row>& rows)
{
    struct Group {
        Row key;
        std::size_t first = 0;
        std::vector<std::int64_t> count, min, max;
        std::vector<__int128> sum;
    };
    const std::size_t width = bp.aggregates.size();
    std::vector<Group> groups;
    std::map<Row, std::size_t> where;
    auto fresh = [&](Row key, std::size_t first) {
        Group g;
        g.key = std::move(key);
        g.first = first;
        g.count.assign(width, 0);
        g.sum.assign(width, 0);
        g.min.assign(width, std::numeric_limits<std::int64_t>::max());
        g.max.assign(width, std::numeric_limits<std::int64_t>::min());
        groups.push_back(std::move(g));
        return groups.size() - 1;
    };
    if (bp.group_by.empty())
        fresh({}, 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::size_t g = 0;
        if (!bp.group_by.empty()) {
            Row key;
            for (auto c : bp.group_by)
                key.push_back(rows[r][c]);
            auto it = where.find(key);
            if (it == where.end())
                it = where.emplace(key, fresh(key, r)).first;
            g = it->second;
        }
        auto& grp = groups[g];
        for (std::size_t j = 0; j < width; ++j) {
            const auto& a = bp.aggregates[j];
            grp.count[j] += 1;
            if (!a.column || !std::holds_alternative<std::int64_t>(rows[r][*a.column]))
                continue;
            auto v = std::get<std::int64_t>(rows[r][*a.column]);
            grp.sum[j] += v;
            grp.min[j] = std::min(grp.min[j], v);
            grp.max[j] = std::max(grp.max[j], v);
        }
    }
    for (const auto& g : groups)
        for (std::size_t j = 0; j < width; ++j) {
            const auto& a = bp.aggregates[j];
            if ((a.fn == AggFn::Sum || a.fn == AggFn::Avg) &&
                (g.sum[j] > std::numeric_limits<std::int64_t>::max() ||
                 g.sum[j] < std::numeric_limits<std::int64_t>::min()))
                throw ArithmeticError(ErrorCode::ArithmeticOverflow, g.first,
                                      fmt::format("{}({})", agg_name(a.fn), column_label(bp, *a.column)));
        }
    std::vector<Row> out;
    for (const auto& g : groups) {
        Row row = g.key;
        for (std::size_t j = 0; j < width; ++j) {
            std::int64_t v = 0;
            switch (bp.aggregates[j].fn) {
            case AggFn::Count: v = g.count[j]; break;
            case AggFn::Sum: v = static_cast<std::int64_t>(g.sum[j]); break;
            case AggFn::Min: v = g.count[j] ? g.min[j] : 0; break;
            case AggFn::Max: v = g.count[j] ? g.max[j] : 0; break;
            case AggFn::Avg: v = g.count[j] ? static_cast<std::int64_t>(g.sum[j] / g.count[j]) : 0; break;
            }
            row.push_back(v);
        }
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace

Table reference_execute(const BoundPlan& bp, const TableCatalog& tables)
{
    std::vector<Row> left = find_table(tables, bp.left_table).to_rows();
    if (bp.left_filter)
        left = filter_rows(bp, left, *bp.left_filter, side_index);

    std::vector<Row> rows;
    if (bp.has_join()) {
        std::vector<Row> right = find_table(tables, *bp.right_table).to_rows();
        if (bp.right_filter)
            right = filter_rows(bp, right, *bp.right_filter, side_index);
        auto [lk, rk] = *bp.join_keys;
        for (const auto& l : left)
            for (const auto& r : right)
                if (l[lk] == r[rk]) {
                    Row joined = l;
                    joined.insert(joined.end(), r.begin(), r.end());
                    rows.push_back(std::move(joined));
                }
    } else {
        rows = std::move(left);
    }

    if (bp.joined_filter)
        rows = filter_rows(bp, rows, *bp.joined_filter, joined_index);

    if (bp.aggregating) {
        rows = aggregate(bp, rows);
    } else if (!bp.computed.empty()) {
        RowEval ev(bp, joined_index);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            Row extra;
            for (const auto& c : bp.computed)
                extra.push_back(ev.eval_checked(c.expr, rows[i], i));
            rows[i].insert(rows[i].end(), extra.begin(), extra.end());
        }
    }

    std::vector<Row> projected;
    projected.reserve(rows.size());
    for (const auto& r : rows) {
        Row out;
        for (auto i : bp.projection)
            out.push_back(r[i]);
        projected.push_back(std::move(out));
    }

    if (!bp.order_by.empty())
        std::stable_sort(projected.begin(), projected.end(), [&](const Row& a, const Row& b) {
            for (const auto& o : bp.order_by) {
                auto x = std::get<std::int64_t>(a[o.output_index]);
                auto y = std::get<std::int64_t>(b[o.output_index]);
                if (x != y)
                    return o.descending ? x > y : x < y;
            }
            return false;
        });

    return Table::from_rows(bp.output_schema, projected);
}

} // namespace sqf
