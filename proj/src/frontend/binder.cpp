#include "sqf/frontend/binder.hpp"

#include "sqf/error.hpp"

#include <fmt/format.h>
#include <set>

namespace sqf {

std::size_t BoundPlan::joined_arity() const noexcept
{
    return left_schema.arity() + (right_schema ? right_schema->arity() : 0);
}

std::vector<ColumnType> BoundPlan::joined_types() const
{
    std::vector<ColumnType> types;
    for (const auto& c : left_schema.columns())
        types.push_back(c.type);
    if (right_schema)
        for (const auto& c : right_schema->columns())
            types.push_back(c.type);
    return types;
}

std::vector<ColumnType> BoundPlan::pre_projection_types() const
{
    auto joined = joined_types();
    std::vector<ColumnType> types;
    if (aggregating) {
        for (auto g : group_by)
            types.push_back(joined[g]);
        for (std::size_t i = 0; i < aggregates.size(); ++i)
            types.push_back(ColumnType::integer());
        return types;
    }
    types = joined;
    for (std::size_t i = 0; i < computed.size(); ++i)
        types.push_back(ColumnType::integer());
    return types;
}

std::size_t BoundPlan::joined_index(const ColumnRef& ref) const
{
    return ref.side == Side::Right ? left_schema.arity() + ref.index : ref.index;
}

Schema internal_schema(const std::vector<ColumnType>& types)
{
    std::vector<Column> cols;
    cols.reserve(types.size());
    for (std::size_t i = 0; i < types.size(); ++i)
        cols.push_back({fmt::format("c{}", i), types[i]});
    return Schema(std::move(cols));
}

namespace {

class Binder {
public:
    Binder(const QueryPlan& plan, const Catalog& catalog) : plan_(plan), catalog_(catalog) {}

    BoundPlan run()
    {
        bp_.source_plan = plan_;
        bp_.left_table = plan_.source;
        bp_.left_schema = lookup_table(plan_.source);
        bp_.touched_left.assign(bp_.left_schema.arity(), false);
        if (plan_.join) {
            if (iequals(plan_.join->table, plan_.source))
                throw Error(ErrorCode::TypeError, fmt::format("self-join of `{}` is not supported", plan_.source));
            bp_.right_table = plan_.join->table;
            bp_.right_schema = lookup_table(plan_.join->table);
            bp_.touched_right.assign(bp_.right_schema->arity(), false);
            bind_join_keys();
        }
        if (plan_.restriction)
            bind_restriction(*plan_.restriction);

        bp_.aggregating = !plan_.group_by.empty() || !plan_.aggregates.empty();
        for (const auto& g : plan_.group_by) {
            auto ref = g;
            resolve(ref);
            bp_.group_by.push_back(bp_.joined_index(ref));
        }
        for (const auto& agg : plan_.aggregates) {
            BoundAggregate b{agg.fn, std::nullopt, agg.name};
            if (agg.column) {
                auto ref = *agg.column;
                auto type = resolve(ref);
                if (agg.fn != AggFn::Count && !type.is_int())
                    throw Error(ErrorCode::TypeError,
                                fmt::format("{} needs an INT column, `{}` is {}", agg_name(agg.fn), ref.display(),
                                            type.to_string()));
                b.column = bp_.joined_index(ref);
            }
            bp_.aggregates.push_back(std::move(b));
        }
        for (const auto& c : plan_.computed) {
            if (bp_.aggregating)
                throw Error(ErrorCode::TypeError,
                            fmt::format("computed column `{}` is not allowed in an aggregating query", c.name));
            auto e = c.expr;
            annotate(e);
            if (e.type != ValueType::Int)
                throw Error(ErrorCode::TypeError,
                            fmt::format("select item `{}` at {} must be an INT expression", c.name, e.position));
            bp_.computed.push_back({c.name, std::move(e)});
        }
        bind_projection();
        bind_order_by();
        return std::move(bp_);
    }

private:
    Schema lookup_table(const std::string& name)
    {
        auto it = catalog_.find(to_lower(name));
        if (it == catalog_.end())
            throw Error(ErrorCode::UnknownTable, fmt::format("table `{}`", name));
        return it->second;
    }

    ColumnType resolve(ColumnRef& ref)
    {
        auto try_side = [&](Side side) -> std::optional<std::size_t> {
            const Schema& s = side == Side::Left ? bp_.left_schema : *bp_.right_schema;
            return s.find(ref.name);
        };
        if (ref.table) {
            Side side;
            if (iequals(*ref.table, bp_.left_table))
                side = Side::Left;
            else if (bp_.right_table && iequals(*ref.table, *bp_.right_table))
                side = Side::Right;
            else
                throw Error(ErrorCode::UnknownTable, fmt::format("table `{}` in `{}`", *ref.table, ref.display()));
            auto idx = try_side(side);
            if (!idx)
                throw Error(ErrorCode::UnknownColumn, fmt::format("\"{}\"", ref.display()));
            ref.side = side;
            ref.index = *idx;
        } else {
            auto l = try_side(Side::Left);
            std::optional<std::size_t> r;
            if (bp_.right_schema)
                r = try_side(Side::Right);
            if (l && r)
                throw Error(ErrorCode::AmbiguousColumn, fmt::format("\"{}\" exists in both tables", ref.name));
            if (!l && !r)
                throw Error(ErrorCode::UnknownColumn, fmt::format("\"{}\"", ref.name));
            ref.side = l ? Side::Left : Side::Right;
            ref.index = l ? *l : *r;
        }
        if (*ref.side == Side::Left) {
            bp_.touched_left[ref.index] = true;
            return bp_.left_schema.column(ref.index).type;
        }
        bp_.touched_right[ref.index] = true;
        return bp_.right_schema->column(ref.index).type;
    }

    void bind_join_keys()
    {
        auto l = plan_.join->left_key;
        auto r = plan_.join->right_key;
        auto lt = resolve(l);
        auto rt = resolve(r);
        if (*l.side == *r.side)
            throw Error(ErrorCode::TypeError, "join condition must compare a column of each table");
        if (*l.side == Side::Right) {
            std::swap(l, r);
            std::swap(lt, rt);
        }
        if (!lt.is_int() || !rt.is_int())
            throw Error(ErrorCode::TypeError, "join keys must be INT columns");
        bp_.join_keys = std::make_pair(l.index, r.index);
    }

    void annotate(Expr& e)
    {
        for (auto& c : e.children)
            annotate(c);
        auto type_error = [&](const std::string& what) {
            throw Error(ErrorCode::TypeError, fmt::format("at position {}: {} in `{}`", e.position, what, expr_to_sql(e)));
        };
        switch (e.kind) {
        case ExprKind::ColumnRef: {
            auto t = resolve(e.column);
            e.type = t.is_int() ? ValueType::Int : ValueType::Char;
            e.width = t.width;
            break;
        }
        case ExprKind::IntLiteral:
            e.type = ValueType::Int;
            e.width = kIntWidth;
            break;
        case ExprKind::StrLiteral:
            e.type = ValueType::Char;
            e.width = static_cast<std::uint32_t>(e.str_value.size());
            break;
        case ExprKind::Arith:
            if (e.children[0].type != ValueType::Int || e.children[1].type != ValueType::Int)
                type_error("arithmetic needs INT operands");
            e.type = ValueType::Int;
            e.width = kIntWidth;
            break;
        case ExprKind::Cmp: {
            auto a = e.children[0].type;
            auto b = e.children[1].type;
            bool ints = a == ValueType::Int && b == ValueType::Int;
            bool chars = a == ValueType::Char && b == ValueType::Char;
            if (!ints && !chars)
                type_error("comparison needs two INT or two CHAR operands");
            if (chars && e.cmp != CmpOp::Eq && e.cmp != CmpOp::Ne)
                type_error("CHAR values only support = and <>");
            e.type = ValueType::Bool;
            e.width = 0;
            break;
        }
        case ExprKind::Bool:
            for (const auto& c : e.children)
                if (c.type != ValueType::Bool)
                    type_error("boolean operator needs boolean operands");
            e.type = ValueType::Bool;
            e.width = 0;
            break;
        }
    }

    static void collect_sides(const Expr& e, std::set<Side>& sides)
    {
        if (e.kind == ExprKind::ColumnRef)
            sides.insert(*e.column.side);
        for (const auto& c : e.children)
            collect_sides(c, sides);
    }

    static void flatten_and(Expr e, std::vector<Expr>& out)
    {
        if (e.kind == ExprKind::Bool && e.boolean == BoolOp::And) {
            for (auto& c : e.children)
                flatten_and(std::move(c), out);
            return;
        }
        out.push_back(std::move(e));
    }

    static std::optional<Expr> conjunction(std::vector<Expr> terms, std::size_t pos)
    {
        if (terms.empty())
            return std::nullopt;
        if (terms.size() == 1)
            return std::move(terms.front());
        auto e = Expr::bool_node(BoolOp::And, std::move(terms), pos);
        e.type = ValueType::Bool;
        return e;
    }

    void bind_restriction(const Expr& restriction)
    {
        auto e = restriction;
        annotate(e);
        if (e.type != ValueType::Bool)
            throw Error(ErrorCode::TypeError, fmt::format("at position {}: WHERE clause must be boolean", e.position));
        if (!bp_.has_join()) {
            bp_.left_filter = std::move(e);
            return;
        }
        std::vector<Expr> conjuncts;
        auto pos = e.position;
        flatten_and(std::move(e), conjuncts);
        std::vector<Expr> left, right, both;
        for (auto& c : conjuncts) {
            std::set<Side> sides;
            collect_sides(c, sides);
            if (sides.size() == 2)
                both.push_back(std::move(c));
            else if (sides.count(Side::Right))
                right.push_back(std::move(c));
            else
                left.push_back(std::move(c));
        }
        bp_.left_filter = conjunction(std::move(left), pos);
        bp_.right_filter = conjunction(std::move(right), pos);
        bp_.joined_filter = conjunction(std::move(both), pos);
    }

    void bind_projection()
    {
        auto joined = bp_.joined_types();
        auto pre = bp_.pre_projection_types();
        std::vector<std::string> names;

        auto add_column = [&](ColumnRef ref, const std::string& name) {
            resolve(ref);
            auto ji = bp_.joined_index(ref);
            if (bp_.aggregating) {
                std::optional<std::size_t> gi;
                for (std::size_t g = 0; g < bp_.group_by.size() && !gi; ++g)
                    if (bp_.group_by[g] == ji)
                        gi = g;
                if (!gi)
                    throw Error(ErrorCode::TypeError,
                                fmt::format("column `{}` must appear in GROUP BY", ref.display()));
                bp_.projection.push_back(*gi);
            } else {
                bp_.projection.push_back(ji);
            }
            names.push_back(name);
        };

        if (plan_.star) {
            for (std::size_t i = 0; i < bp_.left_schema.arity(); ++i) {
                ColumnRef ref;
                ref.table = bp_.left_table;
                ref.name = bp_.left_schema.column(i).name;
                add_column(ref, ref.name);
            }
            if (bp_.right_schema)
                for (std::size_t i = 0; i < bp_.right_schema->arity(); ++i) {
                    ColumnRef ref;
                    ref.table = *bp_.right_table;
                    ref.name = bp_.right_schema->column(i).name;
                    add_column(ref, ref.name);
                }
        } else {
            for (const auto& item : plan_.projection) {
                switch (item.kind) {
                case OutputItem::Kind::Column:
                    add_column(item.column, item.name);
                    break;
                case OutputItem::Kind::Computed:
                    bp_.projection.push_back(joined.size() + item.index);
                    names.push_back(item.name);
                    break;
                case OutputItem::Kind::Aggregate:
                    bp_.projection.push_back(bp_.group_by.size() + item.index);
                    names.push_back(item.name);
                    break;
                }
            }
        }
        output_names_ = names;

        std::vector<Column> cols;
        for (std::size_t i = 0; i < bp_.projection.size(); ++i) {
            std::string name = names[i];
            for (int suffix = 2;; ++suffix) {
                bool clash = false;
                for (const auto& c : cols)
                    clash = clash || iequals(c.name, name);
                if (!clash)
                    break;
                name = fmt::format("{}_{}", names[i], suffix);
            }
            cols.push_back({name, pre[bp_.projection[i]]});
        }
        bp_.output_schema = Schema(std::move(cols));
    }

    void bind_order_by()
    {
        for (const auto& item : plan_.order_by) {
            std::optional<std::size_t> found;
            if (!item.column.table) {
                for (std::size_t i = 0; i < output_names_.size(); ++i) {
                    if (!iequals(output_names_[i], item.column.name))
                        continue;
                    if (found)
                        throw Error(ErrorCode::AmbiguousColumn,
                                    fmt::format("\"{}\" names several output columns", item.column.name));
                    found = i;
                }
            }
            if (!found) {
                auto ref = item.column;
                resolve(ref);
                auto ji = bp_.joined_index(ref);
                for (std::size_t i = 0; i < bp_.projection.size() && !found; ++i) {
                    auto p = bp_.projection[i];
                    bool same = bp_.aggregating ? (p < bp_.group_by.size() && bp_.group_by[p] == ji) : p == ji;
                    if (same)
                        found = i;
                }
                if (!found)
                    throw Error(ErrorCode::UnknownColumn,
                                fmt::format("\"{}\" is not an output column", item.column.display()));
            }
            if (!bp_.output_schema.column(*found).type.is_int())
                throw Error(ErrorCode::TypeError,
                            fmt::format("ORDER BY `{}`: CHAR columns have no ordering", item.column.display()));
            bp_.order_by.push_back({*found, item.descending});
        }
    }

    const QueryPlan& plan_;
    const Catalog& catalog_;
    BoundPlan bp_;
    std::vector<std::string> output_names_;
};

} // namespace

BoundPlan bind(const QueryPlan& plan, const Catalog& catalog)
{
    return Binder(plan, catalog).run();
}

} // namespace sqf
