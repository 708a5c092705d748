#include "sqf/frontend/parser.hpp"

#include "sqf/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <fmt/format.h>
#include <limits>
#include <vector>

namespace sqf {

namespace {

enum class Tok : std::uint8_t { Ident, Keyword, Int, String, Symbol, End };

struct Token {
    Tok type = Tok::End;
    std::string text; // keywords upper-cased, strings unescaped
    std::size_t pos = 0;
};

constexpr std::array kKeywords = {"SELECT", "FROM", "JOIN", "ON",    "WHERE", "GROUP", "BY",  "ORDER",
                                  "ASC",    "DESC", "AND",  "OR",    "NOT",   "AS",    "COUNT", "SUM",
                                  "MIN",    "MAX",  "AVG"};

bool is_keyword(std::string_view upper)
{
    for (auto k : kKeywords)
        if (upper == k)
            return true;
    return false;
}

std::string upper(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::vector<Token> tokenize(std::string_view text)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        auto c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (std::isalpha(c) || c == '_') {
            while (i < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
                ++i;
            auto word = text.substr(start, i - start);
            auto up = upper(word);
            if (is_keyword(up))
                out.push_back({Tok::Keyword, up, start});
            else
                out.push_back({Tok::Ident, std::string(word), start});
        } else if (std::isdigit(c)) {
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
                ++i;
            if (i < text.size() && (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_'))
                throw SyntaxError(i, "operator or delimiter", fmt::format("`{}`", text[i]));
            out.push_back({Tok::Int, std::string(text.substr(start, i - start)), start});
        } else if (c == '\'') {
            std::string value;
            ++i;
            bool closed = false;
            while (i < text.size()) {
                if (text[i] == '\'') {
                    if (i + 1 < text.size() && text[i + 1] == '\'') {
                        value += '\'';
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                auto u = static_cast<unsigned char>(text[i]);
                if (u < 0x20 || u > 0x7e)
                    throw SyntaxError(i, "printable ASCII in string literal", "invalid byte");
                value += text[i++];
            }
            if (!closed)
                throw SyntaxError(start, "terminated string literal", "end of input");
            out.push_back({Tok::String, std::move(value), start});
        } else {
            static constexpr std::array<std::string_view, 6> two = {"<>", "!=", "<=", ">=", "==", ""};
            std::string_view sym;
            for (auto t : two)
                if (!t.empty() && text.substr(i, 2) == t)
                    sym = t;
            if (sym == "==")
                throw SyntaxError(i, "comparison operator", "`==`");
            if (sym.empty()) {
                if (std::string_view("(),.;*+-/=<>").find(static_cast<char>(c)) == std::string_view::npos)
                    throw SyntaxError(i, "token", fmt::format("`{}`", static_cast<char>(c)));
                sym = text.substr(i, 1);
            }
            i += sym.size();
            out.push_back({Tok::Symbol, std::string(sym == "!=" ? "<>" : sym), start});
        }
    }
    out.push_back({Tok::End, "", text.size()});
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

    QueryPlan parse()
    {
        QueryPlan plan;
        expect_keyword("SELECT");
        parse_select_list(plan);
        expect_keyword("FROM");
        plan.source = expect_ident("table name");
        if (accept_keyword("JOIN")) {
            JoinClause join;
            join.table = expect_ident("table name");
            expect_keyword("ON");
            join.left_key = parse_column_ref();
            expect_symbol("=");
            join.right_key = parse_column_ref();
            plan.join = std::move(join);
        }
        if (accept_keyword("WHERE"))
            plan.restriction = parse_or();
        if (accept_keyword("GROUP")) {
            expect_keyword("BY");
            do {
                plan.group_by.push_back(parse_column_ref());
            } while (accept_symbol(","));
        }
        if (accept_keyword("ORDER")) {
            expect_keyword("BY");
            do {
                OrderItem item;
                item.column = parse_column_ref();
                if (accept_keyword("DESC"))
                    item.descending = true;
                else
                    accept_keyword("ASC");
                plan.order_by.push_back(std::move(item));
            } while (accept_symbol(","));
        }
        accept_symbol(";");
        if (peek().type != Tok::End)
            fail("end of query");
        return plan;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& advance() { return tokens_[pos_++]; }

    [[noreturn]] void fail(std::string expected) const
    {
        const auto& t = peek();
        std::string found = t.type == Tok::End ? std::string("end of input") : fmt::format("`{}`", t.text);
        throw SyntaxError(t.pos, std::move(expected), found);
    }

    bool accept_keyword(std::string_view kw)
    {
        if (peek().type == Tok::Keyword && peek().text == kw) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_keyword(std::string_view kw)
    {
        if (!accept_keyword(kw))
            fail(std::string(kw));
    }

    bool accept_symbol(std::string_view sym)
    {
        if (peek().type == Tok::Symbol && peek().text == sym) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_symbol(std::string_view sym)
    {
        if (!accept_symbol(sym))
            fail(fmt::format("`{}`", sym));
    }

    std::string expect_ident(std::string_view what)
    {
        if (peek().type != Tok::Ident)
            fail(std::string(what));
        return advance().text;
    }

    ColumnRef parse_column_ref()
    {
        ColumnRef ref;
        ref.name = expect_ident("column name");
        if (accept_symbol(".")) {
            ref.table = std::move(ref.name);
            ref.name = expect_ident("column name");
        }
        return ref;
    }

    std::optional<AggFn> peek_agg() const
    {
        if (peek().type != Tok::Keyword)
            return std::nullopt;
        const auto& t = peek().text;
        if (t == "COUNT") return AggFn::Count;
        if (t == "SUM") return AggFn::Sum;
        if (t == "MIN") return AggFn::Min;
        if (t == "MAX") return AggFn::Max;
        if (t == "AVG") return AggFn::Avg;
        return std::nullopt;
    }

    void parse_select_list(QueryPlan& plan)
    {
        if (accept_symbol("*")) {
            plan.star = true;
            return;
        }
        std::size_t ordinal = 0;
        do {
            ++ordinal;
            if (auto fn = peek_agg()) {
                advance();
                expect_symbol("(");
                AggregateItem agg;
                agg.fn = *fn;
                if (*fn == AggFn::Count && accept_symbol("*")) {
                    agg.name = "count_star";
                } else {
                    agg.column = parse_column_ref();
                    agg.name = fmt::format("{}_{}", to_lower(agg_name(*fn)), agg.column->name);
                }
                expect_symbol(")");
                if (accept_keyword("AS"))
                    agg.name = expect_ident("alias");
                OutputItem item;
                item.kind = OutputItem::Kind::Aggregate;
                item.index = plan.aggregates.size();
                item.name = agg.name;
                plan.aggregates.push_back(std::move(agg));
                plan.projection.push_back(std::move(item));
                continue;
            }
            auto expr = parse_or();
            std::optional<std::string> alias;
            if (accept_keyword("AS"))
                alias = expect_ident("alias");
            OutputItem item;
            if (expr.kind == ExprKind::ColumnRef) {
                item.kind = OutputItem::Kind::Column;
                item.name = alias.value_or(expr.column.name);
                item.column = std::move(expr.column);
            } else {
                item.kind = OutputItem::Kind::Computed;
                item.index = plan.computed.size();
                item.name = alias.value_or(fmt::format("expr{}", ordinal));
                plan.computed.push_back({item.name, std::move(expr)});
            }
            plan.projection.push_back(std::move(item));
        } while (accept_symbol(","));
    }

    Expr parse_or()
    {
        auto pos = peek().pos;
        std::vector<Expr> terms;
        terms.push_back(parse_and());
        while (accept_keyword("OR"))
            terms.push_back(parse_and());
        if (terms.size() == 1)
            return std::move(terms.front());
        return Expr::bool_node(BoolOp::Or, std::move(terms), pos);
    }

    Expr parse_and()
    {
        auto pos = peek().pos;
        std::vector<Expr> terms;
        terms.push_back(parse_not());
        while (accept_keyword("AND"))
            terms.push_back(parse_not());
        if (terms.size() == 1)
            return std::move(terms.front());
        return Expr::bool_node(BoolOp::And, std::move(terms), pos);
    }

    Expr parse_not()
    {
        auto pos = peek().pos;
        if (accept_keyword("NOT")) {
            std::vector<Expr> child;
            child.push_back(parse_not());
            return Expr::bool_node(BoolOp::Not, std::move(child), pos);
        }
        return parse_cmp();
    }

    Expr parse_cmp()
    {
        auto lhs = parse_add();
        if (peek().type != Tok::Symbol)
            return lhs;
        static constexpr std::array<std::pair<std::string_view, CmpOp>, 6> ops = {{
            {"=", CmpOp::Eq}, {"<>", CmpOp::Ne}, {"<", CmpOp::Lt},
            {"<=", CmpOp::Le}, {">", CmpOp::Gt}, {">=", CmpOp::Ge},
        }};
        for (auto [sym, op] : ops) {
            if (peek().text == sym) {
                auto pos = advance().pos;
                auto rhs = parse_add();
                return Expr::cmp_node(op, std::move(lhs), std::move(rhs), pos);
            }
        }
        return lhs;
    }

    Expr parse_add()
    {
        auto lhs = parse_mul();
        while (peek().type == Tok::Symbol && (peek().text == "+" || peek().text == "-")) {
            auto& t = advance();
            auto op = t.text == "+" ? ArithOp::Add : ArithOp::Sub;
            auto rhs = parse_mul();
            lhs = Expr::arith_node(op, std::move(lhs), std::move(rhs), t.pos);
        }
        return lhs;
    }

    Expr parse_mul()
    {
        auto lhs = parse_unary();
        while (peek().type == Tok::Symbol && (peek().text == "*" || peek().text == "/")) {
            auto& t = advance();
            auto op = t.text == "*" ? ArithOp::Mul : ArithOp::Div;
            auto rhs = parse_unary();
            lhs = Expr::arith_node(op, std::move(lhs), std::move(rhs), t.pos);
        }
        return lhs;
    }

    Expr parse_unary()
    {
        if (peek().type == Tok::Symbol && peek().text == "-") {
            auto pos = advance().pos;
            if (peek().type == Tok::Int)
                return parse_int(true, pos);
            auto operand = parse_unary();
            return Expr::arith_node(ArithOp::Sub, Expr::int_literal(0, pos), std::move(operand), pos);
        }
        return parse_primary();
    }

    Expr parse_int(bool negative, std::size_t pos)
    {
        const auto& t = peek();
        std::uint64_t magnitude = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), magnitude);
        constexpr std::uint64_t limit = std::uint64_t{1} << 63;
        if (ec != std::errc{} || magnitude > limit || (!negative && magnitude == limit))
            fail("integer literal within the 64-bit range");
        advance();
        std::int64_t v = negative ? static_cast<std::int64_t>(0 - magnitude) : static_cast<std::int64_t>(magnitude);
        return Expr::int_literal(v, pos);
    }

    Expr parse_primary()
    {
        const auto& t = peek();
        switch (t.type) {
        case Tok::Int:
            return parse_int(false, t.pos);
        case Tok::String: {
            auto pos = t.pos;
            return Expr::str_literal(advance().text, pos);
        }
        case Tok::Ident: {
            auto pos = t.pos;
            return Expr::column_ref(parse_column_ref(), pos);
        }
        case Tok::Symbol:
            if (t.text == "(") {
                advance();
                auto inner = parse_or();
                expect_symbol(")");
                return inner;
            }
            break;
        default:
            break;
        }
        fail("expression");
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

} // namespace

QueryPlan parse_query(std::string_view text)
{
    return Parser(text).parse();
}

std::string pretty_print(const QueryPlan& plan)
{
    std::string out = "SELECT ";
    if (plan.star) {
        out += "*";
    } else {
        for (std::size_t i = 0; i < plan.projection.size(); ++i) {
            if (i)
                out += ", ";
            const auto& item = plan.projection[i];
            switch (item.kind) {
            case OutputItem::Kind::Column:
                out += item.column.display();
                if (item.name != item.column.name)
                    out += " AS " + item.name;
                break;
            case OutputItem::Kind::Computed:
                out += expr_to_sql(plan.computed.at(item.index).expr) + " AS " + item.name;
                break;
            case OutputItem::Kind::Aggregate: {
                const auto& agg = plan.aggregates.at(item.index);
                out += fmt::format("{}({}) AS {}", agg_name(agg.fn), agg.column ? agg.column->display() : "*",
                                   item.name);
                break;
            }
            }
        }
    }
    out += " FROM " + plan.source;
    if (plan.join)
        out += fmt::format(" JOIN {} ON {} = {}", plan.join->table, plan.join->left_key.display(),
                           plan.join->right_key.display());
    if (plan.restriction)
        out += " WHERE " + expr_to_sql(*plan.restriction);
    if (!plan.group_by.empty()) {
        out += " GROUP BY ";
        for (std::size_t i = 0; i < plan.group_by.size(); ++i)
            out += (i ? ", " : "") + plan.group_by[i].display();
    }
    if (!plan.order_by.empty()) {
        out += " ORDER BY ";
        for (std::size_t i = 0; i < plan.order_by.size(); ++i)
            out += fmt::format("{}{}{}", i ? ", " : "", plan.order_by[i].column.display(),
                               plan.order_by[i].descending ? " DESC" : " ASC");
    }
    return out;
}

} // namespace sqf
