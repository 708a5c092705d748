#include "support/testgen.hpp"

#include "sqf/error.hpp"
#include "sqf/frontend/parser.hpp"

#include <doctest.h>

#include <cctype>

using namespace sqf;
using namespace sqf::testing;

namespace {

Catalog small_catalog()
{
    Catalog c;
    c["t"] = Schema({{"a", ColumnType::integer()}, {"b", ColumnType::integer()}, {"s", ColumnType::character(4)}});
    c["u"] = Schema({{"k", ColumnType::integer()}, {"b", ColumnType::integer()}, {"name", ColumnType::character(8)}});
    return c;
}

ErrorCode bind_error(const std::string& sql)
{
    try {
        sqf::bind(parse_query(sql), small_catalog());
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error for: " << sql);
    return ErrorCode::SyntaxError;
}

Expr col(const std::string& name) { return Expr::column_ref(ColumnRef{std::nullopt, name, std::nullopt, 0}); }

} // namespace

TEST_CASE("parse: single column")
{
    auto p = parse_query("SELECT a FROM t");
    CHECK(p.source == "t");
    REQUIRE(p.projection.size() == 1);
    CHECK(p.projection[0].kind == OutputItem::Kind::Column);
    CHECK(p.projection[0].column.name == "a");
    CHECK_FALSE(p.join.has_value());
    CHECK_FALSE(p.restriction.has_value());
}

TEST_CASE("parse: count with arithmetic predicate")
{
    auto p = parse_query("SELECT COUNT(*) FROM t WHERE a > 3 + b");
    REQUIRE(p.restriction.has_value());
    auto want = Expr::cmp_node(CmpOp::Gt, col("a"), Expr::arith_node(ArithOp::Add, Expr::int_literal(3), col("b")));
    CHECK(*p.restriction == want);
    REQUIRE(p.aggregates.size() == 1);
    CHECK(p.aggregates[0].fn == AggFn::Count);
    CHECK_FALSE(p.aggregates[0].column.has_value());
}

TEST_CASE("parse: truncated statement fails at end of input")
{
    std::string text = "SELECT * FROM";
    try {
        parse_query(text);
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.code() == ErrorCode::SyntaxError);
        CHECK(e.position() == text.size());
    }
}

TEST_CASE("parse: keywords are case-insensitive and a trailing semicolon is allowed")
{
    auto a = parse_query("select a from t where a = 1 order by a desc;");
    auto b = parse_query("SELECT a FROM t WHERE a = 1 ORDER BY a DESC");
    a.source = b.source;
    CHECK(pretty_print(a) == pretty_print(b));
    CHECK(a.order_by.at(0).descending);
}

TEST_CASE("parse: arithmetic precedence and parentheses")
{
    auto p = parse_query("SELECT a FROM t WHERE a * 2 + 1 = (a + 1) * 2");
    REQUIRE(p.restriction.has_value());
    const Expr& lhs = p.restriction->children.at(0);
    CHECK(lhs.arith == ArithOp::Add);
    CHECK(lhs.children.at(0).arith == ArithOp::Mul);
    const Expr& rhs = p.restriction->children.at(1);
    CHECK(rhs.arith == ArithOp::Mul);
}

TEST_CASE("bind: unknown column")
{
    try {
        sqf::bind(parse_query("SELECT c FROM t"), small_catalog());
        FAIL("expected UnknownColumn");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownColumn);
        CHECK(std::string(e.what()).find("c") != std::string::npos);
    }
}

TEST_CASE("bind: arithmetic on CHAR is a type error")
{
    CHECK(bind_error("SELECT a + s AS x FROM t") == ErrorCode::TypeError);
    CHECK(bind_error("SELECT a FROM t WHERE s > 3") == ErrorCode::TypeError);
    CHECK(bind_error("SELECT SUM(s) FROM t") == ErrorCode::TypeError);
}

TEST_CASE("bind: other negative cases")
{
    CHECK(bind_error("SELECT a FROM nope") == ErrorCode::UnknownTable);
    CHECK(bind_error("SELECT b FROM t JOIN u ON t.a = u.k") == ErrorCode::AmbiguousColumn);
    CHECK(bind_error("SELECT a FROM t JOIN u ON t.s = u.name") == ErrorCode::TypeError);
}

TEST_CASE("bind: two-table join resolves keys per side")
{
    auto bp = sqf::bind(parse_query("SELECT t.b, name FROM t JOIN u ON t.a = u.k"), small_catalog());
    REQUIRE(bp.has_join());
    REQUIRE(bp.join_keys.has_value());
    CHECK(bp.join_keys->first == 0);
    CHECK(bp.join_keys->second == 0);
    CHECK(bp.joined_arity() == 6);
    CHECK(bp.output_schema.arity() == 2);

    // Keys written the other way round are normalised to (left, right).
    auto swapped = sqf::bind(parse_query("SELECT t.b FROM t JOIN u ON u.k = t.a"), small_catalog());
    CHECK(swapped.join_keys == bp.join_keys);
}

TEST_CASE("bind: star expands left then right")
{
    auto bp = sqf::bind(parse_query("SELECT * FROM t JOIN u ON t.a = u.k"), small_catalog());
    CHECK(bp.output_schema.arity() == 6);
    CHECK(bp.output_schema.column(0).type == ColumnType::integer());
    CHECK(bp.output_schema.column(5).type == ColumnType::character(8));
}

TEST_CASE("property: pretty_print round-trips random queries")
{
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        Rng rng(seed);
        auto ds = random_dataset(rng, {.max_rows = 5}, {.max_rows = 5});
        std::string sql = random_query(rng, ds.tables, {});
        auto p = parse_query(sql);
        auto q = parse_query(pretty_print(p));
        CHECK_MESSAGE(p == q, sql);
        CHECK(pretty_print(q) == pretty_print(p));
    }
}

TEST_CASE("property: bind is idempotent on the unbound source plan")
{
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(seed);
        auto ds = random_dataset(rng, {.max_rows = 5}, {.max_rows = 5});
        std::string sql = random_query(rng, ds.tables, {});
        auto bp = sqf::bind(parse_query(sql), ds.catalog);
        CHECK_MESSAGE(sqf::bind(bp.source_plan, ds.catalog) == bp, sql);
    }
}

TEST_CASE("property: syntax error positions lie on token boundaries")
{
    auto boundary = [](const std::string& s, std::size_t pos) {
        if (pos == 0 || pos >= s.size())
            return true;
        auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
        return !(word(s[pos - 1]) && word(s[pos])) || std::isspace(static_cast<unsigned char>(s[pos - 1]));
    };
    std::size_t failures = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        Rng rng(seed);
        auto ds = random_dataset(rng, {.max_rows = 5}, {.max_rows = 5});
        std::string sql = random_query(rng, ds.tables, {});
        // Truncate, or splice in a stray symbol.
        std::string broken = sql;
        if (rng.chance(0.5)) {
            broken.resize(rng.below(sql.size()));
        } else {
            static const std::vector<std::string> junk = {",", ")", "(", "=", "FROM", "@", "'"};
            auto at = rng.below(sql.size() + 1);
            broken.insert(at, " " + rng.pick(junk) + " ");
        }
        try {
            parse_query(broken);
        } catch (const SyntaxError& e) {
            ++failures;
            CHECK(e.position() <= broken.size());
            CHECK_MESSAGE(boundary(broken, e.position()), broken << " @" << e.position());
        }
    }
    CHECK(failures > 200);
}
