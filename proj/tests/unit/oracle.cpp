#include "support/testgen.hpp"

#include "sqf/frontend/parser.hpp"
#include "sqf/oracle/oracle.hpp"
#include "sqf/relcore/csv.hpp"

#include <doctest.h>

#include <algorithm>

using namespace sqf;
using namespace sqf::testing;

namespace {

Table run(const std::string& sql, const std::string& csv)
{
    auto ds = dataset_of({{"t", parse_csv(csv).table}});
    return reference_execute(sqf::bind(parse_query(sql), ds.catalog), ds.tables);
}

std::int64_t int_at(const Table& t, std::size_t r, std::size_t c) { return std::get<std::int64_t>(t.cell(r, c)); }

std::vector<std::vector<Value>> sorted_rows(const Table& t)
{
    std::vector<std::vector<Value>> out;
    for (auto& r : t.to_rows())
        out.emplace_back(r.begin(), r.end());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_CASE("oracle: examples")
{
    auto count = run("SELECT COUNT(*) FROM t", "a:INT\n1\n2\n3\n4\n5\n6\n7\n");
    REQUIRE(count.rows() == 1);
    CHECK(int_at(count, 0, 0) == 7);

    auto grouped = run("SELECT a, SUM(b) FROM t GROUP BY a", "a:INT,b:INT\n1,10\n1,20\n2,30\n");
    REQUIRE(grouped.rows() == 2);
    CHECK(int_at(grouped, 0, 0) == 1);
    CHECK(int_at(grouped, 0, 1) == 30);
    CHECK(int_at(grouped, 1, 0) == 2);
    CHECK(int_at(grouped, 1, 1) == 30);

    auto ordered = run("SELECT a FROM t ORDER BY a DESC", "a:INT\n1\n3\n2\n");
    REQUIRE(ordered.rows() == 3);
    CHECK(int_at(ordered, 0, 0) == 3);
    CHECK(int_at(ordered, 1, 0) == 2);
    CHECK(int_at(ordered, 2, 0) == 1);
}

TEST_CASE("oracle: aggregate conventions")
{
    // AVG truncates toward zero.
    auto avg = run("SELECT AVG(a) FROM t", "a:INT\n-3\n-4\n");
    CHECK(int_at(avg, 0, 0) == -3);
    // A global aggregate over no rows yields one row of zeros.
    auto empty = run("SELECT COUNT(*), SUM(a), MIN(a) FROM t WHERE a > 100", "a:INT\n1\n");
    REQUIRE(empty.rows() == 1);
    CHECK(int_at(empty, 0, 0) == 0);
    CHECK(int_at(empty, 0, 1) == 0);
    // Grouped aggregation over no rows yields nothing.
    CHECK(run("SELECT a, COUNT(*) FROM t WHERE a > 100 GROUP BY a", "a:INT\n1\n").rows() == 0);
    // SUM overflows only when the exact total does not fit.
    CHECK(int_at(run("SELECT SUM(a) FROM t", "a:INT\n9223372036854775807\n1\n-1\n"), 0, 0) ==
          9223372036854775807LL);
    CHECK_THROWS_AS(run("SELECT SUM(a) FROM t", "a:INT\n9223372036854775807\n1\n"), ArithmeticError);
}

TEST_CASE("oracle: CHAR comparison and join")
{
    auto ds = dataset_of({{"t", parse_csv("k:INT,s:CHAR(4)\n1,ab\n2,b\n3,abc\n").table},
                          {"u", parse_csv("k:INT,v:INT\n1,10\n1,11\n3,30\n4,40\n").table}});
    auto bp = sqf::bind(parse_query("SELECT s, v FROM t JOIN u ON t.k = u.k WHERE s <> 'b'"), ds.catalog);
    auto r = reference_execute(bp, ds.tables);
    auto rows = sorted_rows(r);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][0] == Value{std::string("ab")});
    CHECK(rows[2][0] == Value{std::string("abc")});
    CHECK(rows[2][1] == Value{std::int64_t{30}});
}

TEST_CASE("property: oracle is invariant under input permutation")
{
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(seed);
        auto ds = random_dataset(rng, {.max_rows = 60}, {.max_rows = 60});
        auto bp = sqf::bind(parse_query(random_query(rng, ds.tables, {})), ds.catalog);
        auto base = run_oracle(bp, ds.tables);

        auto shuffled = ds.tables;
        for (auto& [name, t] : shuffled) {
            auto rows = t.to_rows();
            for (std::size_t i = rows.size(); i > 1; --i)
                std::swap(rows[i - 1], rows[rng.below(i)]);
            t = Table::from_rows(t.schema(), rows);
        }
        auto other = run_oracle(bp, shuffled);
        if (base.error || other.error) {
            // Which row faults first may move; the fault must not vanish.
            CHECK(base.error.has_value() == other.error.has_value());
            continue;
        }
        std::string why;
        CHECK_MESSAGE(agrees(bp, other, base, &why), why);
    }
}
