#include "support/testgen.hpp"

#include "sqf/cli/commands.hpp"
#include "sqf/cli/suite.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace sqf;
using namespace sqf::testing;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const bool logging_ready = (init_logging(), true);

fs::path fixtures() { return fs::path(source_dir()) / "tests" / "fixtures"; }
fs::path data(const std::string& f) { return fs::path(source_dir()) / "data" / f; }

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
    {
        path = fs::temp_directory_path() / ("sqf_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunOptions options(const std::string& query)
{
    RunOptions o;
    o.query = fixtures() / "queries" / query;
    o.tables = fixtures() / "tables";
    o.library = data("library.default.json");
    o.device = data("device.default.json");
    return o;
}

// Report text without the trailing wall-clock section.
std::string without_timing(const std::string& report)
{
    auto j = ordered_json::parse(report);
    j.erase("timing");
    return write_report(j);
}

} // namespace

TEST_CASE("run: oracle-checked success")
{
    TempDir tmp("run");
    auto o = options("join.sql");
    o.oracle = true;
    o.out = tmp.path / "r.json";
    std::ostringstream out, err;
    CHECK(cmd_run(o, out, err) == 0);
    CHECK(err.str().empty());
    auto j = ordered_json::parse(slurp(*o.out));
    CHECK(j["oracle_checked"] == true);
    CHECK(j["result"]["rows"] == 4);
    CHECK(j["candidates"].size() >= 3);
}

TEST_CASE("run: golden report")
{
    auto o = options("join.sql");
    o.seed = 7;
    o.oracle = true;
    std::ostringstream out, err;
    REQUIRE(cmd_run(o, out, err) == 0);
    auto got = without_timing(out.str());
    auto golden = fixtures().parent_path() / "golden" / "run_join.json";
    if (std::getenv("SQF_UPDATE_GOLDEN")) {
        std::ofstream(golden) << got;
        MESSAGE("golden file rewritten");
    }
    CHECK(got == slurp(golden));
}

TEST_CASE("run: missing table names the path")
{
    auto o = options("missing.sql");
    o.out = fs::temp_directory_path() / "sqf_never_written.json";
    std::ostringstream out, err;
    CHECK(cmd_run(o, out, err) == 1);
    CHECK(err.str().find((fixtures() / "tables" / "missing_table.csv").string()) != std::string::npos);
    auto text = err.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
}

TEST_CASE("run: forced merge join without SORT")
{
    TempDir tmp("nosort");
    auto lib = ordered_json::parse(slurp(data("library.default.json")));
    ordered_json kept = ordered_json::array();
    for (auto& e : lib)
        if (!(e.is_object() && e["kind"] == "SORT"))
            kept.push_back(e);
    std::ofstream(tmp.path / "lib.json") << kept.dump();

    auto o = options("join.sql");
    o.library = tmp.path / "lib.json";
    o.join = "merge";
    std::ostringstream out, err;
    CHECK(cmd_run(o, out, err) == 1);
    CHECK(err.str().find("NoCandidates") != std::string::npos);
}

TEST_CASE("run: arithmetic faults exit 1 with the row")
{
    auto o = options("divzero.sql");
    std::ostringstream out, err;
    CHECK(cmd_run(o, out, err) == 1);
    CHECK(err.str().find("DivisionByZero") != std::string::npos);
}

TEST_CASE("run: a tampered result is reported as an oracle mismatch")
{
    TempDir tmp("tamper");
    auto o = options("filter.sql");
    o.oracle = true;
    o.out = tmp.path / "r.json";
    o.tamper = [](Table& t) {
        auto rows = t.to_rows();
        REQUIRE(rows.size() > 1);
        rows[1][1] = Value{std::int64_t{-1}};
        t = Table::from_rows(t.schema(), rows);
    };
    std::ostringstream out, err;
    CHECK(cmd_run(o, out, err) == 2);
    auto j = ordered_json::parse(slurp(*o.out));
    CHECK(j["oracle_checked"] == false);
    REQUIRE(j.contains("oracle_mismatch"));
    CHECK(j["oracle_mismatch"].contains("first_differing_index"));
    CHECK(j["oracle_mismatch"]["engine_row"].is_array());
}

TEST_CASE("run: fixed seed gives byte-identical reports")
{
    TempDir tmp("det");
    std::vector<std::string> texts;
    for (int i = 0; i < 2; ++i) {
        auto o = options("join.sql");
        o.seed = 7;
        o.join = "codesign";
        o.out = tmp.path / ("r" + std::to_string(i) + ".json");
        std::ostringstream out, err;
        REQUIRE(cmd_run(o, out, err) == 0);
        texts.push_back(without_timing(slurp(*o.out)));
    }
    CHECK(texts[0] == texts[1]);
    CHECK(texts[0].find("\"timing\"") == std::string::npos);
}

TEST_CASE("run: report layout")
{
    auto o = options("filter.sql");
    std::ostringstream out, err;
    REQUIRE(cmd_run(o, out, err) == 0);
    auto j = ordered_json::parse(out.str());
    std::vector<std::string> keys;
    for (auto& [k, v] : j.items())
        keys.push_back(k);
    std::vector<std::string> want = {"query",     "seed",      "strategy",       "chosen",
                                     "candidates", "placement", "reconfig",       "execution",
                                     "result",    "oracle_checked", "warnings", "timing"};
    CHECK(keys == want);
    CHECK(j["result"]["order_specified"] == false);
    CHECK(j["warnings"].size() == 1);

    // Floats carry nine significant digits.
    ordered_json f;
    f["x"] = 1.0 / 3.0;
    f["y"] = 2.5;
    CHECK(write_report(f) == "{\n  \"x\": 0.333333333,\n  \"y\": 2.5\n}\n");
}

TEST_CASE("explain: candidate table")
{
    auto dev = load_device_profile(data("device.default.json"));
    FabricState fabric(dev);
    // Occupy part of the fabric so explain has state to leave alone.
    auto lib = full_library();
    std::vector<ModuleInstance> busy = {instantiate(lib, ModuleKind::HashJoin, {})};
    fabric.reconfigure(fabric.allocate(busy));
    auto before = fabric.fingerprint();

    std::ostringstream table;
    auto r = explain_query(options("join.sql"), fabric, table);
    CHECK(r.exit_code == 0);
    CHECK(fabric.fingerprint() == before);
    std::istringstream lines(table.str());
    std::string line;
    int candidates = 0, marked = 0;
    while (std::getline(lines, line)) {
        if (line.find("/") != std::string::npos)
            ++candidates;
        if (!line.empty() && line[0] == '*')
            ++marked;
    }
    CHECK(candidates >= 3);
    CHECK(marked == 1);

    std::ostringstream star;
    auto s = explain_query(options("star.sql"), fabric, star);
    REQUIRE(s.exit_code == 0);
    REQUIRE(s.report["candidates"].size() == 1);
    CHECK(s.report["candidates"][0]["stages"][0].get<std::string>().rfind("PASSTHROUGH", 0) == 0);
}

TEST_CASE("explain: syntax errors report the position")
{
    std::ostringstream out, err;
    CHECK(cmd_explain(options("broken.sql"), out, err) == 1);
    CHECK(err.str().find("SyntaxError") != std::string::npos);
    CHECK(err.str().find("position") != std::string::npos);
}

TEST_CASE("explain: unknown strategy names are rejected")
{
    auto o = options("join.sql");
    o.layout = "diagonal";
    std::ostringstream out, err;
    CHECK(cmd_explain(o, out, err) == 1);
}

namespace {

// Small tables with the suite's schema, so the bench runs quickly.
fs::path small_suite_tables(const fs::path& dir)
{
    auto m = load_manifest(fs::path(source_dir()) / "suite");
    auto gen = m.generator;
    gen.sales_rows = 3000;
    gen.customer_rows = 200;
    gen.product_rows = 100;
    write_suite_tables(gen, dir);
    return dir;
}

} // namespace

TEST_CASE("bench: shipped suite under every strategy")
{
    TempDir tmp("bench");
    BenchOptions b;
    b.suite = fs::path(source_dir()) / "suite";
    b.tables = small_suite_tables(tmp.path);
    b.jobs = 4;
    b.out = tmp.path / "bench.json";
    std::ostringstream out, err;
    CHECK(cmd_bench(b, out, err) == 0);
    auto j = ordered_json::parse(slurp(*b.out));
    CHECK(j["rows"].size() == 12 * std::size(kBenchStrategies));
    CHECK(j["summary"]["failures"] == 0);
    // All strategies agree on every pair.
    std::map<std::string, std::string> checksum;
    for (auto& row : j["rows"]) {
        auto q = row["query"].get<std::string>();
        auto c = row["checksum"].get<std::string>();
        auto [it, fresh] = checksum.emplace(q, c);
        CHECK_MESSAGE(it->second == c, q);
    }
}

TEST_CASE("bench: one failing pair does not stop the others")
{
    TempDir tmp("benchfail");
    auto tables = small_suite_tables(tmp.path / "tables");
    fs::create_directories(tmp.path / "queries");
    std::ofstream(tmp.path / "queries" / "good.sql") << "SELECT id FROM sales WHERE qty > 45\n";
    std::ofstream(tmp.path / "queries" / "bad.sql") << "SELECT nope FROM sales\n";
    ordered_json m;
    m["generator"] = {{"seed", 1}, {"sales_rows", 10}, {"customer_rows", 10}, {"product_rows", 10}};
    m["tables_dir"] = "tables";
    m["library"] = data("library.default.json").string();
    m["device"] = data("device.default.json").string();
    m["baseline"] = data("baseline.default.json").string();
    m["overhead_fraction_max"] = 0.05;
    m["queries"] = ordered_json::array({{{"id", "good"}, {"query", "queries/good.sql"}},
                                        {{"id", "bad"}, {"query", "queries/bad.sql"}}});
    std::ofstream(tmp.path / "manifest.json") << m.dump(2);

    BenchOptions b;
    b.suite = tmp.path;
    std::ostringstream out, err;
    CHECK(cmd_bench(b, out, err) == 0);
    auto j = ordered_json::parse(out.str());
    CHECK(j["summary"]["runs"] == 2 * std::size(kBenchStrategies));
    CHECK(j["summary"]["failures"] == std::size(kBenchStrategies));
    for (auto& row : j["rows"])
        CHECK((row["status"] == "ok") == (row["query"] == "good"));
    CHECK(err.str().find("UnknownColumn") != std::string::npos);
}
