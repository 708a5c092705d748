#include "sqf/cli/commands.hpp"

#include "sqf/cli/suite.hpp"
#include "sqf/error.hpp"
#include "sqf/frontend/parser.hpp"
#include "sqf/oracle/oracle.hpp"
#include "sqf/relcore/csv.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <ostream>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>
#include <sstream>
#include <thread>

namespace sqf {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t)
{
    return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::FileNotFound, fmt::format("cannot open {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::FileNotFound, fmt::format("cannot write {}", path.string()));
    out << text;
}

/// Reads DIR/<name>.csv, falling back to the lower-cased name.
Table load_table(const fs::path& dir, const std::string& name)
{
    fs::path path = dir / (name + ".csv");
    if (!fs::exists(path) && fs::exists(dir / (to_lower(name) + ".csv")))
        path = dir / (to_lower(name) + ".csv");
    return load_csv(path).table;
}

Json row_json(const Row& row)
{
    Json out = Json::array();
    for (const auto& v : row) {
        if (std::holds_alternative<std::int64_t>(v))
            out.push_back(std::get<std::int64_t>(v));
        else
            out.push_back(std::get<std::string>(v));
    }
    return out;
}

Json estimate_json(const CostEstimate& e)
{
    Json j;
    j["stream_seconds"] = e.stream_seconds;
    j["blocking_seconds"] = e.blocking_seconds;
    j["reconfig_seconds"] = e.reconfig_seconds;
    j["host_seconds"] = e.host_seconds;
    j["total_seconds"] = e.total_seconds;
    j["energy_joules"] = e.energy_joules;
    j["output_tuples"] = e.output_tuples;
    return j;
}

Json candidates_json(const std::vector<CandidatePipeline>& cands, const Selection& sel, const FabricState* fabric)
{
    Json out = Json::array();
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto& c = cands[i];
        Json j;
        j["ordinal"] = c.ordinal;
        j["tag"] = c.tag();
        j["chosen"] = i == sel.index;
        j["slots"] = c.total_slots();
        Json stages = Json::array();
        for (const auto& s : c.stages)
            stages.push_back(fmt::format("{}:{}", s.module.identity(), stage_role_name(s.role)));
        if (c.host_stage) {
            std::string post = "HASH_JOIN_HOST";
            for (auto r : c.host_stage->post)
                post += fmt::format("+{}", stage_role_name(r));
            stages.push_back(post);
        }
        j["stages"] = std::move(stages);
        if (c.build_side)
            j["build_side"] = *c.build_side == Side::Left ? "left" : "right";
        if (fabric)
            j["fits_now"] = fabric->max_contiguous_free() >= c.total_slots();
        j["estimate"] = estimate_json(sel.estimates[i]);
        out.push_back(std::move(j));
    }
    return out;
}

Json strategy_json(const RunOptions& opts)
{
    Json j;
    j["layout"] = opts.layout;
    j["join"] = opts.join;
    return j;
}

struct Planned {
    std::shared_ptr<QueryInputs> owner;
    QueryInputs& in;
    std::vector<std::string> warnings;
    std::vector<CandidatePipeline> candidates;
    Selection selection;
};

Planned plan(const RunOptions& opts)
{
    auto owner = std::make_shared<QueryInputs>(load_inputs(opts));
    Planned p{owner, *owner, {}, {}, {}};
    auto popts = planner_options(opts, p.in.bp, p.warnings);
    p.candidates = enumerate_pipelines(p.in.bp, p.in.library, p.in.device, p.in.stats, popts);
    p.selection = select_best(p.in.bp, p.candidates, p.in.stats, p.in.device);
    if (p.in.bp.order_by.empty())
        p.warnings.push_back("no ORDER BY: row order of the result is unspecified");
    spdlog::info("{} candidates, chose {}", p.candidates.size(), p.candidates[p.selection.index].tag());
    return p;
}

RunOutcome failure(const std::exception& e, Json report = Json::object())
{
    RunOutcome r;
    r.exit_code = 1;
    r.report = std::move(report);
    r.diagnostic = e.what();
    auto nl = r.diagnostic.find('\n');
    if (nl != std::string::npos)
        r.diagnostic.resize(nl);
    return r;
}

} // namespace

QueryInputs load_inputs(const RunOptions& opts)
{
    QueryInputs in;
    in.query_text = read_text(opts.query);
    QueryPlan qp = parse_query(in.query_text);

    std::vector<std::string> names = {qp.source};
    if (qp.join)
        names.push_back(qp.join->table);
    Catalog catalog;
    for (const auto& name : names) {
        auto key = to_lower(name);
        if (in.tables.count(key))
            continue;
        Table t = load_table(opts.tables, name);
        spdlog::debug("loaded {} ({} rows)", name, t.rows());
        catalog.emplace(key, t.schema());
        in.stats.emplace(key, table_stats(t));
        in.tables.emplace(key, std::move(t));
    }
    in.bp = sqf::bind(qp, catalog);
    in.library = load_library(opts.library, LibraryOptions{.require_all_kinds = false});
    in.device = load_device_profile(opts.device);
    return in;
}

PlannerOptions planner_options(const RunOptions& opts, const BoundPlan& bp, std::vector<std::string>& warnings)
{
    PlannerOptions p;
    p.seed = opts.seed;
    if (opts.layout == "row")
        p.force_layout = Layout::Row;
    else if (opts.layout == "column")
        p.force_layout = Layout::Column;
    else if (opts.layout != "auto")
        throw Error(ErrorCode::InvalidField, fmt::format("--layout: unknown strategy `{}`", opts.layout));

    if (opts.join == "hash")
        p.force_join = JoinAlgo::HashFpga;
    else if (opts.join == "merge")
        p.force_join = JoinAlgo::MergeFpga;
    else if (opts.join == "codesign")
        p.force_join = JoinAlgo::HashCodesign;
    else if (opts.join != "auto")
        throw Error(ErrorCode::InvalidField, fmt::format("--join: unknown strategy `{}`", opts.join));
    if (p.force_join && !bp.has_join())
        warnings.push_back(fmt::format("query has no join; --join {} ignored", opts.join));
    return p;
}

RunOutcome run_query(const RunOptions& opts)
{
    try {
        // The fabric needs the device profile, which load_inputs reads.
        FabricState fabric(load_device_profile(opts.device));
        return run_query(opts, fabric);
    } catch (const std::exception& e) {
        return failure(e);
    }
}

RunOutcome run_query(const RunOptions& opts, FabricState& fabric)
{
    const auto start = Clock::now();
    Json report;
    try {
        Planned p = plan(opts);
        const auto& bp = p.in.bp;
        const auto& chosen = p.candidates[p.selection.index];
        const auto& best = p.selection.best();

        report["query"] = p.in.query_text;
        report["seed"] = opts.seed;
        report["strategy"] = strategy_json(opts);
        report["chosen"] = chosen.tag();
        report["candidates"] = candidates_json(p.candidates, p.selection, nullptr);

        auto modules = chosen.modules();
        Placement placement = fabric.allocate(modules);
        ReconfigReport rc = fabric.reconfigure(placement, fabric.port_free_at());
        Json pl;
        pl["region"] = placement.region();
        Json entries = Json::array();
        for (const auto& e : placement.entries) {
            Json j;
            j["module"] = e.instance.identity();
            j["start"] = e.range.start;
            j["end"] = e.range.end;
            entries.push_back(std::move(j));
        }
        pl["entries"] = std::move(entries);
        report["placement"] = std::move(pl);
        Json rj;
        rj["seconds"] = rc.seconds;
        rj["bytes"] = rc.bytes;
        rj["loaded"] = rc.loaded;
        rj["reused"] = rc.reused;
        report["reconfig"] = std::move(rj);

        ExecResult ex;
        try {
            ex = execute_pipeline(bp, chosen, p.in.tables, fabric, placement, p.in.device, best.total_seconds);
        } catch (...) {
            fabric.release(placement);
            throw;
        }
        fabric.release(placement);

        Json exj;
        exj["simulated_seconds"] = ex.report.simulated_seconds;
        Json stages = Json::array();
        for (const auto& s : ex.report.stages) {
            Json j;
            j["name"] = s.name;
            j["host"] = s.host;
            j["build_phase"] = s.build_phase;
            j["input_tuples"] = s.input_tuples;
            j["output_tuples"] = s.output_tuples;
            j["selectivity"] = s.selectivity;
            j["merge_passes"] = s.merge_passes;
            stages.push_back(std::move(j));
        }
        exj["stages"] = std::move(stages);
        if (ex.report.bloom_passed) {
            exj["bloom_passed"] = *ex.report.bloom_passed;
            exj["bloom_false_positives"] = *ex.report.bloom_false_positives;
        }
        report["execution"] = std::move(exj);

        if (opts.tamper)
            opts.tamper(ex.table);
        Json res;
        res["rows"] = ex.table.rows();
        res["checksum"] = hex64(table_checksum(ex.table));
        res["order_specified"] = ex.report.order_specified;
        report["result"] = std::move(res);

        int exit_code = 0;
        std::string diagnostic;
        bool checked = false;
        Json mismatch;
        if (opts.oracle) {
            Table expected = reference_execute(bp, p.in.tables);
            auto got = canonical_rows(ex.table);
            auto want = canonical_rows(expected);
            if (got == want) {
                checked = true;
            } else {
                std::size_t i = 0;
                while (i < got.size() && i < want.size() && got[i] == want[i])
                    ++i;
                mismatch["engine_rows"] = got.size();
                mismatch["oracle_rows"] = want.size();
                mismatch["first_differing_index"] = i;
                mismatch["engine_row"] = i < got.size() ? row_json(got[i]) : Json(nullptr);
                mismatch["oracle_row"] = i < want.size() ? row_json(want[i]) : Json(nullptr);
                exit_code = 2;
                diagnostic = fmt::format("oracle mismatch: engine {} rows, oracle {} rows, first difference at "
                                         "sorted row {}",
                                         got.size(), want.size(), i);
            }
        }
        report["oracle_checked"] = checked;
        if (!mismatch.is_null())
            report["oracle_mismatch"] = std::move(mismatch);
        report["warnings"] = p.warnings;
        Json timing;
        timing["wall_seconds"] = seconds_since(start);
        timing["engine_wall_seconds"] = ex.report.wall_seconds;
        report["timing"] = std::move(timing);

        RunOutcome r;
        r.exit_code = exit_code;
        r.report = std::move(report);
        r.diagnostic = std::move(diagnostic);
        r.inputs = p.owner;
        r.chosen = best;
        return r;
    } catch (const std::exception& e) {
        return failure(e, std::move(report));
    }
}

RunOutcome explain_query(const RunOptions& opts, const FabricState& fabric, std::ostream& table)
{
    try {
        Planned p = plan(opts);
        Json report;
        report["query"] = p.in.query_text;
        report["seed"] = opts.seed;
        report["strategy"] = strategy_json(opts);
        report["chosen"] = p.candidates[p.selection.index].tag();
        report["candidates"] = candidates_json(p.candidates, p.selection, &fabric);
        report["warnings"] = p.warnings;

        table << fmt::format("   {:<20} {:>5} {:>16} {:>16} {:>16}\n", "tag", "slots", "total_seconds",
                             "energy_joules", "reconfig_seconds");
        for (std::size_t i = 0; i < p.candidates.size(); ++i) {
            const auto& e = p.selection.estimates[i];
            table << fmt::format("{:<2} {:<20} {:>5} {:>16.9g} {:>16.9g} {:>16.9g}\n", i == p.selection.index ? "*" : "",
                                 p.candidates[i].tag(), p.candidates[i].total_slots(), e.total_seconds,
                                 e.energy_joules, e.reconfig_seconds);
        }
        RunOutcome r;
        r.report = std::move(report);
        return r;
    } catch (const std::exception& e) {
        return failure(e);
    }
}

double modeled_energy_ratio(const BoundPlan& bp, const CostEstimate& est, const StatsCatalog& stats,
                            const SoftwareProfile& sw)
{
    double software_joules = sw.p_cpu_w * software_seconds(bp, est, stats, sw);
    return software_joules / est.energy_joules;
}

Json bench_suite(const BenchOptions& opts)
{
    const SuiteManifest m = load_manifest(opts.suite);
    const fs::path library = opts.library.value_or(m.library);
    const fs::path device = opts.device.value_or(m.device);
    const SoftwareProfile sw = load_software_profile(opts.baseline.value_or(m.baseline));

    struct Job {
        const SuiteQuery* query;
        std::string strategy;
    };
    std::vector<Job> jobs;
    for (const auto& q : m.queries)
        for (const char* s : kBenchStrategies)
            jobs.push_back({&q, s});

    std::vector<Json> rows(jobs.size());
    auto run_job = [&](std::size_t i) {
        const auto& job = jobs[i];
        Json row;
        row["query"] = job.query->id;
        row["strategy"] = job.strategy;
        RunOptions ro;
        ro.query = job.query->file;
        ro.tables = opts.tables.value_or(job.query->tables);
        ro.library = library;
        ro.device = device;
        ro.seed = opts.seed;
        ro.join = job.strategy;
        try {
            // Each pair gets its own fabric, so jobs never share state.
            FabricState fabric(load_device_profile(device));
            auto start = Clock::now();
            RunOutcome out = run_query(ro, fabric);
            double wall = seconds_since(start);
            if (out.exit_code != 0)
                throw std::runtime_error(out.diagnostic);
            const auto& est = *out.chosen;
            const auto& in = *out.inputs;
            row["status"] = "ok";
            row["tag"] = out.report["chosen"];
            row["estimated_seconds"] = est.total_seconds;
            row["reconfig_seconds"] = est.reconfig_seconds;
            row["overhead_fraction"] = est.reconfig_seconds / est.total_seconds;
            row["energy_joules"] = est.energy_joules;
            row["energy_ratio"] = modeled_energy_ratio(in.bp, est, in.stats, sw);
            row["rows"] = out.report["result"]["rows"];
            row["checksum"] = out.report["result"]["checksum"];
            row["measured_wall_seconds"] = wall;
        } catch (const std::exception& e) {
            row["status"] = "error";
            row["error"] = std::string(e.what());
        }
        rows[i] = std::move(row);
    };

    unsigned workers = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(jobs.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            run_job(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++)
                    run_job(i);
            });
        for (auto& t : pool)
            t.join();
    }

    std::size_t failures = 0;
    double max_overhead = 0.0;
    for (const auto& r : rows) {
        if (r["status"] != "ok")
            ++failures;
        else
            max_overhead = std::max(max_overhead, r["overhead_fraction"].get<double>());
    }
    Json report;
    report["suite"] = m.dir.filename().string();
    report["seed"] = opts.seed;
    report["strategies"] = Json::array();
    for (const char* s : kBenchStrategies)
        report["strategies"].push_back(s);
    report["rows"] = rows;
    Json summary;
    summary["pairs"] = m.queries.size();
    summary["runs"] = rows.size();
    summary["failures"] = failures;
    summary["max_overhead_fraction"] = max_overhead;
    summary["overhead_fraction_max"] = m.overhead_fraction_max;
    summary["overhead_ok"] = max_overhead <= m.overhead_fraction_max;
    report["summary"] = std::move(summary);
    return report;
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err)
{
    RunOutcome r = run_query(opts);
    try {
        if (opts.out && !r.report.empty())
            write_text(*opts.out, write_report(r.report));
    } catch (const std::exception& e) {
        err << "sqf: " << e.what() << '\n';
        return 1;
    }
    if (r.exit_code != 0)
        err << "sqf: " << r.diagnostic << '\n';
    else if (!opts.out)
        out << write_report(r.report);
    return r.exit_code;
}

int cmd_explain(const RunOptions& opts, std::ostream& out, std::ostream& err)
{
    try {
        FabricState fabric(load_device_profile(opts.device));
        RunOutcome r = explain_query(opts, fabric, out);
        if (r.exit_code != 0) {
            err << "sqf: " << r.diagnostic << '\n';
            return r.exit_code;
        }
        if (opts.out)
            write_text(*opts.out, write_report(r.report));
        return 0;
    } catch (const std::exception& e) {
        err << "sqf: " << e.what() << '\n';
        return 1;
    }
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err)
{
    try {
        Json report = bench_suite(opts);
        for (const auto& row : report["rows"])
            if (row["status"] != "ok")
                err << "sqf: " << row["query"].get<std::string>() << " [" << row["strategy"].get<std::string>()
                    << "]: " << row["error"].get<std::string>() << '\n';
        if (opts.out)
            write_text(*opts.out, write_report(report));
        else
            out << write_report(report);
        return 0;
    } catch (const std::exception& e) {
        err << "sqf: " << e.what() << '\n';
        return 1;
    }
}

void init_logging()
{
    // bench logs from worker threads, hence the locking sink.
    auto logger = spdlog::get("sqf");
    if (!logger)
        logger = spdlog::stderr_logger_mt("sqf");
    logger->set_pattern("sqf [%l] %v");
    const char* env = std::getenv("SQF_LOG");
    std::string level = env ? env : "warn";
    if (level == "debug")
        logger->set_level(spdlog::level::debug);
    else if (level == "info")
        logger->set_level(spdlog::level::info);
    else
        logger->set_level(spdlog::level::warn);
    spdlog::set_default_logger(logger);
}

} // namespace sqf
