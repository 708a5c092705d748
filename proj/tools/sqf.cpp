#include "sqf/cli/commands.hpp"
#include "sqf/cli/suite.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_query_flags(CLI::App* cmd, sqf::RunOptions& o, bool out_required)
{
    cmd->add_option("--query", o.query, "SQL file")->required();
    cmd->add_option("--tables", o.tables, "directory of <table>.csv files")->required();
    cmd->add_option("--library", o.library, "module library JSON")->required();
    cmd->add_option("--device", o.device, "device profile JSON")->required();
    auto* out = cmd->add_option("--out", o.out, "report file");
    if (out_required)
        out->required();
    cmd->add_option("--seed", o.seed, "bloom cascade seed")->default_val(0);
    cmd->add_option("--layout", o.layout, "row|column|auto")
        ->check(CLI::IsMember({"row", "column", "auto"}))
        ->default_val("auto");
    cmd->add_option("--join", o.join, "hash|merge|codesign|auto")
        ->check(CLI::IsMember({"hash", "merge", "codesign", "auto"}))
        ->default_val("auto");
}

} // namespace

int main(int argc, char** argv)
{
    sqf::init_logging();
    CLI::App app{"sqf: SQL to reconfigurable operator pipelines"};
    app.require_subcommand(1);

    sqf::RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "plan, place and execute a query");
    add_query_flags(run_cmd, run, true);
    run_cmd->add_flag("--oracle", run.oracle, "check the result against the reference evaluator");

    sqf::RunOptions explain;
    auto* explain_cmd = app.add_subcommand("explain", "list candidate pipelines and their estimates");
    add_query_flags(explain_cmd, explain, false);

    sqf::BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "run a query suite under every strategy");
    bench_cmd->add_option("--suite", bench.suite, "suite directory with manifest.json")->required();
    bench_cmd->add_option("--tables", bench.tables, "override the manifest's table directory");
    bench_cmd->add_option("--library", bench.library, "override the manifest's library");
    bench_cmd->add_option("--device", bench.device, "override the manifest's device profile");
    bench_cmd->add_option("--baseline", bench.baseline, "override the manifest's software baseline");
    bench_cmd->add_option("--out", bench.out, "report file (stdout when absent)");
    bench_cmd->add_option("--seed", bench.seed, "bloom cascade seed")->default_val(0);
    bench_cmd->add_option("--jobs", bench.jobs, "pairs run concurrently")->default_val(1);

    std::filesystem::path gen_suite;
    std::optional<std::filesystem::path> gen_out;
    auto* gen_cmd = app.add_subcommand("gen-suite", "write the suite's generated tables");
    gen_cmd->add_option("--suite", gen_suite, "suite directory with manifest.json")->required();
    gen_cmd->add_option("--out", gen_out, "target directory (manifest's tables_dir when absent)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (*run_cmd)
        return sqf::cmd_run(run, std::cout, std::cerr);
    if (*explain_cmd)
        return sqf::cmd_explain(explain, std::cout, std::cerr);
    if (*bench_cmd)
        return sqf::cmd_bench(bench, std::cout, std::cerr);
    try {
        auto m = sqf::load_manifest(gen_suite);
        sqf::write_suite_tables(m.generator, gen_out.value_or(m.tables_dir));
    } catch (const std::exception& e) {
        std::cerr << "sqf: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
