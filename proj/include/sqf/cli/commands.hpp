#pragma once

#include "sqf/cli/report.hpp"
#include "sqf/engine/engine.hpp"
#include "sqf/fabric/fabric.hpp"
#include "sqf/library/library.hpp"
#include "sqf/planner/planner.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sqf {

struct RunOptions {
    std::filesystem::path query;
    std::filesystem::path tables;
    std::filesystem::path library;
    std::filesystem::path device;
    std::optional<std::filesystem::path> out;
    std::uint64_t seed = 0;
    bool oracle = false;
    std::string layout = "auto"; // row | column | auto
    std::string join = "auto";   // hash | merge | codesign | auto
    /// Test hook: edits the engine result before the oracle comparison.
    std::function<void(Table&)> tamper;
};

/// Everything a query needs, loaded from disk and bound.
struct QueryInputs {
    std::string query_text;
    BoundPlan bp;
    TableCatalog tables;
    StatsCatalog stats;
    ModuleLibrary library;
    DeviceProfile device;
};

/// Reads the query, then DIR/<table>.csv for each table it names.
QueryInputs load_inputs(const RunOptions& opts);

/// Throws InvalidField on an unknown strategy name. Appends a warning when a
/// forced join algorithm does not apply.
PlannerOptions planner_options(const RunOptions& opts, const BoundPlan& bp, std::vector<std::string>& warnings);

struct RunOutcome {
    int exit_code = 0;
    Json report;
    /// Single line; empty on success.
    std::string diagnostic;
    /// Set once planning succeeded.
    std::shared_ptr<const QueryInputs> inputs;
    std::optional<CostEstimate> chosen;
};

/// Plans, places and executes on `fabric`; the placement is released
/// afterwards. Module errors give exit 1, an oracle mismatch exit 2.
RunOutcome run_query(const RunOptions& opts, FabricState& fabric);
RunOutcome run_query(const RunOptions& opts);

/// Plans without executing. `fabric` is only read, to report which
/// candidates would fit right now. Writes the candidate table to `table`.
RunOutcome explain_query(const RunOptions& opts, const FabricState& fabric, std::ostream& table);

struct BenchOptions {
    std::filesystem::path suite;
    /// Overrides of the manifest's paths.
    std::optional<std::filesystem::path> tables;
    std::optional<std::filesystem::path> library;
    std::optional<std::filesystem::path> device;
    std::optional<std::filesystem::path> baseline;
    std::optional<std::filesystem::path> out;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

/// Strategies every suite pair is run under.
inline constexpr const char* kBenchStrategies[] = {"auto", "hash", "merge", "codesign"};

/// Energy a CPU-only platform would spend on the query divided by the
/// modelled FPGA energy of the candidate.
double modeled_energy_ratio(const BoundPlan& bp, const CostEstimate& est, const StatsCatalog& stats,
                            const SoftwareProfile& sw);

/// Runs every pair under every strategy on its own FabricState; failures
/// are recorded, not raised.
Json bench_suite(const BenchOptions& opts);

/// Entry points used by tools/sqf. Reports go to --out (or stdout for
/// bench without --out); diagnostics to `err`.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_explain(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

/// Level from SQF_LOG (debug|info|warn, default warn), messages on stderr.
void init_logging();

} // namespace sqf
