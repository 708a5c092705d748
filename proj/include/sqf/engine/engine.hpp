#pragma once

#include "sqf/fabric/fabric.hpp"
#include "sqf/frontend/binder.hpp"
#include "sqf/planner/planner.hpp"
#include "sqf/relcore/table.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sqf {

/// Keyed by lower-cased table name.
using TableCatalog = std::map<std::string, Table>;

/// Throws UnknownTable.
const Table& find_table(const TableCatalog& tables, const std::string& name);

struct StageReport {
    std::string name;
    StageRole role = StageRole::Passthrough;
    bool host = false;
    bool build_phase = false;
    std::size_t input_tuples = 0;
    std::size_t output_tuples = 0;
    /// output/input for filters; output/(|left| * |right|) for joins.
    double selectivity = 1.0;
    std::uint32_t merge_passes = 0;
};

struct ExecReport {
    std::string tag;
    std::vector<StageReport> stages;
    std::size_t output_rows = 0;
    /// False when the query has no ORDER BY: row order is then unspecified.
    bool order_specified = false;
    double wall_seconds = 0.0;
    /// Echo of the cost model's total for this candidate.
    double simulated_seconds = 0.0;
    /// Co-design only: probe tuples that passed the cascade.
    std::optional<std::uint64_t> bloom_passed;
    /// Co-design only: passed probe tuples whose key is absent from the
    /// build side.
    std::optional<std::uint64_t> bloom_false_positives;
};

struct ExecResult {
    Table table;
    ExecReport report;
};

/// Runs a placed candidate over real tables. `p` must be allocated and
/// configured for exactly the candidate's modules (NotReconfigured
/// otherwise). Arithmetic faults surface as ArithmeticError with the row
/// position inside the faulting stage's input stream.
ExecResult execute_pipeline(const BoundPlan& bp, const CandidatePipeline& c, const TableCatalog& tables,
                            const FabricState& f, const Placement& p, const DeviceProfile& dev,
                            double simulated_seconds = 0.0);

} // namespace sqf
