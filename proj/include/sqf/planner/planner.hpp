#pragma once

#include "sqf/fabric/fabric.hpp"
#include "sqf/frontend/binder.hpp"
#include "sqf/library/library.hpp"
#include "sqf/relcore/stats.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sqf {

enum class JoinAlgo : std::uint8_t { None, HashFpga, MergeFpga, HashCodesign };
enum class Layout : std::uint8_t { Row, Column };

/// What a module does for the query, independent of its kind.
enum class StageRole : std::uint8_t {
    LeftFilter,
    RightFilter,
    SortLeft,
    SortRight,
    Join,
    JoinedFilter,
    Compute,
    Aggregate,
    Project,
    OrderBy,
    Bloom,
    Align,
    Passthrough,
};

std::string_view join_algo_name(JoinAlgo algo);
std::optional<JoinAlgo> parse_join_algo(std::string_view name);
std::string_view layout_name(Layout layout);
std::string_view stage_role_name(StageRole role);

struct PipelineStage {
    ModuleInstance module;
    StageRole role = StageRole::Passthrough;

    bool operator==(const PipelineStage&) const = default;
};

/// Software stage of a co-design pipeline: HASH_JOIN_HOST followed by the
/// post-join operators, run on the host CPU.
struct HostStage {
    std::vector<StageRole> post;

    bool operator==(const HostStage&) const = default;
};

struct CandidatePipeline {
    std::size_t ordinal = 0;
    JoinAlgo join_algo = JoinAlgo::None;
    Layout layout = Layout::Row;
    std::vector<PipelineStage> stages;
    std::optional<HostStage> host_stage;
    /// Input that builds the hash table (hash joins only).
    std::optional<Side> build_side;
    /// Bloom cascade seed (co-design only).
    std::uint64_t bloom_seed = 0;

    /// "<layout>/<join_algo>", e.g. "row/hash_fpga".
    std::string tag() const;
    std::vector<ModuleInstance> modules() const;
    std::uint32_t total_slots() const;
    const PipelineStage* find(StageRole role) const;

    bool operator==(const CandidatePipeline&) const = default;
};

struct PlannerOptions {
    std::uint32_t sort_run_capacity = 2048;
    std::uint32_t bloom_stages = 2;
    std::uint32_t bloom_hashes = 2;
    double bloom_bits_per_key = 8.0;
    std::uint32_t align_multiplier = 1;
    std::uint64_t seed = 0;
    /// Forced strategies: other candidates are filtered out before
    /// selection. A forced join algorithm is ignored for queries without a
    /// join.
    std::optional<Layout> force_layout;
    std::optional<JoinAlgo> force_join;
};

/// Candidates in a fixed order: for each layout (row, then column when the
/// query touches at most half of the source columns) one FPGA-only
/// pipeline per available join algorithm, then the co-design variants.
/// Candidates wider than a region are dropped. Throws NoCandidates when
/// nothing remains, MissingStats when a table has no statistics.
std::vector<CandidatePipeline> enumerate_pipelines(const BoundPlan& bp, const ModuleLibrary& lib,
                                                   const DeviceProfile& dev, const StatsCatalog& stats,
                                                   const PlannerOptions& options = {});

/// Looks up statistics for a column reference; nullptr when unknown.
using StatsLookup = std::function<const ColumnStats*(const ColumnRef&)>;

/// Estimated fraction of `row_count` rows satisfying a boolean expression.
/// Always in [0, 1].
double estimate_selectivity(const Expr& predicate, const StatsLookup& lookup, std::size_t row_count);

/// ((1 - e^(-k n / m))^k)^stages.
double bloom_false_positive_rate(std::uint64_t m, std::uint32_t k, double n, std::uint32_t stages);

/// ceil(log2(ceil(n / run_capacity))), at least 0.
std::uint32_t merge_levels(double n, std::uint32_t run_capacity);

struct StageEstimate {
    /// Index into CandidatePipeline::stages; absent for the host stage.
    std::optional<std::size_t> stage_index;
    StageRole role = StageRole::Passthrough;
    /// True for the build pass of a hash join or bloom cascade.
    bool build_phase = false;
    double input_tuples = 0.0;
    double rate = 0.0; // tuples/s
    double selectivity = 1.0;
    double output_tuples = 0.0;
    double seconds = 0.0;
    std::uint32_t merge_levels = 0;
};

struct CostEstimate {
    double stream_seconds = 0.0;
    double blocking_seconds = 0.0;
    double reconfig_seconds = 0.0;
    double host_seconds = 0.0;
    double total_seconds = 0.0;
    double energy_joules = 0.0;
    double output_tuples = 0.0;
    std::vector<StageEstimate> stages;
    /// Busy seconds per pipeline module, indexed like CandidatePipeline::stages.
    std::vector<double> active_seconds;
};

/// Time fields of the cost model; energy_joules is left at 0.
CostEstimate estimate_time(const BoundPlan& bp, const CandidatePipeline& c, const StatsCatalog& stats,
                           const DeviceProfile& dev);

/// p_static * total + sum(p_slot_active * slots_i * active_i) + p_reconfig * reconfig.
double estimate_energy(const CandidatePipeline& c, const CostEstimate& t, const DeviceProfile& dev);

/// estimate_time with energy filled in.
CostEstimate estimate(const BoundPlan& bp, const CandidatePipeline& c, const StatsCatalog& stats,
                      const DeviceProfile& dev);

/// Position of the best estimate: lowest total, then lowest energy, then
/// lowest candidate ordinal. Throws NoCandidates on empty input.
std::size_t pick_best(std::span<const CandidatePipeline> cands, std::span<const CostEstimate> estimates);

struct Selection {
    std::size_t index = 0;
    std::vector<CostEstimate> estimates;

    const CostEstimate& best() const { return estimates.at(index); }
};

Selection select_best(const BoundPlan& bp, std::span<const CandidatePipeline> cands, const StatsCatalog& stats,
                      const DeviceProfile& dev);

/// CPU-only reference platform used for energy comparisons.
struct SoftwareProfile {
    double cpu_tuples_per_s = 5.0e7;
    double p_cpu_w = 65.0;
    double mem_bytes_per_s = 1.0e10;
};

SoftwareProfile parse_software_profile(std::string_view json_text);
SoftwareProfile load_software_profile(const std::filesystem::path& path);

/// Seconds for a CPU to scan the inputs and push every estimated stage
/// input through one operator each.
double software_seconds(const BoundPlan& bp, const CostEstimate& fpga, const StatsCatalog& stats,
                        const SoftwareProfile& sw);

} // namespace sqf
