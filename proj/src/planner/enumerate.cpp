#include "sqf/error.hpp"
#include "sqf/planner/planner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fmt/format.h>

namespace sqf {

namespace {

constexpr std::array<std::string_view, 4> kJoinAlgoNames = {"none", "hash_fpga", "merge_fpga", "hash_codesign"};

constexpr std::array<std::string_view, 13> kRoleNames = {
    "left_filter", "right_filter", "sort_left", "sort_right", "join",  "joined_filter", "compute",
    "aggregate",   "project",      "order_by",  "bloom",      "align", "passthrough",
};

bool identity_projection(const BoundPlan& bp)
{
    std::size_t width = bp.aggregating ? bp.group_by.size() + bp.aggregates.size()
                                       : bp.joined_arity() + bp.computed.size();
    if (bp.projection.size() != width)
        return false;
    for (std::size_t i = 0; i < width; ++i)
        if (bp.projection[i] != i)
            return false;
    return true;
}

const TableStats& table_stats_for(const StatsCatalog& stats, const std::string& table)
{
    auto it = stats.find(to_lower(table));
    if (it == stats.end())
        throw Error(ErrorCode::MissingStats, fmt::format("no statistics for table `{}`", table));
    return it->second;
}

/// Collects stages, remembering the first library kind that is missing.
class StageBuilder {
public:
    StageBuilder(const ModuleLibrary& lib) : lib_(lib) {}

    void add(ModuleKind kind, StageRole role, const ModuleParams& params = {})
    {
        if (!lib_.has(kind)) {
            if (!missing_)
                missing_ = kind;
            return;
        }
        stages_.push_back({instantiate(lib_, kind, params), role});
    }

    std::optional<ModuleKind> missing() const { return missing_; }
    std::vector<PipelineStage> take() { return std::move(stages_); }
    bool empty() const { return stages_.empty(); }

private:
    const ModuleLibrary& lib_;
    std::vector<PipelineStage> stages_;
    std::optional<ModuleKind> missing_;
};

ModuleParams restriction_params(const Expr& e)
{
    ModuleParams p;
    p.terms = static_cast<std::uint32_t>(count_terms(e));
    return p;
}

void add_side_filters(StageBuilder& b, const BoundPlan& bp)
{
    if (bp.left_filter)
        b.add(ModuleKind::Restriction, StageRole::LeftFilter, restriction_params(*bp.left_filter));
    if (bp.right_filter)
        b.add(ModuleKind::Restriction, StageRole::RightFilter, restriction_params(*bp.right_filter));
}

void add_post_join(StageBuilder& b, const BoundPlan& bp, const PlannerOptions& opt)
{
    if (bp.joined_filter)
        b.add(ModuleKind::Restriction, StageRole::JoinedFilter, restriction_params(*bp.joined_filter));
    if (!bp.computed.empty()) {
        ModuleParams p;
        for (const auto& c : bp.computed)
            p.expr_nodes += static_cast<std::uint32_t>(count_arith(c.expr));
        b.add(ModuleKind::Alu, StageRole::Compute, p);
    }
    if (bp.aggregating) {
        ModuleParams p;
        p.grouped = !bp.group_by.empty();
        b.add(ModuleKind::Aggregate, StageRole::Aggregate, p);
    }
    if (!identity_projection(bp))
        b.add(ModuleKind::Reorder, StageRole::Project);
    if (!bp.order_by.empty()) {
        ModuleParams p;
        p.run_capacity = opt.sort_run_capacity;
        b.add(ModuleKind::Sort, StageRole::OrderBy, p);
    }
}

std::vector<StageRole> host_post_roles(const BoundPlan& bp)
{
    std::vector<StageRole> roles;
    if (bp.joined_filter)
        roles.push_back(StageRole::JoinedFilter);
    if (!bp.computed.empty())
        roles.push_back(StageRole::Compute);
    if (bp.aggregating)
        roles.push_back(StageRole::Aggregate);
    if (!identity_projection(bp))
        roles.push_back(StageRole::Project);
    if (!bp.order_by.empty())
        roles.push_back(StageRole::OrderBy);
    return roles;
}

Side pick_build_side(const TableStats& left, const TableStats& right)
{
    return right.row_count < left.row_count ? Side::Right : Side::Left;
}

std::uint64_t bloom_bits(const BoundPlan& bp, const StatsCatalog& stats, Side build, const PlannerOptions& opt)
{
    const auto& ls = table_stats_for(stats, bp.left_table);
    const auto& rs = table_stats_for(stats, *bp.right_table);
    const auto& ts = build == Side::Left ? ls : rs;
    auto key = build == Side::Left ? bp.join_keys->first : bp.join_keys->second;
    const auto& filter = build == Side::Left ? bp.left_filter : bp.right_filter;
    double n = static_cast<double>(ts.row_count);
    if (filter) {
        StatsLookup lookup = [&](const ColumnRef& ref) -> const ColumnStats* {
            return ref.index < ts.columns.size() ? &ts.columns[ref.index] : nullptr;
        };
        n *= estimate_selectivity(*filter, lookup, ts.row_count);
    }
    double keys = key < ts.columns.size() ? std::min(n, static_cast<double>(ts.columns[key].distinct_count)) : n;
    auto want = static_cast<std::uint64_t>(std::ceil(opt.bloom_bits_per_key * std::max(1.0, keys)));
    want = std::bit_ceil(std::max<std::uint64_t>(want, 512));
    return std::min(want, kMaxBloomBits);
}

std::uint32_t align_block_bytes(const BoundPlan& bp, const DeviceProfile& dev, const PlannerOptions& opt)
{
    std::size_t record = std::max(bp.left_schema.tuple_bytes(), bp.right_schema->tuple_bytes()) + 8;
    std::uint64_t block = std::uint64_t{dev.cache_line_bytes} * std::max<std::uint32_t>(1, opt.align_multiplier);
    while (block < record)
        block *= 2;
    return static_cast<std::uint32_t>(block);
}

} // namespace

std::string_view join_algo_name(JoinAlgo algo) { return kJoinAlgoNames[static_cast<std::size_t>(algo)]; }

std::optional<JoinAlgo> parse_join_algo(std::string_view name)
{
    for (std::size_t i = 0; i < kJoinAlgoNames.size(); ++i)
        if (kJoinAlgoNames[i] == name)
            return static_cast<JoinAlgo>(i);
    return std::nullopt;
}

std::string_view layout_name(Layout layout) { return layout == Layout::Row ? "row" : "column"; }

std::string_view stage_role_name(StageRole role) { return kRoleNames[static_cast<std::size_t>(role)]; }

std::string CandidatePipeline::tag() const
{
    return fmt::format("{}/{}", layout_name(layout), join_algo_name(join_algo));
}

std::vector<ModuleInstance> CandidatePipeline::modules() const
{
    std::vector<ModuleInstance> out;
    out.reserve(stages.size());
    for (const auto& s : stages)
        out.push_back(s.module);
    return out;
}

std::uint32_t CandidatePipeline::total_slots() const
{
    std::uint32_t n = 0;
    for (const auto& s : stages)
        n += s.module.slots;
    return n;
}

const PipelineStage* CandidatePipeline::find(StageRole role) const
{
    for (const auto& s : stages)
        if (s.role == role)
            return &s;
    return nullptr;
}

std::vector<CandidatePipeline> enumerate_pipelines(const BoundPlan& bp, const ModuleLibrary& lib,
                                                   const DeviceProfile& dev, const StatsCatalog& stats,
                                                   const PlannerOptions& opt)
{
    const auto& left_stats = table_stats_for(stats, bp.left_table);
    const TableStats* right_stats = bp.has_join() ? &table_stats_for(stats, *bp.right_table) : nullptr;

    std::vector<Layout> layouts = {Layout::Row};
    {
        std::size_t touched = static_cast<std::size_t>(std::count(bp.touched_left.begin(), bp.touched_left.end(), true));
        std::size_t total = bp.left_arity();
        if (bp.has_join()) {
            touched += static_cast<std::size_t>(std::count(bp.touched_right.begin(), bp.touched_right.end(), true));
            total += bp.right_schema->arity();
        }
        if (2 * touched <= total)
            layouts.push_back(Layout::Column);
    }

    std::vector<CandidatePipeline> out;
    std::vector<std::string> dropped;
    if (opt.force_layout == Layout::Column && layouts.size() == 1)
        dropped.push_back("column layout needs a query touching at most half of the source columns");
    std::size_t filtered = 0;
    auto keep = [&](CandidatePipeline c, StageBuilder& b) {
        if ((opt.force_layout && c.layout != *opt.force_layout) ||
            (opt.force_join && bp.has_join() && c.join_algo != *opt.force_join)) {
            ++filtered;
            return;
        }
        if (auto m = b.missing()) {
            dropped.push_back(fmt::format("{}: library lacks {}", c.tag(), module_kind_name(*m)));
            return;
        }
        c.stages = b.take();
        if (c.total_slots() > dev.slots_per_region) {
            dropped.push_back(fmt::format("{}: needs {} slots, a region has {}", c.tag(), c.total_slots(),
                                          dev.slots_per_region));
            return;
        }
        c.ordinal = out.size();
        out.push_back(std::move(c));
    };

    if (!bp.has_join()) {
        for (auto layout : layouts) {
            StageBuilder b(lib);
            if (bp.left_filter)
                b.add(ModuleKind::Restriction, StageRole::LeftFilter, restriction_params(*bp.left_filter));
            add_post_join(b, bp, opt);
            if (b.empty() && !b.missing())
                b.add(ModuleKind::Passthrough, StageRole::Passthrough);
            CandidatePipeline c;
            c.layout = layout;
            keep(std::move(c), b);
        }
    } else {
        Side build = pick_build_side(left_stats, *right_stats);
        bool left_sorted = left_stats.columns.at(bp.join_keys->first).non_decreasing;
        bool right_sorted = right_stats->columns.at(bp.join_keys->second).non_decreasing;

        for (auto layout : layouts) {
            {
                StageBuilder b(lib);
                add_side_filters(b, bp);
                b.add(ModuleKind::HashJoin, StageRole::Join);
                add_post_join(b, bp, opt);
                CandidatePipeline c;
                c.layout = layout;
                c.join_algo = JoinAlgo::HashFpga;
                c.build_side = build;
                keep(std::move(c), b);
            }
            {
                StageBuilder b(lib);
                add_side_filters(b, bp);
                ModuleParams sort;
                sort.run_capacity = opt.sort_run_capacity;
                if (!left_sorted)
                    b.add(ModuleKind::Sort, StageRole::SortLeft, sort);
                if (!right_sorted)
                    b.add(ModuleKind::Sort, StageRole::SortRight, sort);
                b.add(ModuleKind::MergeJoin, StageRole::Join);
                add_post_join(b, bp, opt);
                CandidatePipeline c;
                c.layout = layout;
                c.join_algo = JoinAlgo::MergeFpga;
                keep(std::move(c), b);
            }
        }
        if (lib.has(ModuleKind::BloomCascade) && lib.has(ModuleKind::Align)) {
            for (auto layout : layouts) {
                StageBuilder b(lib);
                add_side_filters(b, bp);
                ModuleParams bloom;
                bloom.stages = opt.bloom_stages;
                bloom.hashes = opt.bloom_hashes;
                bloom.bits_per_stage = bloom_bits(bp, stats, build, opt);
                b.add(ModuleKind::BloomCascade, StageRole::Bloom, bloom);
                ModuleParams align;
                align.block_bytes = align_block_bytes(bp, dev, opt);
                align.with_hash = true;
                b.add(ModuleKind::Align, StageRole::Align, align);
                CandidatePipeline c;
                c.layout = layout;
                c.join_algo = JoinAlgo::HashCodesign;
                c.build_side = build;
                c.bloom_seed = opt.seed;
                c.host_stage = HostStage{host_post_roles(bp)};
                keep(std::move(c), b);
            }
        }
    }

    if (out.empty()) {
        std::string why;
        if (dropped.empty())
            why = filtered ? "no candidate matches the forced strategy" : "no pipeline shape applies";
        for (std::size_t i = 0; i < dropped.size(); ++i)
            why += (i ? "; " : "") + dropped[i];
        throw Error(ErrorCode::NoCandidates, why);
    }
    return out;
}

} // namespace sqf
