#include "sqf/error.hpp"
#include "sqf/planner/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

namespace sqf {

namespace {

constexpr double kDefaultEq = 0.1;
constexpr double kDefaultRange = 1.0 / 3.0;

double clamp01(double v)
{
    if (!(v >= 0.0))
        return 0.0;
    return std::min(v, 1.0);
}

bool compare_exact(std::int64_t a, std::int64_t b, CmpOp op)
{
    switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
    }
    return false;
}

double default_selectivity(CmpOp op)
{
    if (op == CmpOp::Eq)
        return kDefaultEq;
    if (op == CmpOp::Ne)
        return 1.0 - kDefaultEq;
    return kDefaultRange;
}

double distinct_of(const ColumnStats* s)
{
    return s ? static_cast<double>(std::max<std::size_t>(1, s->distinct_count)) : 0.0;
}

// column op literal, over an INT column with known bounds.
double int_range_selectivity(const ColumnStats& cs, CmpOp op, std::int64_t v)
{
    auto lo = std::get<std::int64_t>(*cs.min);
    auto hi = std::get<std::int64_t>(*cs.max);
    double d = distinct_of(&cs);
    if (op == CmpOp::Eq)
        return (v < lo || v > hi) ? 0.0 : 1.0 / d;
    if (op == CmpOp::Ne)
        return (v < lo || v > hi) ? 1.0 : 1.0 - 1.0 / d;
    if (lo == hi)
        return compare_exact(lo, v, op) ? 1.0 : 0.0;
    // Integer domain [lo, hi] treated as uniform.
    double span = static_cast<double>(hi) - static_cast<double>(lo) + 1.0;
    double below = static_cast<double>(v) - static_cast<double>(lo); // values < v
    double above = static_cast<double>(hi) - static_cast<double>(v); // values > v
    switch (op) {
    case CmpOp::Lt: return clamp01(below / span);
    case CmpOp::Le: return clamp01((below + 1.0) / span);
    case CmpOp::Gt: return clamp01(above / span);
    case CmpOp::Ge: return clamp01((above + 1.0) / span);
    default: return 0.0;
    }
}

double cmp_selectivity(const Expr& e, const StatsLookup& lookup, std::size_t rows)
{
    const Expr* a = &e.children[0];
    const Expr* b = &e.children[1];
    CmpOp op = e.cmp;
    bool a_lit = a->kind == ExprKind::IntLiteral || a->kind == ExprKind::StrLiteral;
    bool b_lit = b->kind == ExprKind::IntLiteral || b->kind == ExprKind::StrLiteral;
    if (a_lit && b_lit) {
        if (a->kind == ExprKind::IntLiteral && b->kind == ExprKind::IntLiteral)
            return compare_exact(a->int_value, b->int_value, op) ? 1.0 : 0.0;
        if (a->kind == ExprKind::StrLiteral && b->kind == ExprKind::StrLiteral) {
            int c = a->str_value.compare(b->str_value);
            return compare_exact(c, 0, op) ? 1.0 : 0.0;
        }
        return default_selectivity(op);
    }
    if (a_lit && b->kind == ExprKind::ColumnRef) {
        std::swap(a, b);
        op = flip(op);
        std::swap(a_lit, b_lit);
    }
    if (a->kind == ExprKind::ColumnRef && b_lit) {
        const ColumnStats* cs = lookup(a->column);
        if (!cs || rows == 0 || !cs->min || !cs->max)
            return default_selectivity(op);
        if (b->kind == ExprKind::IntLiteral && std::holds_alternative<std::int64_t>(*cs->min))
            return int_range_selectivity(*cs, op, b->int_value);
        if (op == CmpOp::Eq)
            return 1.0 / distinct_of(cs);
        if (op == CmpOp::Ne)
            return 1.0 - 1.0 / distinct_of(cs);
        return kDefaultRange;
    }
    if (a->kind == ExprKind::ColumnRef && b->kind == ExprKind::ColumnRef) {
        const ColumnStats* x = lookup(a->column);
        const ColumnStats* y = lookup(b->column);
        if (!x || !y || rows == 0)
            return default_selectivity(op);
        double eq = 1.0 / std::max(distinct_of(x), distinct_of(y));
        if (op == CmpOp::Eq)
            return eq;
        if (op == CmpOp::Ne)
            return 1.0 - eq;
        return kDefaultRange;
    }
    return default_selectivity(op);
}

const TableStats& stats_for(const StatsCatalog& stats, const std::string& table)
{
    auto it = stats.find(to_lower(table));
    if (it == stats.end())
        throw Error(ErrorCode::MissingStats, fmt::format("no statistics for table `{}`", table));
    return it->second;
}

double capacity(const ModuleInstance& m, const DeviceProfile& dev)
{
    return m.spec.tuples_per_cycle * std::min(dev.clock_hz, m.spec.max_clock_hz);
}

struct Flow {
    double tuples = 0.0;
    double rate = 0.0;
};

/// Evaluates the calculus for one candidate. A path is a chain of stages
/// fed by one stream; its time is the slowest stage's input/rate.
class CostModel {
public:
    CostModel(const BoundPlan& bp, const CandidatePipeline& c, const StatsCatalog& stats, const DeviceProfile& dev)
        : bp_(bp), c_(c), dev_(dev), left_(stats_for(stats, bp.left_table))
    {
        if (bp.has_join())
            right_ = &stats_for(stats, *bp.right_table);
        est_.active_seconds.assign(c.stages.size(), 0.0);
    }

    CostEstimate run()
    {
        n_left_ = static_cast<double>(left_.row_count) * side_selectivity(Side::Left);
        if (bp_.has_join()) {
            n_right_ = static_cast<double>(right_->row_count) * side_selectivity(Side::Right);
            join_out_ = join_cardinality();
        }
        switch (c_.join_algo) {
        case JoinAlgo::None: run_single(); break;
        case JoinAlgo::HashFpga: run_hash(); break;
        case JoinAlgo::MergeFpga: run_merge(); break;
        case JoinAlgo::HashCodesign: run_codesign(); break;
        }
        for (const auto& s : c_.stages)
            est_.reconfig_seconds += static_cast<double>(s.module.bitstream_bytes) / dev_.icap_bytes_per_s;
        est_.total_seconds = est_.stream_seconds + est_.blocking_seconds + est_.reconfig_seconds + est_.host_seconds;
        return std::move(est_);
    }

private:
    const BoundPlan& bp_;
    const CandidatePipeline& c_;
    const DeviceProfile& dev_;
    const TableStats& left_;
    const TableStats* right_ = nullptr;
    CostEstimate est_;
    double n_left_ = 0.0;  // after the side filter
    double n_right_ = 0.0;
    double join_out_ = 0.0;

    struct Path {
        double seconds = 0.0;
        std::vector<std::size_t> stages;
    };

    const TableStats& side_stats(Side s) const { return s == Side::Left ? left_ : *right_; }

    StatsLookup side_lookup(Side s) const
    {
        const auto& ts = side_stats(s);
        return [&ts](const ColumnRef& ref) -> const ColumnStats* {
            return ref.index < ts.columns.size() ? &ts.columns[ref.index] : nullptr;
        };
    }

    const ColumnStats* joined_column(std::size_t i) const
    {
        if (i < left_.columns.size())
            return &left_.columns[i];
        i -= bp_.left_arity();
        if (right_ && i < right_->columns.size())
            return &right_->columns[i];
        return nullptr;
    }

    double side_selectivity(Side s) const
    {
        const auto& filter = s == Side::Left ? bp_.left_filter : bp_.right_filter;
        if (!filter)
            return 1.0;
        return estimate_selectivity(*filter, side_lookup(s), side_stats(s).row_count);
    }

    double key_distinct(Side s, double n) const
    {
        auto key = s == Side::Left ? bp_.join_keys->first : bp_.join_keys->second;
        double d = static_cast<double>(side_stats(s).columns.at(key).distinct_count);
        return std::max(1.0, std::min(d, n));
    }

    double join_cardinality() const
    {
        if (n_left_ <= 0.0 || n_right_ <= 0.0)
            return 0.0;
        return n_left_ * n_right_ / std::max(key_distinct(Side::Left, n_left_), key_distinct(Side::Right, n_right_));
    }

    double source_rate(Side s) const
    {
        const Schema& schema = s == Side::Left ? bp_.left_schema : *bp_.right_schema;
        std::size_t bytes = schema.tuple_bytes();
        if (c_.layout == Layout::Column) {
            const auto& touched = s == Side::Left ? bp_.touched_left : bp_.touched_right;
            std::size_t sum = 0, narrowest = std::numeric_limits<std::size_t>::max();
            for (std::size_t i = 0; i < schema.arity(); ++i) {
                std::size_t w = schema.column(i).type.width;
                narrowest = std::min(narrowest, w);
                if (i < touched.size() && touched[i])
                    sum += w;
            }
            bytes = sum > 0 ? sum : narrowest;
        }
        return dev_.mem_bytes_per_s / static_cast<double>(bytes);
    }

    Flow source(Side s) const
    {
        return {static_cast<double>(side_stats(s).row_count), source_rate(s)};
    }

    /// Pushes `f` through one stage producing `out` tuples.
    void step(Path& path, Flow& f, std::optional<std::size_t> idx, StageRole role, double cap, double out,
              bool build_phase = false, std::optional<double> reported = std::nullopt)
    {
        StageEstimate s;
        s.stage_index = idx;
        s.role = role;
        s.build_phase = build_phase;
        s.input_tuples = f.tuples;
        s.rate = std::min(f.rate, cap);
        s.seconds = f.tuples > 0.0 && s.rate > 0.0 ? f.tuples / s.rate : 0.0;
        s.output_tuples = out;
        s.selectivity = clamp01(reported ? *reported : (f.tuples > 0.0 ? out / f.tuples : 1.0));
        double out_rate = f.tuples > 0.0 ? s.rate * (out / f.tuples) : cap;
        path.seconds = std::max(path.seconds, s.seconds);
        if (idx)
            path.stages.push_back(*idx);
        est_.stages.push_back(s);
        f = {out, out > 0.0 ? out_rate : 0.0};
    }

    void step_module(Path& path, Flow& f, std::size_t idx, double out, bool build_phase = false,
                     std::optional<double> reported = std::nullopt)
    {
        const auto& st = c_.stages[idx];
        step(path, f, idx, st.role, capacity(st.module, dev_), out, build_phase, reported);
        if (!build_phase && (st.role == StageRole::OrderBy || st.role == StageRole::SortLeft ||
                             st.role == StageRole::SortRight))
            add_sort_blocking(idx, est_.stages.back().input_tuples);
    }

    void add_sort_blocking(std::size_t idx, double n)
    {
        const auto& m = c_.stages[idx].module;
        auto levels = merge_levels(n, m.params.run_capacity);
        est_.stages.back().merge_levels = levels;
        double t = levels > 0 ? levels * n / capacity(m, dev_) : 0.0;
        est_.blocking_seconds += t;
        est_.active_seconds[idx] += t;
    }

    void close(const Path& path, double& bucket)
    {
        bucket += path.seconds;
        for (auto idx : path.stages)
            est_.active_seconds[idx] += path.seconds;
    }

    std::optional<std::size_t> index_of(StageRole role) const
    {
        for (std::size_t i = 0; i < c_.stages.size(); ++i)
            if (c_.stages[i].role == role)
                return i;
        return std::nullopt;
    }

    void side_prefix(Path& path, Flow& f, Side s)
    {
        auto role = s == Side::Left ? StageRole::LeftFilter : StageRole::RightFilter;
        if (auto i = index_of(role))
            step_module(path, f, *i, s == Side::Left ? n_left_ : n_right_);
    }

    double groups(double n) const
    {
        if (bp_.group_by.empty())
            return 1.0;
        double prod = 1.0;
        for (auto g : bp_.group_by)
            prod *= distinct_of(joined_column(g));
        return std::min(prod, n);
    }

    double joined_filter_selectivity(double rows) const
    {
        StatsLookup lookup = [this](const ColumnRef& ref) { return joined_column(bp_.joined_index(ref)); };
        return estimate_selectivity(*bp_.joined_filter, lookup, static_cast<std::size_t>(std::ceil(rows)));
    }

    double post_output(StageRole role, double in) const
    {
        switch (role) {
        case StageRole::JoinedFilter: return in * joined_filter_selectivity(in);
        case StageRole::Aggregate: return groups(in);
        default: return in;
        }
    }

    void post_stages(Path& path, Flow& f, std::size_t from)
    {
        for (std::size_t i = from; i < c_.stages.size(); ++i)
            step_module(path, f, i, post_output(c_.stages[i].role, f.tuples));
        est_.output_tuples = f.tuples;
    }

    void run_single()
    {
        Path path;
        Flow f = source(Side::Left);
        std::size_t from = 0;
        if (auto i = index_of(StageRole::LeftFilter)) {
            step_module(path, f, *i, n_left_);
            from = *i + 1;
        }
        post_stages(path, f, from);
        close(path, est_.stream_seconds);
    }

    Side build_side() const { return c_.build_side.value_or(Side::Left); }

    double reported_join_selectivity() const
    {
        return n_left_ > 0.0 && n_right_ > 0.0 ? join_out_ / (n_left_ * n_right_) : 0.0;
    }

    void run_hash()
    {
        std::size_t join = *index_of(StageRole::Join);
        Side b = build_side();
        Side p = b == Side::Left ? Side::Right : Side::Left;

        Path build;
        Flow fb = source(b);
        side_prefix(build, fb, b);
        step_module(build, fb, join, 0.0, true);
        close(build, est_.blocking_seconds);

        Path probe;
        Flow fp = source(p);
        side_prefix(probe, fp, p);
        step_module(probe, fp, join, join_out_, false, reported_join_selectivity());
        post_stages(probe, fp, join + 1);
        close(probe, est_.stream_seconds);
    }

    void run_merge()
    {
        std::size_t join = *index_of(StageRole::Join);
        // Each input is read, filtered and (if needed) sorted; a sorted
        // side then replays at its sort module's rate, an already ordered
        // side streams straight into the merge.
        double entry_seconds = 0.0;
        for (Side s : {Side::Left, Side::Right}) {
            Path side;
            Flow f = source(s);
            side_prefix(side, f, s);
            auto sort = index_of(s == Side::Left ? StageRole::SortLeft : StageRole::SortRight);
            if (sort) {
                step_module(side, f, *sort, f.tuples);
                close(side, est_.stream_seconds);
                double cap = capacity(c_.stages[*sort].module, dev_);
                entry_seconds = std::max(entry_seconds, f.tuples / cap);
            } else {
                // Streams concurrently with the merge: charged to the merge path.
                for (auto idx : side.stages)
                    merge_prefix_stages_.push_back(idx);
                Flow raw = source(s);
                entry_seconds = std::max({entry_seconds, side.seconds, raw.tuples / raw.rate});
            }
        }
        Path merge;
        double in = n_left_ + n_right_;
        Flow f{in, in > 0.0 && entry_seconds > 0.0 ? in / entry_seconds : capacity(c_.stages[join].module, dev_)};
        step_module(merge, f, join, join_out_, false, reported_join_selectivity());
        post_stages(merge, f, join + 1);
        for (auto idx : merge_prefix_stages_)
            merge.stages.push_back(idx);
        close(merge, est_.stream_seconds);
    }
    std::vector<std::size_t> merge_prefix_stages_;

    void run_codesign()
    {
        std::size_t bloom = *index_of(StageRole::Bloom);
        std::size_t align = *index_of(StageRole::Align);
        Side b = build_side();
        Side p = b == Side::Left ? Side::Right : Side::Left;
        double n_build = b == Side::Left ? n_left_ : n_right_;
        double n_probe = b == Side::Left ? n_right_ : n_left_;

        Path build;
        Flow fb = source(b);
        side_prefix(build, fb, b);
        step_module(build, fb, bloom, fb.tuples, true);
        step_module(build, fb, align, fb.tuples, true);
        close(build, est_.blocking_seconds);

        double pass = 0.0;
        if (n_build > 0.0 && n_probe > 0.0) {
            const auto& bp = c_.stages[bloom].module.params;
            double d_build = key_distinct(b, n_build);
            double d_probe = key_distinct(p, n_probe);
            double t = std::min(1.0, d_build / d_probe);
            double fp = bloom_false_positive_rate(bp.bits_per_stage, bp.hashes, d_build, bp.stages);
            pass = t + (1.0 - t) * fp;
        }
        Path probe;
        Flow fp = source(p);
        side_prefix(probe, fp, p);
        step_module(probe, fp, bloom, fp.tuples * pass);
        step_module(probe, fp, align, fp.tuples);
        close(probe, est_.stream_seconds);

        est_.host_seconds = fp.tuples / dev_.host_tuples_per_s;
        Path host;
        Flow fh{fp.tuples, dev_.host_tuples_per_s};
        step(host, fh, std::nullopt, StageRole::Join, dev_.host_tuples_per_s, join_out_, false,
             reported_join_selectivity());
        for (auto role : c_.host_stage->post)
            step(host, fh, std::nullopt, role, std::numeric_limits<double>::infinity(), post_output(role, fh.tuples));
        est_.output_tuples = fh.tuples;
    }
};

} // namespace

double estimate_selectivity(const Expr& e, const StatsLookup& lookup, std::size_t rows)
{
    switch (e.kind) {
    case ExprKind::Cmp: return clamp01(cmp_selectivity(e, lookup, rows));
    case ExprKind::Bool:
        if (e.boolean == BoolOp::Not)
            return clamp01(1.0 - estimate_selectivity(e.children[0], lookup, rows));
        if (e.boolean == BoolOp::And) {
            double s = 1.0;
            for (const auto& c : e.children)
                s *= estimate_selectivity(c, lookup, rows);
            return clamp01(s);
        } else {
            double s = 0.0;
            for (const auto& c : e.children) {
                double x = estimate_selectivity(c, lookup, rows);
                s = s + x - s * x;
            }
            return clamp01(s);
        }
    default: return 1.0;
    }
}

double bloom_false_positive_rate(std::uint64_t m, std::uint32_t k, double n, std::uint32_t stages)
{
    double per_stage = std::pow(1.0 - std::exp(-static_cast<double>(k) * n / static_cast<double>(m)), k);
    return std::pow(per_stage, stages);
}

std::uint32_t merge_levels(double n, std::uint32_t run_capacity)
{
    if (n <= 0.0 || run_capacity == 0)
        return 0;
    double runs = std::ceil(n / run_capacity);
    if (runs <= 1.0)
        return 0;
    return static_cast<std::uint32_t>(std::ceil(std::log2(runs)));
}

CostEstimate estimate_time(const BoundPlan& bp, const CandidatePipeline& c, const StatsCatalog& stats,
                           const DeviceProfile& dev)
{
    return CostModel(bp, c, stats, dev).run();
}

double estimate_energy(const CandidatePipeline& c, const CostEstimate& t, const DeviceProfile& dev)
{
    double e = dev.p_static_w * t.total_seconds + dev.p_reconfig_w * t.reconfig_seconds;
    for (std::size_t i = 0; i < c.stages.size() && i < t.active_seconds.size(); ++i)
        e += dev.p_slot_active_w * c.stages[i].module.slots * t.active_seconds[i];
    return e;
}

CostEstimate estimate(const BoundPlan& bp, const CandidatePipeline& c, const StatsCatalog& stats,
                      const DeviceProfile& dev)
{
    auto t = estimate_time(bp, c, stats, dev);
    t.energy_joules = estimate_energy(c, t, dev);
    return t;
}

std::size_t pick_best(std::span<const CandidatePipeline> cands, std::span<const CostEstimate> estimates)
{
    if (cands.empty() || cands.size() != estimates.size())
        throw Error(ErrorCode::NoCandidates, "nothing to choose from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i) {
        const auto& a = estimates[i];
        const auto& b = estimates[best];
        if (a.total_seconds != b.total_seconds) {
            if (a.total_seconds < b.total_seconds)
                best = i;
        } else if (a.energy_joules != b.energy_joules) {
            if (a.energy_joules < b.energy_joules)
                best = i;
        } else if (cands[i].ordinal < cands[best].ordinal) {
            best = i;
        }
    }
    return best;
}

Selection select_best(const BoundPlan& bp, std::span<const CandidatePipeline> cands, const StatsCatalog& stats,
                      const DeviceProfile& dev)
{
    if (cands.empty())
        throw Error(ErrorCode::NoCandidates, "nothing to choose from");
    Selection sel;
    for (const auto& c : cands)
        sel.estimates.push_back(estimate(bp, c, stats, dev));
    sel.index = pick_best(cands, sel.estimates);
    return sel;
}

SoftwareProfile parse_software_profile(std::string_view json_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    if (!doc.is_object())
        throw Error(ErrorCode::ParseError, "software profile must be a JSON object");
    SoftwareProfile sw;
    std::vector<std::pair<const char*, double*>> fields = {
        {"cpu_tuples_per_s", &sw.cpu_tuples_per_s}, {"p_cpu_w", &sw.p_cpu_w}, {"mem_bytes_per_s", &sw.mem_bytes_per_s}};
    for (const auto& [key, value] : doc.items()) {
        if (key == "comment" && value.is_string())
            continue;
        auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return key == f.first; });
        if (it == fields.end())
            throw Error(ErrorCode::InvalidField, fmt::format("`{}`: unknown field", key));
        if (!value.is_number() || !(value.get<double>() > 0))
            throw Error(ErrorCode::InvalidField, fmt::format("`{}`: expected a positive number", key));
        *it->second = value.get<double>();
    }
    for (const auto& [name, _] : fields)
        if (!doc.contains(name))
            throw Error(ErrorCode::InvalidField, fmt::format("`{}`: missing", name));
    return sw;
}

SoftwareProfile load_software_profile(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::FileNotFound, fmt::format("cannot open {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_software_profile(buf.str());
}

double software_seconds(const BoundPlan& bp, const CostEstimate& fpga, const StatsCatalog& stats,
                        const SoftwareProfile& sw)
{
    double bytes = static_cast<double>(stats_for(stats, bp.left_table).row_count * bp.left_schema.tuple_bytes());
    if (bp.has_join())
        bytes += static_cast<double>(stats_for(stats, *bp.right_table).row_count * bp.right_schema->tuple_bytes());
    double tuples = 0.0;
    for (const auto& s : fpga.stages)
        tuples += s.input_tuples;
    return bytes / sw.mem_bytes_per_s + tuples / sw.cpu_tuples_per_s;
}

} // namespace sqf
