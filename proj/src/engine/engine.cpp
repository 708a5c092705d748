#include "sqf/engine/engine.hpp"

#include "sqf/engine/align.hpp"
#include "sqf/engine/bloom.hpp"
#include "sqf/engine/operators.hpp"
#include "sqf/error.hpp"
#include "sqf/hash.hpp"
#include "sqf/simd/kernels.hpp"

#include <chrono>
#include <fmt/format.h>
#include <unordered_set>

namespace sqf {

const Table& find_table(const TableCatalog& tables, const std::string& name)
{
    auto it = tables.find(to_lower(name));
    if (it == tables.end())
        throw Error(ErrorCode::UnknownTable, fmt::format("table `{}` is not loaded", name));
    return it->second;
}

namespace {

/// A stream that starts as a borrowed source table and is replaced by each
/// stage's output.
class Stream {
public:
    explicit Stream(const Table& source) : view_(&source) {}
    Stream(const Stream&) = delete;
    Stream& operator=(const Stream&) = delete;

    const Table& get() const { return *view_; }
    void set(Table t)
    {
        owned_ = std::move(t);
        view_ = &owned_;
    }
    Table take() { return view_ == &owned_ ? std::move(owned_) : *view_; }

private:
    const Table* view_;
    Table owned_;
};

double ratio(std::size_t out, std::size_t in) { return in == 0 ? 1.0 : static_cast<double>(out) / in; }

class Executor {
public:
    Executor(const BoundPlan& bp, const CandidatePipeline& c, const TableCatalog& tables)
        : bp_(bp), c_(c), left_(find_table(tables, bp.left_table))
    {
        if (bp.has_join())
            right_.emplace(find_table(tables, *bp.right_table));
        report_.tag = c.tag();
        report_.order_specified = !bp.order_by.empty();
    }

    ExecResult run()
    {
        switch (c_.join_algo) {
        case JoinAlgo::None:
            for (const auto& st : c_.stages)
                apply(st.role, &st.module, left_, false);
            break;
        case JoinAlgo::HashFpga:
        case JoinAlgo::MergeFpga: run_fpga_join(); break;
        case JoinAlgo::HashCodesign: run_codesign(); break;
        }
        Stream& out = c_.join_algo == JoinAlgo::None ? left_ : joined_;
        Table result = out.take().renamed(bp_.output_schema);
        report_.output_rows = result.rows();
        return {std::move(result), std::move(report_)};
    }

private:
    const BoundPlan& bp_;
    const CandidatePipeline& c_;
    Stream left_;
    std::optional<Stream> right_;
    Table empty_;
    Stream joined_{empty_};
    ExecReport report_;

    void record(std::string name, StageRole role, bool host, std::size_t in, std::size_t out,
                std::optional<double> selectivity = std::nullopt, bool build_phase = false,
                std::uint32_t passes = 0)
    {
        StageReport r;
        r.name = std::move(name);
        r.role = role;
        r.host = host;
        r.build_phase = build_phase;
        r.input_tuples = in;
        r.output_tuples = out;
        r.selectivity = selectivity.value_or(ratio(out, in));
        r.merge_passes = passes;
        report_.stages.push_back(std::move(r));
    }

    static std::string stage_name(const ModuleInstance* m, StageRole role)
    {
        return fmt::format("{}:{}", m ? module_kind_name(m->kind()) : std::string_view("HOST"),
                           stage_role_name(role));
    }

    std::string joined_column_name(std::size_t i) const
    {
        if (i < bp_.left_arity())
            return fmt::format("{}.{}", bp_.left_table, bp_.left_schema.column(i).name);
        return fmt::format("{}.{}", *bp_.right_table, bp_.right_schema->column(i - bp_.left_arity()).name);
    }

    void filter(Stream& s, const Expr& predicate, const ColumnBinder& bind, StageRole role, const ModuleInstance* m,
                bool host)
    {
        const Table& in = s.get();
        std::size_t n = in.rows();
        VectorExpr pred(predicate, bind);
        Table out = restrict_rows(in, pred);
        record(stage_name(m, role), role, host, n, out.rows());
        if (out.rows() != n)
            s.set(std::move(out));
    }

    /// One post-join (or single-table) operator over stream `s`.
    void apply(StageRole role, const ModuleInstance* m, Stream& s, bool host)
    {
        ColumnBinder side_bind = [](const ColumnRef& ref) { return ref.index; };
        ColumnBinder joined_bind = [this](const ColumnRef& ref) { return bp_.joined_index(ref); };
        const std::size_t n = s.get().rows();
        switch (role) {
        case StageRole::LeftFilter: filter(s, *bp_.left_filter, side_bind, role, m, host); return;
        case StageRole::RightFilter: filter(s, *bp_.right_filter, side_bind, role, m, host); return;
        case StageRole::JoinedFilter: filter(s, *bp_.joined_filter, joined_bind, role, m, host); return;
        case StageRole::Compute: {
            std::vector<VectorExpr> exprs;
            std::vector<ColumnType> types = bp_.joined_types();
            for (const auto& cc : bp_.computed) {
                exprs.emplace_back(cc.expr, joined_bind);
                types.push_back(ColumnType::integer());
            }
            s.set(append_computed(s.get(), exprs, internal_schema(types)));
            record(stage_name(m, role), role, host, n, n);
            return;
        }
        case StageRole::Aggregate: {
            std::vector<std::string> labels;
            for (const auto& a : bp_.aggregates)
                labels.push_back(a.column ? fmt::format("{}({})", agg_name(a.fn), joined_column_name(*a.column))
                                          : fmt::format("{}(*)", agg_name(a.fn)));
            s.set(aggregate_rows(s.get(), bp_.group_by, bp_.aggregates, labels,
                                 internal_schema(bp_.pre_projection_types())));
            record(stage_name(m, role), role, host, n, s.get().rows());
            return;
        }
        case StageRole::Project: {
            auto pre = bp_.pre_projection_types();
            std::vector<ColumnType> types;
            for (auto i : bp_.projection)
                types.push_back(pre[i]);
            s.set(project_columns(s.get(), bp_.projection, internal_schema(types)));
            record(stage_name(m, role), role, host, n, n);
            return;
        }
        case StageRole::OrderBy: {
            std::vector<SortKey> keys;
            for (const auto& o : bp_.order_by)
                keys.push_back({o.output_index, o.descending});
            std::uint32_t run = m ? m->params.run_capacity : kMaxRunCapacity;
            std::uint32_t passes = 0;
            auto perm = sort_permutation(s.get(), keys, run, &passes);
            s.set(s.get().gather(perm));
            record(stage_name(m, role), role, host, n, n, std::nullopt, false, passes);
            return;
        }
        case StageRole::Passthrough: record(stage_name(m, role), role, host, n, n); return;
        default: throw std::logic_error(fmt::format("stage {} cannot run here", stage_role_name(role)));
        }
    }

    bool is_post(StageRole r) const
    {
        return r == StageRole::JoinedFilter || r == StageRole::Compute || r == StageRole::Aggregate ||
               r == StageRole::Project || r == StageRole::OrderBy || r == StageRole::Passthrough;
    }

    void sort_side(Stream& s, std::size_t key, const ModuleInstance& m, StageRole role)
    {
        SortKey k{key, false};
        std::uint32_t passes = 0;
        std::size_t n = s.get().rows();
        auto perm = sort_permutation(s.get(), std::span(&k, 1), m.params.run_capacity, &passes);
        s.set(s.get().gather(perm));
        record(stage_name(&m, role), role, false, n, n, std::nullopt, false, passes);
    }

    double join_selectivity(std::size_t out) const
    {
        double cross = static_cast<double>(left_.get().rows()) * static_cast<double>(right_->get().rows());
        return cross == 0.0 ? 0.0 : static_cast<double>(out) / cross;
    }

    void run_fpga_join()
    {
        auto [lk, rk] = *bp_.join_keys;
        Schema joined_schema = internal_schema(bp_.joined_types());
        for (const auto& st : c_.stages) {
            switch (st.role) {
            case StageRole::LeftFilter: apply(st.role, &st.module, left_, false); break;
            case StageRole::RightFilter: apply(st.role, &st.module, *right_, false); break;
            case StageRole::SortLeft: sort_side(left_, lk, st.module, st.role); break;
            case StageRole::SortRight: sort_side(*right_, rk, st.module, st.role); break;
            case StageRole::Join: {
                const Table& l = left_.get();
                const Table& r = right_->get();
                Table out = c_.join_algo == JoinAlgo::MergeFpga
                                ? merge_join(l, r, lk, rk, joined_schema)
                                : hash_join(l, r, lk, rk, c_.build_side.value_or(Side::Left), joined_schema);
                record(stage_name(&st.module, st.role), st.role, false, l.rows() + r.rows(), out.rows(),
                       join_selectivity(out.rows()));
                joined_.set(std::move(out));
                break;
            }
            default:
                if (!is_post(st.role))
                    throw std::logic_error("unexpected stage in join pipeline");
                apply(st.role, &st.module, joined_, false);
            }
        }
    }

    void run_codesign()
    {
        auto [lk, rk] = *bp_.join_keys;
        const PipelineStage* bloom = nullptr;
        const PipelineStage* align_stage = nullptr;
        for (const auto& st : c_.stages) {
            if (st.role == StageRole::LeftFilter)
                apply(st.role, &st.module, left_, false);
            else if (st.role == StageRole::RightFilter)
                apply(st.role, &st.module, *right_, false);
            else if (st.role == StageRole::Bloom)
                bloom = &st;
            else if (st.role == StageRole::Align)
                align_stage = &st;
        }
        if (!bloom || !align_stage || !c_.host_stage)
            throw std::logic_error("co-design pipeline lacks its bloom, align or host stage");

        const Side build = c_.build_side.value_or(Side::Left);
        const Table& b = build == Side::Left ? left_.get() : right_->get();
        const Table& p = build == Side::Left ? right_->get() : left_.get();
        const std::size_t bk = build == Side::Left ? lk : rk;
        const std::size_t pk = build == Side::Left ? rk : lk;

        const auto& bp = bloom->module.params;
        BloomCascadeConfig cfg{bp.stages, bp.bits_per_stage, bp.hashes, c_.bloom_seed};
        auto bkeys = b.column(bk).ints();
        std::vector<std::uint64_t> build_keys(bkeys.begin(), bkeys.end());
        BloomCascade cascade = bloom_build(cfg, build_keys);
        std::vector<std::uint64_t> build_hashes(build_keys.size());
        simd::active_kernels().hash_keys(build_keys.data(), build_keys.size(), cascade.stage_seed(0),
                                         build_hashes.data());
        record(stage_name(&bloom->module, StageRole::Bloom), StageRole::Bloom, false, b.rows(), b.rows(),
               std::nullopt, true);

        auto pkeys = p.column(pk).ints();
        std::vector<std::uint64_t> probe_keys(pkeys.begin(), pkeys.end());
        std::vector<std::uint8_t> pass(probe_keys.size());
        std::vector<std::uint64_t> probe_hashes(probe_keys.size());
        cascade.probe_batch(probe_keys, pass.data(), probe_hashes.data());
        std::vector<std::uint32_t> keep(probe_keys.size());
        keep.resize(simd::active_kernels().mask_to_indices(pass.data(), pass.size(), keep.data()));
        Table survivors = p.gather(keep);
        std::vector<std::uint64_t> survivor_hashes;
        survivor_hashes.reserve(keep.size());
        std::unordered_set<std::int64_t> exact(bkeys.begin(), bkeys.end());
        std::uint64_t false_pos = 0;
        for (auto i : keep) {
            survivor_hashes.push_back(probe_hashes[i]);
            false_pos += exact.count(pkeys[i]) == 0;
        }
        report_.bloom_passed = keep.size();
        report_.bloom_false_positives = false_pos;
        record(stage_name(&bloom->module, StageRole::Bloom), StageRole::Bloom, false, p.rows(), keep.size());

        const auto block = align_stage->module.params.block_bytes;
        AlignedStream aligned_build = align(b, block, true, build_hashes);
        record(stage_name(&align_stage->module, StageRole::Align), StageRole::Align, false, b.rows(), b.rows(),
               std::nullopt, true);
        AlignedStream aligned_probe = align(survivors, block, true, survivor_hashes);
        record(stage_name(&align_stage->module, StageRole::Align), StageRole::Align, false, survivors.rows(),
               survivors.rows());

        Table joined = host_hash_join(aligned_build, aligned_probe, bk, pk, build,
                                      internal_schema(bp_.joined_types()));
        record("HASH_JOIN_HOST:join", StageRole::Join, true, survivors.rows() + b.rows(), joined.rows(),
               join_selectivity(joined.rows()));
        joined_.set(std::move(joined));
        for (auto role : c_.host_stage->post)
            apply(role, nullptr, joined_, true);
    }
};

bool placement_matches(const CandidatePipeline& c, const Placement& p)
{
    if (c.stages.size() != p.entries.size())
        return false;
    for (std::size_t i = 0; i < c.stages.size(); ++i)
        if (c.stages[i].module.identity() != p.entries[i].instance.identity())
            return false;
    return true;
}

} // namespace

ExecResult execute_pipeline(const BoundPlan& bp, const CandidatePipeline& c, const TableCatalog& tables,
                            const FabricState& f, const Placement& p, const DeviceProfile& dev,
                            double simulated_seconds)
{
    (void)dev;
    if (!placement_matches(c, p) || !f.is_configured(p))
        throw Error(ErrorCode::NotReconfigured,
                    fmt::format("placement is not configured for candidate {}", c.tag()));
    auto start = std::chrono::steady_clock::now();
    ExecResult r = Executor(bp, c, tables).run();
    r.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.report.simulated_seconds = simulated_seconds;
    return r;
}

} // namespace sqf
