#include "sqf/library/library.hpp"

#include "sqf/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace sqf {

namespace {

constexpr std::array<std::pair<ModuleKind, std::string_view>, kModuleKindCount> kKindNames = {{
    {ModuleKind::Restriction, "RESTRICTION"},
    {ModuleKind::Alu, "ALU"},
    {ModuleKind::Aggregate, "AGGREGATE"},
    {ModuleKind::Reorder, "REORDER"},
    {ModuleKind::Sort, "SORT"},
    {ModuleKind::MergeJoin, "MERGE_JOIN"},
    {ModuleKind::HashJoin, "HASH_JOIN"},
    {ModuleKind::BloomCascade, "BLOOM_CASCADE"},
    {ModuleKind::Align, "ALIGN"},
    {ModuleKind::Passthrough, "PASSTHROUGH"},
}};

constexpr std::array<std::string_view, 6> kFields = {"kind",           "base_slots",     "slots_per_unit",
                                                     "bitstream_bytes_per_slot", "tuples_per_cycle", "max_clock_hz"};

std::uint32_t ceil_div(std::uint32_t a, std::uint32_t b) { return (a + b - 1) / b; }

[[noreturn]] void invalid(std::string_view field, const std::string& why)
{
    throw Error(ErrorCode::InvalidField, fmt::format("`{}`: {}", field, why));
}

std::uint64_t read_uint(const nlohmann::json& rec, std::string_view field, bool allow_zero)
{
    const auto& v = rec.at(std::string(field));
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        invalid(field, "expected a non-negative integer");
    auto n = v.get<std::uint64_t>();
    if (!allow_zero && n == 0)
        invalid(field, "must be positive");
    return n;
}

double read_positive(const nlohmann::json& rec, std::string_view field)
{
    const auto& v = rec.at(std::string(field));
    double d = 0;
    if (v.is_number()) {
        d = v.get<double>();
    } else if (v.is_string()) {
        auto s = v.get<std::string>();
        auto slash = s.find('/');
        std::uint64_t p = 0, q = 0;
        bool ok = slash != std::string::npos;
        if (ok) {
            auto [p1, e1] = std::from_chars(s.data(), s.data() + slash, p);
            auto [p2, e2] = std::from_chars(s.data() + slash + 1, s.data() + s.size(), q);
            ok = e1 == std::errc{} && e2 == std::errc{} && p1 == s.data() + slash && p2 == s.data() + s.size() && q > 0;
        }
        if (!ok)
            invalid(field, fmt::format("`{}` is not a rational p/q", s));
        d = static_cast<double>(p) / static_cast<double>(q);
    } else {
        invalid(field, "expected a number");
    }
    if (!(d > 0) || !std::isfinite(d))
        invalid(field, "must be positive");
    return d;
}

} // namespace

std::string_view module_kind_name(ModuleKind kind)
{
    for (auto [k, name] : kKindNames)
        if (k == kind)
            return name;
    return "?";
}

std::optional<ModuleKind> parse_module_kind(std::string_view name)
{
    for (auto [k, n] : kKindNames)
        if (n == name)
            return k;
    return std::nullopt;
}

bool module_kind_optional(ModuleKind kind)
{
    return kind == ModuleKind::BloomCascade || kind == ModuleKind::Align;
}

const ModuleSpec& ModuleLibrary::spec(ModuleKind kind) const
{
    auto it = specs_.find(kind);
    if (it == specs_.end())
        throw Error(ErrorCode::UnknownModuleKind, fmt::format("{} is not in the library", module_kind_name(kind)));
    return it->second;
}

void ModuleLibrary::add(const ModuleSpec& spec)
{
    if (!specs_.emplace(spec.kind, spec).second)
        throw Error(ErrorCode::DuplicateKind, std::string(module_kind_name(spec.kind)));
}

ModuleLibrary parse_library(std::string_view json_text, const LibraryOptions& options)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    if (!doc.is_array())
        throw Error(ErrorCode::ParseError, "library must be a JSON array");

    ModuleLibrary lib;
    std::string comment;
    for (const auto& rec : doc) {
        if (rec.is_string()) {
            if (!comment.empty())
                comment += '\n';
            comment += rec.get<std::string>();
            continue;
        }
        if (!rec.is_object())
            throw Error(ErrorCode::ParseError, "library entries must be objects or comment strings");
        for (const auto& [key, value] : rec.items()) {
            bool known = false;
            for (auto f : kFields)
                known = known || key == f;
            if (!known)
                invalid(key, "unknown field");
        }
        for (auto f : kFields)
            if (!rec.contains(std::string(f)))
                invalid(f, "missing");
        const auto& kind_v = rec.at("kind");
        if (!kind_v.is_string())
            invalid("kind", "expected a string");
        auto kind = parse_module_kind(kind_v.get<std::string>());
        if (!kind)
            invalid("kind", fmt::format("unknown module kind `{}`", kind_v.get<std::string>()));

        ModuleSpec spec;
        spec.kind = *kind;
        auto base = read_uint(rec, "base_slots", false);
        auto per_unit = read_uint(rec, "slots_per_unit", true);
        if (base > 1024 || per_unit > 1024)
            invalid(base > 1024 ? "base_slots" : "slots_per_unit", "unreasonably large");
        spec.base_slots = static_cast<std::uint32_t>(base);
        spec.slots_per_unit = static_cast<std::uint32_t>(per_unit);
        spec.bitstream_bytes_per_slot = read_uint(rec, "bitstream_bytes_per_slot", false);
        spec.tuples_per_cycle = read_positive(rec, "tuples_per_cycle");
        if (spec.tuples_per_cycle > 4.0)
            invalid("tuples_per_cycle", "must not exceed 4");
        spec.max_clock_hz = read_positive(rec, "max_clock_hz");
        lib.add(spec);
    }
    if (options.require_all_kinds)
        for (auto [kind, name] : kKindNames)
            if (!module_kind_optional(kind) && !lib.has(kind))
                throw Error(ErrorCode::MissingKind, std::string(name));
    lib.set_comment(std::move(comment));
    return lib;
}

ModuleLibrary load_library(const std::filesystem::path& path, const LibraryOptions& options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::FileNotFound, fmt::format("cannot open {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_library(buf.str(), options);
}

std::uint32_t module_units(ModuleKind kind, const ModuleParams& p)
{
    auto out_of_range = [&](const std::string& what) {
        throw Error(ErrorCode::ParamOutOfRange, fmt::format("{}: {}", module_kind_name(kind), what));
    };
    switch (kind) {
    case ModuleKind::Restriction:
        if (p.terms < 1 || p.terms > kMaxRestrictionTerms)
            out_of_range(fmt::format("{} predicate terms (allowed 1..{})", p.terms, kMaxRestrictionTerms));
        return ceil_div(p.terms, 4) - 1;
    case ModuleKind::Alu:
        if (p.expr_nodes > kMaxAluNodes)
            out_of_range(fmt::format("{} expression nodes (allowed 0..{})", p.expr_nodes, kMaxAluNodes));
        return p.expr_nodes == 0 ? 0 : ceil_div(p.expr_nodes, 4) - 1;
    case ModuleKind::Aggregate:
        return p.grouped ? 1 : 0;
    case ModuleKind::Sort:
        if (p.run_capacity < kSortBlock || p.run_capacity > kMaxRunCapacity || p.run_capacity % kSortBlock != 0)
            out_of_range(fmt::format("run capacity {} (multiples of {} up to {})", p.run_capacity, kSortBlock,
                                     kMaxRunCapacity));
        return p.run_capacity / kSortBlock;
    case ModuleKind::BloomCascade:
        if (p.stages < 1 || p.stages > kMaxBloomStages)
            out_of_range(fmt::format("{} stages (allowed 1..{})", p.stages, kMaxBloomStages));
        if (p.hashes < 1 || p.hashes > kMaxBloomHashes)
            out_of_range(fmt::format("{} hashes (allowed 1..{})", p.hashes, kMaxBloomHashes));
        if (p.bits_per_stage < p.hashes || p.bits_per_stage > kMaxBloomBits)
            out_of_range(fmt::format("{} bits per stage", p.bits_per_stage));
        return p.stages - 1;
    case ModuleKind::Align:
        if (p.block_bytes < 8 || (p.block_bytes & (p.block_bytes - 1)) != 0)
            out_of_range(fmt::format("block of {} bytes (power of two >= 8)", p.block_bytes));
        return 0;
    default:
        return 0;
    }
}

ModuleInstance instantiate(const ModuleLibrary& lib, ModuleKind kind, const ModuleParams& params)
{
    ModuleInstance inst;
    inst.spec = lib.spec(kind);
    auto units = module_units(kind, params);
    inst.params = params;
    inst.slots = inst.spec.base_slots + inst.spec.slots_per_unit * units;
    inst.bitstream_bytes = inst.slots * inst.spec.bitstream_bytes_per_slot;
    return inst;
}

std::string ModuleInstance::identity() const
{
    const auto& p = params;
    std::string args;
    switch (kind()) {
    case ModuleKind::Restriction: args = fmt::format("terms={}", p.terms); break;
    case ModuleKind::Alu: args = fmt::format("nodes={}", p.expr_nodes); break;
    case ModuleKind::Aggregate: args = fmt::format("grouped={}", p.grouped ? 1 : 0); break;
    case ModuleKind::Sort: args = fmt::format("run={}", p.run_capacity); break;
    case ModuleKind::BloomCascade:
        args = fmt::format("stages={},m={},k={}", p.stages, p.bits_per_stage, p.hashes);
        break;
    case ModuleKind::Align: args = fmt::format("block={},hash={}", p.block_bytes, p.with_hash ? 1 : 0); break;
    default: break;
    }
    return fmt::format("{}({})", module_kind_name(kind()), args);
}

} // namespace sqf
