#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace sqf {

enum class ModuleKind : std::uint8_t {
    Restriction,
    Alu,
    Aggregate,
    Reorder,
    Sort,
    MergeJoin,
    HashJoin,
    BloomCascade,
    Align,
    Passthrough,
};

inline constexpr std::size_t kModuleKindCount = 10;

std::string_view module_kind_name(ModuleKind kind);
std::optional<ModuleKind> parse_module_kind(std::string_view name);
/// BLOOM_CASCADE and ALIGN belong to the co-design extension.
bool module_kind_optional(ModuleKind kind);

struct ModuleSpec {
    ModuleKind kind = ModuleKind::Passthrough;
    std::uint32_t base_slots = 1;
    std::uint32_t slots_per_unit = 0;
    std::uint64_t bitstream_bytes_per_slot = 1;
    double tuples_per_cycle = 1.0;
    double max_clock_hz = 1.0;

    bool operator==(const ModuleSpec&) const = default;
};

/// Kind-specific parameters. Only the fields of the instance's kind are
/// read; the rest stay zero.
struct ModuleParams {
    std::uint32_t terms = 0;          // RESTRICTION: predicate terms
    std::uint32_t expr_nodes = 0;     // ALU: arithmetic nodes
    bool grouped = false;             // AGGREGATE: GROUP BY present
    std::uint32_t run_capacity = 0;   // SORT: tuples per run
    std::uint32_t stages = 0;         // BLOOM_CASCADE
    std::uint64_t bits_per_stage = 0; // BLOOM_CASCADE
    std::uint32_t hashes = 0;         // BLOOM_CASCADE
    std::uint32_t block_bytes = 0;    // ALIGN
    bool with_hash = false;           // ALIGN

    bool operator==(const ModuleParams&) const = default;
};

struct ModuleInstance {
    ModuleSpec spec;
    ModuleParams params;
    std::uint32_t slots = 0;
    std::uint64_t bitstream_bytes = 0;
    std::optional<double> selectivity_hint;

    ModuleKind kind() const noexcept { return spec.kind; }
    /// Structural identity `KIND(k=v,...)`; instances with the same identity
    /// load the same partial bitstream.
    std::string identity() const;

    bool operator==(const ModuleInstance&) const = default;
};

inline constexpr std::uint32_t kMaxRestrictionTerms = 8;
inline constexpr std::uint32_t kMaxAluNodes = 16;
inline constexpr std::uint32_t kSortBlock = 1024;
inline constexpr std::uint32_t kMaxRunCapacity = 64 * 1024;
inline constexpr std::uint32_t kMaxBloomStages = 8;
inline constexpr std::uint32_t kMaxBloomHashes = 16;
inline constexpr std::uint64_t kMaxBloomBits = std::uint64_t{1} << 24;

class ModuleLibrary {
public:
    ModuleLibrary() = default;

    bool has(ModuleKind kind) const { return specs_.count(kind) != 0; }
    const ModuleSpec& spec(ModuleKind kind) const;
    const std::map<ModuleKind, ModuleSpec>& specs() const noexcept { return specs_; }
    std::size_t size() const noexcept { return specs_.size(); }
    const std::string& comment() const noexcept { return comment_; }

    void add(const ModuleSpec& spec);
    void remove(ModuleKind kind) { specs_.erase(kind); }
    void set_comment(std::string c) { comment_ = std::move(c); }

private:
    std::map<ModuleKind, ModuleSpec> specs_;
    std::string comment_;
};

struct LibraryOptions {
    /// When false, missing required kinds are tolerated; the planner then
    /// reports NoCandidates for queries that need them.
    bool require_all_kinds = true;
};

/// JSON array of spec records with exactly the fields kind, base_slots,
/// slots_per_unit, bitstream_bytes_per_slot, tuples_per_cycle (number or
/// "p/q"), max_clock_hz. Bare strings in the array are comments.
ModuleLibrary parse_library(std::string_view json_text, const LibraryOptions& options = {});
ModuleLibrary load_library(const std::filesystem::path& path, const LibraryOptions& options = {});

/// slots = base_slots + slots_per_unit * units(params);
/// bitstream_bytes = slots * bitstream_bytes_per_slot.
///
/// units: RESTRICTION ceil(terms/4)-1, ALU ceil(nodes/4)-1 (0 for no
/// nodes), AGGREGATE 1 when grouped, SORT run_capacity/1024,
/// BLOOM_CASCADE stages-1, 0 for every other kind.
ModuleInstance instantiate(const ModuleLibrary& lib, ModuleKind kind, const ModuleParams& params);

std::uint32_t module_units(ModuleKind kind, const ModuleParams& params);

} // namespace sqf
