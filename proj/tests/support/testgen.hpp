#pragma once

// Hand-rolled generators and harness helpers shared by the property tests
// and the acceptance binary.

#include "sqf/engine/engine.hpp"
#include "sqf/error.hpp"
#include "sqf/fabric/fabric.hpp"
#include "sqf/frontend/binder.hpp"
#include "sqf/library/library.hpp"
#include "sqf/planner/planner.hpp"
#include "sqf/relcore/stats.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sqf::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [lo, hi] by modulo reduction; bias is irrelevant here and
    /// the stream is identical on every standard library.
    std::int64_t range(std::int64_t lo, std::int64_t hi)
    {
        auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        if (span == 0)
            return static_cast<std::int64_t>(gen_());
        return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + gen_() % span);
    }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
    bool chance(double p) { return static_cast<double>(gen_() >> 11) * 0x1.0p-53 < p; }
    std::uint64_t next() { return gen_(); }

    template <typename T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

private:
    std::mt19937_64 gen_;
};

struct TableShape {
    std::size_t max_rows = 200;
    std::size_t max_cols = 8;
    std::int64_t key_domain = 0; // 0: derived from row count
    /// Probability that the rows are ordered on the key column c0.
    double sorted_key = 0.3;
    /// Probability that an INT column holds values near the INT limits.
    double huge_column = 0.08;
};

/// Column c0 is always an INT key; others are INT or CHAR(1..6).
Table random_table(Rng& rng, const TableShape& shape);

struct QueryShape {
    double join = 0.5;
    double aggregate = 0.35;
    double star = 0.05;
    double where = 0.8;
    double order_by = 0.4;
    std::size_t max_terms = 5;
};

/// SQL text over tables t0 (and t1 when joining). Always binds.
std::string random_query(Rng& rng, const TableCatalog& tables, const QueryShape& shape);

/// A random catalog: t0, t1 and the matching statistics.
struct Dataset {
    TableCatalog tables;
    StatsCatalog stats;
    Catalog catalog;
};
Dataset random_dataset(Rng& rng, const TableShape& left, const TableShape& right);
Dataset dataset_of(TableCatalog tables);

/// Result of running one evaluator: a table or an error.
struct Outcome {
    std::optional<Table> table;
    std::optional<ErrorCode> error;
    std::optional<std::size_t> error_row;
    std::string message;
};

Outcome run_oracle(const BoundPlan& bp, const TableCatalog& tables);
/// Allocates, reconfigures, executes and releases on `fabric`.
Outcome run_candidate(const BoundPlan& bp, const CandidatePipeline& c, const TableCatalog& tables,
                      FabricState& fabric, const DeviceProfile& dev);

/// Agreement of a candidate with the oracle. Results compare as multisets
/// (plus exact order on the ORDER BY keys); errors compare by class, and by
/// row when the plan has no join (row positions inside joined streams
/// depend on the join algorithm).
bool agrees(const BoundPlan& bp, const Outcome& engine, const Outcome& oracle, std::string* why = nullptr);

/// Library with every kind, using the shipped sizing rule.
ModuleLibrary full_library();
DeviceProfile test_device();

/// Path of the repository root (compile-time constant).
std::string source_dir();

} // namespace sqf::testing
