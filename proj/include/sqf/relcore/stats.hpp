#pragma once

#include "sqf/relcore/table.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sqf {

struct ColumnStats {
    std::size_t distinct_count = 0;
    std::optional<Value> min;
    std::optional<Value> max;
    /// True when the column is non-decreasing in row order (always true for
    /// fewer than two rows). Lets the planner skip sorts on ordered inputs.
    bool non_decreasing = true;
};

struct TableStats {
    std::size_t row_count = 0;
    std::vector<ColumnStats> columns;
};

/// Exact statistics, computed by a full scan.
TableStats table_stats(const Table& t);

/// Keyed by lower-cased table name.
using StatsCatalog = std::map<std::string, TableStats>;

} // namespace sqf
