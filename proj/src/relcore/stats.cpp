#include "sqf/relcore/stats.hpp"

#include <algorithm>
#include <string_view>
#include <unordered_set>

namespace sqf {

TableStats table_stats(const Table& t)
{
    TableStats stats;
    stats.row_count = t.rows();
    stats.columns.resize(t.arity());
    for (std::size_t c = 0; c < t.arity(); ++c) {
        const auto& col = t.column(c);
        auto& cs = stats.columns[c];
        if (t.rows() == 0)
            continue;
        if (col.type().is_int()) {
            auto values = col.ints();
            std::unordered_set<std::int64_t> seen(values.begin(), values.end());
            cs.distinct_count = seen.size();
            auto [lo, hi] = std::minmax_element(values.begin(), values.end());
            cs.min = *lo;
            cs.max = *hi;
            cs.non_decreasing = std::is_sorted(values.begin(), values.end());
        } else {
            std::unordered_set<std::string_view> seen;
            std::string_view lo = col.char_at(0);
            std::string_view hi = lo;
            for (std::size_t r = 0; r < t.rows(); ++r) {
                auto v = col.char_at(r);
                seen.insert(v);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                if (r > 0 && v < col.char_at(r - 1))
                    cs.non_decreasing = false;
            }
            cs.distinct_count = seen.size();
            cs.min = std::string(lo);
            cs.max = std::string(hi);
        }
    }
    return stats;
}

} // namespace sqf
