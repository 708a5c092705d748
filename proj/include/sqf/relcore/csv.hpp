#pragma once

#include "sqf/relcore/table.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

namespace sqf {

// CSV dialect: comma separator, no quoting or escapes, '\n' line terminator,
// printable ASCII only. The first line is a typed header
// `name:INT,name:CHAR(n),...`.

struct CsvOptions {
    /// Strict mode rejects CHAR cells longer than the declared width;
    /// lenient mode truncates them and counts the truncation.
    bool strict = true;
};

struct CsvResult {
    Table table;
    std::size_t truncated_cells = 0;
};

/// Parses one header line. Errors are MalformedCell on line 1.
Schema parse_header(std::string_view line);

/// When `declared` is given and the first line is a typed header, the two
/// must agree (HeaderMismatch otherwise). When the first line is not a
/// header, it is read as data under the declared schema.
CsvResult parse_csv(std::string_view text, const std::optional<Schema>& declared = std::nullopt,
                    const CsvOptions& options = {});

CsvResult load_csv(const std::filesystem::path& path, const std::optional<Schema>& declared = std::nullopt,
                   const CsvOptions& options = {});

/// Header line, then one line per row, each terminated by '\n'.
void write_csv(const Table& table, std::ostream& out);
std::string to_csv(const Table& table);

} // namespace sqf
