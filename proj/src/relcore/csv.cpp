#include "sqf/relcore/csv.hpp"

#include "sqf/error.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <sstream>
#include <vector>

namespace sqf {

namespace {

std::vector<std::string_view> split_cells(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::optional<ColumnType> parse_type(std::string_view text)
{
    if (iequals(text, "INT"))
        return ColumnType::integer();
    if (text.size() < 7 || !iequals(text.substr(0, 5), "CHAR(") || text.back() != ')')
        return std::nullopt;
    auto digits = text.substr(5, text.size() - 6);
    std::uint32_t width = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), width);
    if (ec != std::errc{} || ptr != digits.data() + digits.size())
        return std::nullopt;
    if (width < 1 || width > kMaxCharWidth)
        return std::nullopt;
    return ColumnType{TypeKind::Char, width};
}

std::optional<Column> parse_header_cell(std::string_view cell)
{
    auto colon = cell.find(':');
    if (colon == std::string_view::npos)
        return std::nullopt;
    auto name = cell.substr(0, colon);
    if (!is_identifier(name))
        return std::nullopt;
    auto type = parse_type(cell.substr(colon + 1));
    if (!type)
        return std::nullopt;
    return Column{std::string(name), *type};
}

bool looks_like_header(std::string_view line)
{
    for (auto cell : split_cells(line))
        if (!parse_header_cell(cell))
            return false;
    return true;
}

bool printable_ascii(std::string_view s)
{
    for (char c : s) {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x20 || u > 0x7e)
            return false;
    }
    return true;
}

} // namespace

Schema parse_header(std::string_view line)
{
    std::vector<Column> columns;
    auto cells = split_cells(line);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto col = parse_header_cell(cells[i]);
        if (!col)
            throw MalformedCellError(1, i + 1, fmt::format("bad header cell `{}`", cells[i]));
        for (const auto& prev : columns)
            if (iequals(prev.name, col->name))
                throw MalformedCellError(1, i + 1, fmt::format("duplicate column `{}`", col->name));
        columns.push_back(std::move(*col));
    }
    return Schema(std::move(columns));
}

CsvResult parse_csv(std::string_view text, const std::optional<Schema>& declared, const CsvOptions& options)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }

    std::size_t first_data = 0;
    Schema schema;
    if (declared) {
        schema = *declared;
        if (!lines.empty() && looks_like_header(lines[0])) {
            auto file_schema = parse_header(lines[0]);
            bool match = file_schema.arity() == schema.arity();
            for (std::size_t i = 0; match && i < schema.arity(); ++i)
                match = iequals(file_schema.column(i).name, schema.column(i).name) &&
                        file_schema.column(i).type == schema.column(i).type;
            if (!match)
                throw Error(ErrorCode::HeaderMismatch,
                            fmt::format("file header `{}` differs from declared `{}`", lines[0], schema.header()));
            first_data = 1;
        }
    } else {
        if (lines.empty())
            throw MalformedCellError(1, 1, "missing header line");
        schema = parse_header(lines[0]);
        first_data = 1;
    }

    CsvResult result{Table(schema), 0};
    std::vector<Value> row(schema.arity());
    for (std::size_t li = first_data; li < lines.size(); ++li) {
        std::size_t line_no = li + 1;
        auto cells = split_cells(lines[li]);
        if (cells.size() != schema.arity())
            throw MalformedCellError(line_no, std::min(cells.size(), schema.arity()) + 1,
                                     fmt::format("expected {} cells, found {}", schema.arity(), cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto cell = cells[c];
            const auto& type = schema.column(c).type;
            if (type.is_int()) {
                std::int64_t v = 0;
                bool ok = !cell.empty() && cell.front() != '+';
                if (ok) {
                    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                    ok = ec == std::errc{} && ptr == cell.data() + cell.size();
                }
                if (!ok)
                    throw MalformedCellError(line_no, c + 1, fmt::format("`{}` is not an INT", cell));
                row[c] = v;
            } else {
                if (!printable_ascii(cell))
                    throw MalformedCellError(line_no, c + 1, "CHAR cell is not printable ASCII");
                if (cell.size() > type.width) {
                    if (options.strict)
                        throw Error(ErrorCode::CharOverflow,
                                    fmt::format("line {}, column {}: {} bytes exceed CHAR({})", line_no, c + 1,
                                                cell.size(), type.width));
                    cell = cell.substr(0, type.width);
                    ++result.truncated_cells;
                }
                row[c] = std::string(cell);
            }
        }
        result.table.append_row(row);
    }
    return result;
}

CsvResult load_csv(const std::filesystem::path& path, const std::optional<Schema>& declared,
                   const CsvOptions& options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::FileNotFound, fmt::format("cannot open {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), declared, options);
}

void write_csv(const Table& table, std::ostream& out)
{
    out << table.schema().header() << '\n';
    std::string line;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        line.clear();
        for (std::size_t c = 0; c < table.arity(); ++c) {
            if (c)
                line += ',';
            const auto& col = table.column(c);
            if (col.type().is_int())
                line += std::to_string(col.int_at(r));
            else
                line += col.char_at(r);
        }
        line += '\n';
        out << line;
    }
}

std::string to_csv(const Table& table)
{
    std::ostringstream out;
    write_csv(table, out);
    return out.str();
}

} // namespace sqf
