#include "sqf/relcore/table.hpp"

#include "sqf/error.hpp"
#include "sqf/hash.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fmt/format.h>
#include <stdexcept>

namespace sqf {

ColumnType ColumnType::character(std::uint32_t width)
{
    if (width < 1 || width > kMaxCharWidth)
        throw Error(ErrorCode::InvalidSchema, fmt::format("CHAR width {} outside [1, {}]", width, kMaxCharWidth));
    return {TypeKind::Char, width};
}

std::string ColumnType::to_string() const
{
    return is_int() ? std::string("INT") : fmt::format("CHAR({})", width);
}

bool is_identifier(std::string_view s)
{
    if (s.empty())
        return false;
    auto first = static_cast<unsigned char>(s.front());
    if (!(std::isalpha(first) || first == '_'))
        return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return u < 128 && (std::isalnum(u) || u == '_');
    });
}

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

Schema::Schema(std::vector<Column> columns) : columns_(std::move(columns))
{
    if (columns_.empty())
        throw Error(ErrorCode::InvalidSchema, "schema needs at least one column");
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto& c = columns_[i];
        if (!is_identifier(c.name))
            throw Error(ErrorCode::InvalidSchema, fmt::format("`{}` is not an identifier", c.name));
        if (c.type.is_int() && c.type.width != kIntWidth)
            throw Error(ErrorCode::InvalidSchema, fmt::format("INT column `{}` must be 8 bytes", c.name));
        if (c.type.is_char() && (c.type.width < 1 || c.type.width > kMaxCharWidth))
            throw Error(ErrorCode::InvalidSchema, fmt::format("CHAR column `{}` has width {}", c.name, c.type.width));
        for (std::size_t j = 0; j < i; ++j)
            if (iequals(columns_[j].name, c.name))
                throw Error(ErrorCode::InvalidSchema, fmt::format("duplicate column `{}`", c.name));
    }
}

std::optional<std::size_t> Schema::find(std::string_view name) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (iequals(columns_[i].name, name))
            return i;
    return std::nullopt;
}

std::size_t Schema::tuple_bytes() const noexcept
{
    std::size_t total = 0;
    for (const auto& c : columns_)
        total += c.type.width;
    return total;
}

std::string Schema::header() const
{
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i)
            out += ',';
        out += columns_[i].name;
        out += ':';
        out += columns_[i].type.to_string();
    }
    return out;
}

std::string value_to_string(const Value& v)
{
    if (const auto* i = std::get_if<std::int64_t>(&v))
        return std::to_string(*i);
    return std::get<std::string>(v);
}

// ---------------------------------------------------------------------------

std::size_t ColumnData::size() const noexcept
{
    return type_.is_int() ? ints_.size() : bytes_.size() / type_.width;
}

std::string_view ColumnData::char_at(std::size_t row) const
{
    auto padded = padded_at(row);
    auto end = padded.find_last_not_of('\0');
    return end == std::string_view::npos ? std::string_view{} : padded.substr(0, end + 1);
}

Value ColumnData::value_at(std::size_t row) const
{
    if (type_.is_int())
        return ints_[row];
    return std::string(char_at(row));
}

void ColumnData::push_char(std::string_view s)
{
    std::size_t old = bytes_.size();
    bytes_.resize(old + type_.width, '\0');
    std::memcpy(bytes_.data() + old, s.data(), std::min<std::size_t>(s.size(), type_.width));
}

void ColumnData::push_padded(std::string_view padded)
{
    bytes_.insert(bytes_.end(), padded.begin(), padded.begin() + type_.width);
}

void ColumnData::push_value(const Value& v)
{
    if (type_.is_int()) {
        const auto* i = std::get_if<std::int64_t>(&v);
        if (!i)
            throw Error(ErrorCode::TypeError, "expected INT value");
        push_int(*i);
        return;
    }
    const auto* s = std::get_if<std::string>(&v);
    if (!s)
        throw Error(ErrorCode::TypeError, "expected CHAR value");
    if (s->size() > type_.width)
        throw Error(ErrorCode::CharOverflow, fmt::format("value `{}` exceeds CHAR({})", *s, type_.width));
    push_char(*s);
}

void ColumnData::append_from(const ColumnData& other, std::size_t row)
{
    if (type_.is_int())
        ints_.push_back(other.ints_[row]);
    else
        push_padded(other.padded_at(row));
}

void ColumnData::reserve(std::size_t rows)
{
    if (type_.is_int())
        ints_.reserve(rows);
    else
        bytes_.reserve(rows * type_.width);
}

// ---------------------------------------------------------------------------

Table::Table(Schema schema) : schema_(std::move(schema))
{
    columns_.reserve(schema_.arity());
    for (const auto& c : schema_.columns())
        columns_.emplace_back(c.type);
}

Row Table::row(std::size_t r) const
{
    Row out;
    out.reserve(columns_.size());
    for (const auto& c : columns_)
        out.push_back(c.value_at(r));
    return out;
}

std::vector<Row> Table::to_rows() const
{
    std::vector<Row> out;
    out.reserve(rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        out.push_back(row(r));
    return out;
}

void Table::append_row(std::span<const Value> row)
{
    if (row.size() != columns_.size())
        throw Error(ErrorCode::TypeError, fmt::format("row has {} cells, schema has {}", row.size(), columns_.size()));
    for (std::size_t c = 0; c < row.size(); ++c) {
        bool ok = schema_.column(c).type.is_int() ? std::holds_alternative<std::int64_t>(row[c])
                                                  : std::holds_alternative<std::string>(row[c]);
        if (!ok)
            throw Error(ErrorCode::TypeError, fmt::format("cell {} does not match column type", c));
    }
    for (std::size_t c = 0; c < row.size(); ++c)
        columns_[c].push_value(row[c]);
    ++rows_;
}

void Table::append_row_from(const Table& src, std::size_t row)
{
    for (std::size_t c = 0; c < columns_.size(); ++c)
        columns_[c].append_from(src.columns_[c], row);
    ++rows_;
}

void Table::append_table(const Table& other)
{
    reserve(rows_ + other.rows_);
    for (std::size_t r = 0; r < other.rows_; ++r)
        append_row_from(other, r);
}

void Table::reserve(std::size_t rows)
{
    for (auto& c : columns_)
        c.reserve(rows);
}

ColumnData ColumnData::gather(std::span<const std::uint32_t> indices) const
{
    ColumnData out(type_);
    if (type_.is_int()) {
        out.ints_.resize(indices.size());
        for (std::size_t i = 0; i < indices.size(); ++i)
            out.ints_[i] = ints_[indices[i]];
    } else {
        const std::size_t w = type_.width;
        out.bytes_.resize(indices.size() * w);
        for (std::size_t i = 0; i < indices.size(); ++i)
            std::memcpy(out.bytes_.data() + i * w, bytes_.data() + indices[i] * w, w);
    }
    return out;
}

Table Table::gather(std::span<const std::uint32_t> indices) const
{
    std::vector<ColumnData> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_)
        cols.push_back(c.gather(indices));
    return from_columns(schema_, std::move(cols));
}

Table Table::from_columns(Schema schema, std::vector<ColumnData> columns)
{
    if (columns.size() != schema.arity())
        throw std::invalid_argument("from_columns: arity mismatch");
    std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (!(columns[i].type() == schema.column(i).type) || columns[i].size() != rows)
            throw std::invalid_argument("from_columns: column does not match schema");
    Table out;
    out.schema_ = std::move(schema);
    out.columns_ = std::move(columns);
    out.rows_ = rows;
    return out;
}

Table Table::renamed(Schema schema) &&
{
    return from_columns(std::move(schema), std::move(columns_));
}

Table Table::slice(std::size_t begin, std::size_t end) const
{
    Table out(schema_);
    end = std::min(end, rows_);
    out.reserve(end > begin ? end - begin : 0);
    for (std::size_t r = begin; r < end; ++r)
        out.append_row_from(*this, r);
    return out;
}

Table Table::from_rows(Schema schema, std::span<const Row> rows)
{
    Table out(std::move(schema));
    out.reserve(rows.size());
    for (const auto& r : rows)
        out.append_row(r);
    return out;
}

std::uint64_t row_hash(const Table& t, std::size_t row)
{
    std::uint64_t h = hash::kFnvOffset;
    for (std::size_t c = 0; c < t.arity(); ++c) {
        const auto& col = t.column(c);
        if (col.type().is_int()) {
            auto v = static_cast<std::uint64_t>(col.int_at(row));
            for (int b = 0; b < 8; ++b) {
                h ^= (v >> (8 * b)) & 0xffU;
                h *= hash::kFnvPrime;
            }
        } else {
            h = hash::fnv1a(col.padded_at(row), h);
        }
        h = hash::fmix64(h + c);
    }
    return h;
}

std::uint64_t table_checksum(const Table& t)
{
    std::uint64_t sum = 0;
    for (std::size_t r = 0; r < t.rows(); ++r)
        sum += row_hash(t, r);
    return sum;
}

std::vector<Row> canonical_rows(const Table& t)
{
    auto rows = t.to_rows();
    std::sort(rows.begin(), rows.end());
    return rows;
}

bool same_multiset(const Table& a, const Table& b)
{
    if (a.rows() != b.rows() || a.arity() != b.arity())
        return false;
    return canonical_rows(a) == canonical_rows(b);
}

} // namespace sqf
