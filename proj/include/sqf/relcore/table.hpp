#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sqf {

inline constexpr std::uint32_t kIntWidth = 8;
inline constexpr std::uint32_t kMaxCharWidth = 64;

enum class TypeKind : std::uint8_t { Int, Char };

struct ColumnType {
    TypeKind kind = TypeKind::Int;
    std::uint32_t width = kIntWidth;

    static ColumnType integer() { return {TypeKind::Int, kIntWidth}; }
    /// Throws InvalidSchema unless 1 <= width <= 64.
    static ColumnType character(std::uint32_t width);

    bool is_int() const noexcept { return kind == TypeKind::Int; }
    bool is_char() const noexcept { return kind == TypeKind::Char; }
    std::string to_string() const;

    friend bool operator==(const ColumnType&, const ColumnType&) = default;
};

struct Column {
    std::string name;
    ColumnType type;

    friend bool operator==(const Column&, const Column&) = default;
};

bool is_identifier(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);

class Schema {
public:
    Schema() = default;
    /// Validates: at least one column, identifiers, names unique ignoring case.
    explicit Schema(std::vector<Column> columns);

    std::size_t arity() const noexcept { return columns_.size(); }
    const Column& column(std::size_t i) const { return columns_.at(i); }
    std::span<const Column> columns() const noexcept { return columns_; }
    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t tuple_bytes() const noexcept;
    /// `name:TYPE,...` as written in CSV headers.
    std::string header() const;

    friend bool operator==(const Schema&, const Schema&) = default;

private:
    std::vector<Column> columns_;
};

/// A cell value. CHAR values hold the unpadded content; the padded form is
/// the content followed by NUL bytes up to the declared width.
using Value = std::variant<std::int64_t, std::string>;
using Row = std::vector<Value>;

std::string value_to_string(const Value& v);

/// Storage of one column. INT cells live in `ints`; CHAR cells live in
/// `bytes` as fixed-width NUL-padded records.
class ColumnData {
public:
    explicit ColumnData(ColumnType type) : type_(type) {}

    const ColumnType& type() const noexcept { return type_; }
    std::size_t size() const noexcept;

    std::span<const std::int64_t> ints() const noexcept { return ints_; }
    std::span<const char> bytes() const noexcept { return bytes_; }

    std::int64_t int_at(std::size_t row) const { return ints_[row]; }
    /// Padded record of exactly `width` bytes.
    std::string_view padded_at(std::size_t row) const
    {
        return {bytes_.data() + row * type_.width, type_.width};
    }
    /// Content with trailing padding removed.
    std::string_view char_at(std::size_t row) const;
    Value value_at(std::size_t row) const;

    void push_int(std::int64_t v) { ints_.push_back(v); }
    /// `s` must not be longer than the column width.
    void push_char(std::string_view s);
    void push_padded(std::string_view padded);
    void push_value(const Value& v);
    void append_from(const ColumnData& other, std::size_t row);
    void reserve(std::size_t rows);
    ColumnData gather(std::span<const std::uint32_t> indices) const;

private:
    ColumnType type_;
    std::vector<std::int64_t> ints_;
    std::vector<char> bytes_;
};

/// Column-major relation. Immutable once built in practice; builders use
/// the append APIs.
class Table {
public:
    Table() = default;
    explicit Table(Schema schema);

    const Schema& schema() const noexcept { return schema_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t arity() const noexcept { return columns_.size(); }
    const ColumnData& column(std::size_t i) const { return columns_.at(i); }

    Value cell(std::size_t row, std::size_t col) const { return columns_[col].value_at(row); }
    Row row(std::size_t r) const;
    std::vector<Row> to_rows() const;

    /// Throws TypeError when the row does not match the schema.
    void append_row(std::span<const Value> row);
    void append_row_from(const Table& src, std::size_t row);
    void append_table(const Table& other);
    void reserve(std::size_t rows);

    Table gather(std::span<const std::uint32_t> indices) const;
    Table slice(std::size_t begin, std::size_t end) const;

    static Table from_rows(Schema schema, std::span<const Row> rows);
    /// Columns must match the schema's types and have equal lengths.
    static Table from_columns(Schema schema, std::vector<ColumnData> columns);
    /// Same data under a schema with identical column types.
    Table renamed(Schema schema) &&;

private:
    Schema schema_;
    std::vector<ColumnData> columns_;
    std::size_t rows_ = 0;
};

/// Order-insensitive 64-bit fingerprint of a table's rows (wrapping sum of
/// per-row hashes over the padded encoding).
std::uint64_t table_checksum(const Table& t);
std::uint64_t row_hash(const Table& t, std::size_t row);

/// Rows sorted lexicographically; two tables hold the same multiset iff
/// their canonical row lists are equal.
std::vector<Row> canonical_rows(const Table& t);
bool same_multiset(const Table& a, const Table& b);

} // namespace sqf
