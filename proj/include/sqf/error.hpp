#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sqf {

enum class ErrorCode {
    // relcore
    FileNotFound,
    HeaderMismatch,
    MalformedCell,
    CharOverflow,
    InvalidSchema,
    // frontend
    SyntaxError,
    UnknownTable,
    UnknownColumn,
    AmbiguousColumn,
    TypeError,
    // library
    ParseError,
    MissingKind,
    DuplicateKind,
    InvalidField,
    UnknownModuleKind,
    ParamOutOfRange,
    // fabric
    InsufficientSlots,
    NotAllocated,
    InvalidProfile,
    // planner
    NoCandidates,
    MissingStats,
    // engine
    ArithmeticOverflow,
    DivisionByZero,
    NotReconfigured,
    TupleTooLarge,
};

std::string_view error_code_name(ErrorCode code);

/// Base of every error raised by the library. The message is a single line
/// suitable for CLI diagnostics; the code identifies the error class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class MalformedCellError : public Error {
public:
    MalformedCellError(std::size_t line, std::size_t column, const std::string& detail);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, std::string expected, const std::string& found);

    std::size_t position() const noexcept { return position_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

class InsufficientSlotsError : public Error {
public:
    InsufficientSlotsError(std::size_t needed, std::size_t max_contiguous_free);

    std::size_t needed() const noexcept { return needed_; }
    std::size_t max_contiguous_free() const noexcept { return max_free_; }

private:
    std::size_t needed_;
    std::size_t max_free_;
};

/// Arithmetic fault raised by both the pipeline engine and the reference
/// evaluator. `row` is the position of the offending tuple within the input
/// stream of the stage that evaluated the expression.
class ArithmeticError : public Error {
public:
    ArithmeticError(ErrorCode code, std::size_t row, const std::string& expr);

    std::size_t row() const noexcept { return row_; }
    const std::string& expr() const noexcept { return expr_; }

private:
    std::size_t row_;
    std::string expr_;
};

} // namespace sqf
