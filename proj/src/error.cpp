#include "sqf/error.hpp"

#include <fmt/format.h>

namespace sqf {

std::string_view error_code_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::MalformedCell: return "MalformedCell";
    case ErrorCode::CharOverflow: return "CharOverflow";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::AmbiguousColumn: return "AmbiguousColumn";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingKind: return "MissingKind";
    case ErrorCode::DuplicateKind: return "DuplicateKind";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::UnknownModuleKind: return "UnknownModuleKind";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::InsufficientSlots: return "InsufficientSlots";
    case ErrorCode::NotAllocated: return "NotAllocated";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::MissingStats: return "MissingStats";
    case ErrorCode::ArithmeticOverflow: return "ArithmeticOverflow";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::NotReconfigured: return "NotReconfigured";
    case ErrorCode::TupleTooLarge: return "TupleTooLarge";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", error_code_name(code), message)), code_(code)
{
}

MalformedCellError::MalformedCellError(std::size_t line, std::size_t column, const std::string& detail)
    : Error(ErrorCode::MalformedCell, fmt::format("line {}, column {}: {}", line, column, detail)),
      line_(line), column_(column)
{
}

SyntaxError::SyntaxError(std::size_t position, std::string expected, const std::string& found)
    : Error(ErrorCode::SyntaxError,
            fmt::format("at position {}: expected {}, found {}", position, expected, found)),
      position_(position), expected_(std::move(expected))
{
}

InsufficientSlotsError::InsufficientSlotsError(std::size_t needed, std::size_t max_contiguous_free)
    : Error(ErrorCode::InsufficientSlots,
            fmt::format("need {} contiguous slots, largest free run is {}", needed, max_contiguous_free)),
      needed_(needed), max_free_(max_contiguous_free)
{
}

ArithmeticError::ArithmeticError(ErrorCode code, std::size_t row, const std::string& expr)
    : Error(code, fmt::format("row {} in `{}`", row, expr)), row_(row), expr_(expr)
{
}

} // namespace sqf
