#pragma once

#include "sqf/frontend/ast.hpp"

#include <string>
#include <string_view>

namespace sqf {

/// Grammar:
///   SELECT items FROM t [JOIN u ON t.a = u.b] [WHERE pred]
///   [GROUP BY col {, col}] [ORDER BY col [ASC|DESC] {, ...}] [;]
///
/// items is `*` or a comma list of `agg(col|*) [AS name]` and
/// `expr [AS name]`. Keywords are case-insensitive. Throws SyntaxError with
/// the byte offset of the offending token.
QueryPlan parse_query(std::string_view text);

/// Canonical SQL text; parse_query(pretty_print(p)) == p for parsed plans.
std::string pretty_print(const QueryPlan& plan);

} // namespace sqf
