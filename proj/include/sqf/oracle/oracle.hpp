#pragma once

#include "sqf/engine/engine.hpp"
#include "sqf/frontend/binder.hpp"
#include "sqf/relcore/table.hpp"

namespace sqf {

/// Row-at-a-time evaluation of a bound plan: side filters, nested-loop
/// join, joined filter, computed columns, grouping, projection, then a
/// stable sort. Raises the same error classes as the engine; the row of an
/// ArithmeticError is the position within the faulting step's input.
Table reference_execute(const BoundPlan& bp, const TableCatalog& tables);

} // namespace sqf
