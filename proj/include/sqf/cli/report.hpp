#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>

namespace sqf {

/// Reports keep insertion order so that files diff cleanly.
using Json = nlohmann::ordered_json;

/// Two-space indented JSON, floats with 9 significant digits, trailing
/// newline. Identical trees give identical bytes.
std::string write_report(const Json& report);

/// "0x" followed by 16 lower-case hex digits.
std::string hex64(std::uint64_t v);

} // namespace sqf
