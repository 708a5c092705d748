#include "sqf/cli/report.hpp"

#include <cmath>
#include <fmt/format.h>

namespace sqf {

namespace {

void write_value(const Json& v, std::string& out, int depth)
{
    auto newline = [&](int d) {
        out += '\n';
        out.append(static_cast<std::size_t>(2 * d), ' ');
    };
    switch (v.type()) {
    case Json::value_t::object: {
        if (v.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (const auto& [key, item] : v.items()) {
            if (!first)
                out += ',';
            first = false;
            newline(depth + 1);
            out += Json(key).dump();
            out += ": ";
            write_value(item, out, depth + 1);
        }
        newline(depth);
        out += '}';
        return;
    }
    case Json::value_t::array: {
        if (v.empty()) {
            out += "[]";
            return;
        }
        out += '[';
        bool first = true;
        for (const auto& item : v) {
            if (!first)
                out += ',';
            first = false;
            newline(depth + 1);
            write_value(item, out, depth + 1);
        }
        newline(depth);
        out += ']';
        return;
    }
    case Json::value_t::number_float: {
        double d = v.get<double>();
        // JSON has no inf/nan.
        out += std::isfinite(d) ? fmt::format("{:.9g}", d) : "null";
        return;
    }
    default:
        out += v.dump();
        return;
    }
}

} // namespace

std::string write_report(const Json& report)
{
    std::string out;
    write_value(report, out, 0);
    out += '\n';
    return out;
}

std::string hex64(std::uint64_t v)
{
    return fmt::format("0x{:016x}", v);
}

} // namespace sqf
