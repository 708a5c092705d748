#include "sqf/fabric/fabric.hpp"

#include "sqf/error.hpp"
#include "sqf/hash.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace sqf {

namespace {

[[noreturn]] void bad_profile(const std::string& what)
{
    throw Error(ErrorCode::InvalidProfile, what);
}

} // namespace

void validate(const DeviceProfile& d)
{
    if (d.regions < 1)
        bad_profile("regions must be positive");
    if (d.slots_per_region < 1)
        bad_profile("slots_per_region must be positive");
    auto positive = [](double v) { return v > 0 && std::isfinite(v); };
    auto non_negative = [](double v) { return v >= 0 && std::isfinite(v); };
    if (!positive(d.icap_bytes_per_s))
        bad_profile("icap_bytes_per_s must be positive");
    if (!positive(d.mem_bytes_per_s))
        bad_profile("mem_bytes_per_s must be positive");
    if (!positive(d.clock_hz))
        bad_profile("clock_hz must be positive");
    if (!positive(d.host_tuples_per_s))
        bad_profile("host_tuples_per_s must be positive");
    if (!non_negative(d.p_static_w) || !non_negative(d.p_slot_active_w) || !non_negative(d.p_reconfig_w))
        bad_profile("power figures must be non-negative");
    if (d.cache_line_bytes < 8 || !std::has_single_bit(d.cache_line_bytes))
        bad_profile("cache_line_bytes must be a power of two >= 8");
}

DeviceProfile parse_device_profile(std::string_view json_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    if (!doc.is_object())
        throw Error(ErrorCode::ParseError, "device profile must be a JSON object");

    static const std::vector<std::string> fields = {
        "regions",     "slots_per_region", "icap_bytes_per_s", "mem_bytes_per_s",   "clock_hz",
        "p_static_w",  "p_slot_active_w",  "p_reconfig_w",     "host_tuples_per_s", "cache_line_bytes"};
    for (const auto& [key, value] : doc.items()) {
        if (key == "comment" && value.is_string())
            continue;
        if (std::find(fields.begin(), fields.end(), key) == fields.end())
            throw Error(ErrorCode::InvalidField, fmt::format("`{}`: unknown field", key));
    }
    for (const auto& f : fields)
        if (!doc.contains(f))
            throw Error(ErrorCode::InvalidField, fmt::format("`{}`: missing", f));

    auto number = [&](const char* f) {
        const auto& v = doc.at(f);
        if (!v.is_number())
            throw Error(ErrorCode::InvalidField, fmt::format("`{}`: expected a number", f));
        return v.get<double>();
    };
    auto count = [&](const char* f) -> std::uint32_t {
        const auto& v = doc.at(f);
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 1u << 20)
            throw Error(ErrorCode::InvalidField, fmt::format("`{}`: expected a positive integer", f));
        return static_cast<std::uint32_t>(v.get<std::uint64_t>());
    };

    DeviceProfile d;
    d.regions = count("regions");
    d.slots_per_region = count("slots_per_region");
    d.icap_bytes_per_s = number("icap_bytes_per_s");
    d.mem_bytes_per_s = number("mem_bytes_per_s");
    d.clock_hz = number("clock_hz");
    d.p_static_w = number("p_static_w");
    d.p_slot_active_w = number("p_slot_active_w");
    d.p_reconfig_w = number("p_reconfig_w");
    d.host_tuples_per_s = number("host_tuples_per_s");
    d.cache_line_bytes = count("cache_line_bytes");
    validate(d);
    return d;
}

DeviceProfile load_device_profile(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::FileNotFound, fmt::format("cannot open {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_device_profile(buf.str());
}

SlotRange Placement::span() const
{
    if (entries.empty())
        return {};
    return {entries.front().range.start, entries.back().range.end};
}

FabricState::FabricState(DeviceProfile profile) : profile_(profile)
{
    validate(profile_);
    occupied_.assign(profile_.regions, std::vector<bool>(profile_.slots_per_region, false));
    residents_.resize(profile_.regions);
}

std::size_t FabricState::max_contiguous_free() const
{
    std::size_t best = 0;
    for (const auto& region : occupied_) {
        std::size_t run = 0;
        for (bool busy : region) {
            run = busy ? 0 : run + 1;
            best = std::max(best, run);
        }
    }
    return best;
}

std::size_t FabricState::free_slots() const
{
    std::size_t n = 0;
    for (const auto& region : occupied_)
        n += static_cast<std::size_t>(std::count(region.begin(), region.end(), false));
    return n;
}

Placement FabricState::allocate(std::span<const ModuleInstance> modules)
{
    if (modules.empty())
        throw std::invalid_argument("allocate: empty pipeline");
    std::size_t total = 0;
    for (const auto& m : modules)
        total += m.slots;

    for (std::uint32_t r = 0; r < profile_.regions; ++r) {
        const auto& region = occupied_[r];
        if (total > region.size())
            continue;
        for (std::size_t start = 0; start + total <= region.size(); ++start) {
            bool fits = std::none_of(region.begin() + static_cast<std::ptrdiff_t>(start),
                                     region.begin() + static_cast<std::ptrdiff_t>(start + total),
                                     [](bool b) { return b; });
            if (!fits)
                continue;
            Placement p;
            auto offset = static_cast<std::uint32_t>(start);
            for (const auto& m : modules) {
                p.entries.push_back({m, r, {offset, offset + m.slots}});
                offset += m.slots;
            }
            for (std::size_t s = start; s < start + total; ++s)
                occupied_[r][s] = true;
            active_.push_back(p);
            return p;
        }
    }
    throw InsufficientSlotsError(total, max_contiguous_free());
}

bool FabricState::is_allocated(const Placement& p) const
{
    return std::find(active_.begin(), active_.end(), p) != active_.end();
}

bool FabricState::is_configured(const Placement& p) const
{
    if (!is_allocated(p))
        return false;
    for (const auto& e : p.entries) {
        const auto& res = residents_[e.region];
        ResidentModule want{e.instance.identity(), e.range};
        if (std::find(res.begin(), res.end(), want) == res.end())
            return false;
    }
    return true;
}

ReconfigReport FabricState::reconfigure(const Placement& p, double request_time)
{
    if (!is_allocated(p))
        throw Error(ErrorCode::NotAllocated, "reconfigure of a placement that is not allocated");
    ReconfigReport report;
    for (const auto& e : p.entries) {
        auto& res = residents_[e.region];
        ResidentModule want{e.instance.identity(), e.range};
        if (std::find(res.begin(), res.end(), want) != res.end()) {
            ++report.reused;
            continue;
        }
        std::erase_if(res, [&](const ResidentModule& m) { return m.range.overlaps(e.range); });
        res.push_back(std::move(want));
        report.bytes += e.instance.bitstream_bytes;
        ++report.loaded;
    }
    report.seconds = static_cast<double>(report.bytes) / profile_.icap_bytes_per_s;
    report.start_time = std::max(request_time, port_free_at_);
    report.wait_seconds = report.start_time - request_time;
    report.end_time = report.start_time + report.seconds;
    port_free_at_ = report.end_time;
    total_bytes_ += report.bytes;
    return report;
}

void FabricState::release(const Placement& p)
{
    auto it = std::find(active_.begin(), active_.end(), p);
    if (it == active_.end())
        throw Error(ErrorCode::NotAllocated, "release of a placement that is not allocated");
    for (const auto& e : p.entries)
        for (auto s = e.range.start; s < e.range.end; ++s)
            occupied_[e.region][s] = false;
    active_.erase(it);
}

std::uint64_t FabricState::fingerprint() const
{
    std::uint64_t h = hash::kFnvOffset;
    auto mix = [&](std::uint64_t v) { h = hash::fmix64(h ^ (v + hash::kGolden)); };
    for (const auto& region : occupied_) {
        for (bool b : region)
            mix(b ? 1 : 0);
        mix(0xfeed);
    }
    for (const auto& res : residents_) {
        for (const auto& m : res) {
            h = hash::fnv1a(m.identity, h);
            mix(m.range.start);
            mix(m.range.end);
        }
        mix(0xbeef);
    }
    for (const auto& p : active_)
        for (const auto& e : p.entries) {
            h = hash::fnv1a(e.instance.identity(), h);
            mix(e.region);
            mix(e.range.start);
        }
    std::uint64_t clock_bits = 0;
    std::memcpy(&clock_bits, &port_free_at_, sizeof clock_bits);
    mix(clock_bits);
    mix(total_bytes_);
    return h;
}

void FabricState::check_invariants() const
{
    std::vector<std::vector<bool>> expect(profile_.regions, std::vector<bool>(profile_.slots_per_region, false));
    for (const auto& p : active_) {
        std::uint32_t prev_end = 0;
        bool first = true;
        for (const auto& e : p.entries) {
            if (e.region != p.region())
                throw std::logic_error("placement spans several regions");
            if (e.range.end > profile_.slots_per_region || e.range.start >= e.range.end)
                throw std::logic_error("slot range out of bounds");
            if (!first && e.range.start != prev_end)
                throw std::logic_error("placement entries are not contiguous in stream order");
            first = false;
            prev_end = e.range.end;
            for (auto s = e.range.start; s < e.range.end; ++s) {
                if (expect[e.region][s])
                    throw std::logic_error(fmt::format("slot {} of region {} is allocated twice", s, e.region));
                expect[e.region][s] = true;
            }
        }
    }
    if (expect != occupied_)
        throw std::logic_error("occupancy bitmap disagrees with active placements");
    for (const auto& res : residents_)
        for (std::size_t i = 0; i < res.size(); ++i)
            for (std::size_t j = i + 1; j < res.size(); ++j)
                if (res[i].range.overlaps(res[j].range))
                    throw std::logic_error("resident modules overlap");
}

} // namespace sqf
