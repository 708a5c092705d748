#pragma once

#include "sqf/library/library.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sqf {

struct DeviceProfile {
    std::uint32_t regions = 2;
    std::uint32_t slots_per_region = 16;
    double icap_bytes_per_s = 4.0e8;
    double mem_bytes_per_s = 1.6e9;
    double clock_hz = 2.0e8;
    double p_static_w = 0.0;
    double p_slot_active_w = 0.0;
    double p_reconfig_w = 0.0;
    double host_tuples_per_s = 1.0;
    std::uint32_t cache_line_bytes = 64;

    bool operator==(const DeviceProfile&) const = default;
};

/// Throws InvalidProfile when a field violates its bound.
void validate(const DeviceProfile& dev);
/// JSON object with exactly the DeviceProfile fields (plus an optional
/// "comment" string).
DeviceProfile parse_device_profile(std::string_view json_text);
DeviceProfile load_device_profile(const std::filesystem::path& path);

struct SlotRange {
    std::uint32_t start = 0;
    std::uint32_t end = 0; // exclusive

    std::uint32_t size() const noexcept { return end - start; }
    bool overlaps(const SlotRange& o) const noexcept { return start < o.end && o.start < end; }
    bool operator==(const SlotRange&) const = default;
};

struct PlacementEntry {
    ModuleInstance instance;
    std::uint32_t region = 0;
    SlotRange range;

    bool operator==(const PlacementEntry&) const = default;
};

/// Modules of one pipeline, contiguous and in stream order inside a region.
struct Placement {
    std::vector<PlacementEntry> entries;

    std::uint32_t region() const { return entries.empty() ? 0 : entries.front().region; }
    SlotRange span() const;
    bool operator==(const Placement&) const = default;
};

struct ReconfigReport {
    double seconds = 0.0;       // configuration-port busy time for this request
    std::uint64_t bytes = 0;    // bitstream bytes actually written
    double wait_seconds = 0.0;  // time queued behind earlier requests
    double start_time = 0.0;
    double end_time = 0.0;
    std::size_t loaded = 0;
    std::size_t reused = 0;
};

struct ResidentModule {
    std::string identity;
    SlotRange range;

    bool operator==(const ResidentModule&) const = default;
};

/// Allocation and residency state of the reconfigurable regions. Mutations
/// require exclusive access.
class FabricState {
public:
    explicit FabricState(DeviceProfile profile);

    const DeviceProfile& profile() const noexcept { return profile_; }

    /// First fit: regions in index order, start offsets ascending; the
    /// modules are laid out back to back. All or nothing.
    Placement allocate(std::span<const ModuleInstance> modules);

    /// Loads every entry whose identity is not already resident at exactly
    /// its slot range. Requests are served one at a time by the single
    /// configuration port; a request issued at `request_time` while the
    /// port is busy queues (`wait_seconds`).
    ReconfigReport reconfigure(const Placement& p, double request_time = 0.0);

    /// Frees the slots. Residency is kept until overwritten.
    void release(const Placement& p);

    bool is_allocated(const Placement& p) const;
    /// Allocated and every entry resident with matching identity and range.
    bool is_configured(const Placement& p) const;

    std::size_t max_contiguous_free() const;
    std::size_t free_slots() const;
    const std::vector<bool>& occupancy(std::uint32_t region) const { return occupied_.at(region); }
    const std::vector<ResidentModule>& residents(std::uint32_t region) const { return residents_.at(region); }
    const std::vector<Placement>& active() const noexcept { return active_; }
    double port_free_at() const noexcept { return port_free_at_; }
    std::uint64_t total_reconfig_bytes() const noexcept { return total_bytes_; }

    /// Hash of occupancy, residency, active placements and port clock.
    std::uint64_t fingerprint() const;
    /// Throws std::logic_error when occupancy and active placements
    /// disagree or ranges overlap.
    void check_invariants() const;

private:
    DeviceProfile profile_;
    std::vector<std::vector<bool>> occupied_;
    std::vector<std::vector<ResidentModule>> residents_;
    std::vector<Placement> active_;
    double port_free_at_ = 0.0;
    std::uint64_t total_bytes_ = 0;
};

} // namespace sqf
