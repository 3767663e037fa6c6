#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nvmlens {

enum class DeviceKind { DramDimm, Nvdimm };

enum class MemMode { DramOnly, CachedNvm, UncachedNvm };

const char* to_string(DeviceKind k);
const char* to_string(MemMode m);
DeviceKind device_kind_from_string(const std::string& s); // throws FormatError
MemMode mem_mode_from_string(const std::string& s);       // throws FormatError

/// One reading of a device's cumulative traffic counters.
struct CounterSample {
    std::int64_t timestamp_ms = 0;
    int socket = 0;
    DeviceKind device_kind = DeviceKind::DramDimm;
    int device_id = 0;
    std::uint64_t read_bytes = 0;  // cumulative since counter reset
    std::uint64_t write_bytes = 0; // cumulative since counter reset

    // Per-device stream identity, used for grouping and error messages.
    struct DeviceId {
        int socket;
        DeviceKind kind;
        int device_id;
        auto operator<=>(const DeviceId&) const = default;
    };
    DeviceId device() const { return {socket, device_kind, device_id}; }
};

std::string device_label(const CounterSample::DeviceId& d);

/// Core event counts over one sample interval (not cumulative).
/// events[0..5] = instructions retired, cycles active, resource-stall
/// cycles, offcore-outstanding wait cycles, iMC reads, iMC writes.
struct CoreSample {
    std::int64_t timestamp_ms = 0;
    std::array<std::uint64_t, 6> events{};
    double ipc = 0.0; // events[0]/events[1], 0 when no active cycles
};

inline constexpr std::size_t kNumCoreEvents = 6;

struct TimeWindow {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    bool contains(std::int64_t t) const { return t >= start_ms && t <= end_ms; }
};

/// A parsed profiling run: device counter streams, optional core events,
/// and the run metadata from the sidecar.
struct CounterTrace {
    std::vector<CounterSample> samples;
    std::vector<CoreSample> core;
    MemMode mode = MemMode::DramOnly;
    int concurrency = 1;
    std::uint64_t footprint_bytes = 0;
    TimeWindow window{};

    /// Checks stream monotonicity, mode/content consistency and window
    /// placement. Throws IntegrityError on violation.
    void validate() const;
};

/// Mode-accounted per-interval traffic. Interval i covers
/// (end_ms[i-1], end_ms[i]], with start_ms opening the first interval.
struct TrafficSeries {
    std::int64_t start_ms = 0;
    std::vector<std::int64_t> end_ms;
    std::vector<std::uint64_t> read_bytes;
    std::vector<std::uint64_t> write_bytes;

    std::size_t size() const { return end_ms.size(); }
    std::uint64_t total_read() const;
    std::uint64_t total_write() const;
};

/// Parses `<prefix>.trace` (+ mandatory `<prefix>.meta`, optional
/// `<prefix>.core`). `path` may name the .trace file itself or the prefix.
CounterTrace parse_trace(const std::filesystem::path& path);

std::vector<CounterSample> parse_counter_file(const std::filesystem::path& path);
std::vector<CoreSample> parse_core_file(const std::filesystem::path& path);

/// Fills mode/concurrency/footprint/window from a key=value sidecar.
void parse_meta_file(const std::filesystem::path& path, CounterTrace& trace);

void write_counter_file(const std::filesystem::path& path,
                        const std::vector<CounterSample>& samples);
void write_core_file(const std::filesystem::path& path,
                     const std::vector<CoreSample>& samples);
void write_meta_file(const std::filesystem::path& path, const CounterTrace& trace);

/// Applies the per-mode traffic accounting rule:
///   DramOnly / CachedNvm -> DRAM DIMM traffic only,
///   UncachedNvm          -> DRAM plus NVDIMM traffic.
/// Interval boundaries are the union of sample timestamps inside the window.
TrafficSeries account_traffic(const CounterTrace& trace);

} // namespace nvmlens
