#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nvmlens/trace.hpp"

namespace nvmlens {

/// Simulator configuration. Bandwidth caps are per socket in decimal MB/s.
/// The NVM coupling knobs (write_thrash, read_throttle) were calibrated once
/// against the testbed-style saturation behavior and frozen as defaults.
struct MemoryConfig {
    MemMode mode = MemMode::UncachedNvm;
    double dram_read_cap_mbps = 115200.0;
    double dram_write_cap_mbps = 115200.0;
    double nvm_read_cap_mbps = 39000.0;
    double nvm_write_cap_mbps = 13000.0;
    double throttle_knee_mbps = 2000.0; // demanded write at which coupling engages
    double wpq_knee = 8.0;              // concurrency where NVM write bandwidth peaks
    double wpq_decay = 0.02;            // per-thread efficiency decay beyond the knee
    double write_thrash = 0.95;         // write overcommit degradation
    double read_throttle = 3.7;         // read starvation per unit of excess write load
    double conflict_factor = 0.95;      // direct-mapped cache conflict derating
    std::uint64_t dram_capacity_bytes = 96ull * (1ull << 30);
    double jitter_amplitude = 0.02;     // +-2% on emitted per-interval bytes
    std::int64_t sample_interval_ms = 1000;
    double clock_ghz = 2.4;             // core-sample synthesis
    double peak_ipc = 2.0;

    void validate() const;
};

struct WorkloadPhaseSpec {
    double duration_s = 0.0;
    double read_mbps = 0.0;  // demanded application read bandwidth
    double write_mbps = 0.0; // demanded application write bandwidth
};

/// A named allocation with its share of the workload's read/write demand,
/// used by the placement advisor.
struct DataObject {
    std::string name;
    std::uint64_t size_bytes = 0;
    double read_share = 0.0;
    double write_share = 0.0;
};

struct WorkloadSpec {
    std::vector<WorkloadPhaseSpec> phases;
    int concurrency = 1;
    std::uint64_t footprint_bytes = 0;
    std::vector<DataObject> objects;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// Achievable NVM bandwidth for a given demand at a given concurrency.
struct NvmService {
    double read_mbps = 0.0;
    double write_mbps = 0.0;
};

/// NVM channel model. Below the write knee the channels are independently
/// capped; above it the write path degrades with overcommit and queue
/// contention, and drags read service down with it.
NvmService nvm_service(double demand_read_mbps, double demand_write_mbps,
                       double concurrency, const MemoryConfig& cfg);

/// Per-device traffic split for the DRAM-cached mode.
struct CacheTraffic {
    double hit_ratio = 0.0;
    double dram_read_mbps = 0.0;
    double dram_write_mbps = 0.0; // demand writes plus fill traffic
    double nvm_read_mbps = 0.0;   // fill reads on misses
    double nvm_write_mbps = 0.0;  // dirty evictions
};

CacheTraffic dram_cache(std::uint64_t footprint_bytes, std::uint64_t dram_capacity_bytes,
                        double demand_read_mbps, double demand_write_mbps,
                        const MemoryConfig& cfg);

struct PhaseResult {
    double nominal_s = 0.0;
    double actual_s = 0.0;
    double stretch = 1.0;
    double achieved_read_mbps = 0.0;  // application-level flow
    double achieved_write_mbps = 0.0;
    double dram_read_mbps = 0.0; // per-device-kind flows during the phase
    double dram_write_mbps = 0.0;
    double nvm_read_mbps = 0.0;
    double nvm_write_mbps = 0.0;
};

/// Per-interval emitted byte totals (after jitter), the ground truth the
/// analysis pipeline is checked against.
struct IntervalRecord {
    std::int64_t end_ms = 0;
    std::uint64_t dram_read_bytes = 0;
    std::uint64_t dram_write_bytes = 0;
    std::uint64_t nvm_read_bytes = 0;
    std::uint64_t nvm_write_bytes = 0;
};

struct SimResult {
    CounterTrace trace;
    std::vector<PhaseResult> phases;
    double runtime_s = 0.0;
    std::vector<IntervalRecord> intervals;
};

SimResult simulate(const WorkloadSpec& w, const MemoryConfig& cfg);

/// Writes <prefix>.trace/.meta/.core/.truth (+ .objects when the workload
/// names objects). The trace files round-trip through parse_trace.
void emit_trace(const SimResult& result, const WorkloadSpec& w,
                const std::filesystem::path& prefix);

WorkloadSpec load_workload(const std::filesystem::path& path);
MemoryConfig load_memory_config(const std::filesystem::path& path,
                                const MemoryConfig& defaults = {});

} // namespace nvmlens
