#pragma once

#include <optional>
#include <string>

#include "nvmlens/bandwidth.hpp"

namespace nvmlens {

enum class MetricKind { TimeLowerBetter, RateHigherBetter };

const char* to_string(MetricKind m);
MetricKind metric_kind_from_string(const std::string& s); // throws FormatError

enum class TierLabel { Insensitive, Scaled, Bottlenecked };

const char* to_string(TierLabel t);

enum class ThrottleRisk { Low, High };

const char* to_string(ThrottleRisk r);

/// Workload metrics feeding the sensitivity classifier. Bandwidths are the
/// DRAM-baseline profile; slowdown is uncached-NVM relative to DRAM
/// (always > 1 means worse, regardless of the underlying metric kind).
struct AppMetrics {
    std::optional<double> read_bw_mbps;
    std::optional<double> write_bw_mbps;
    std::optional<double> slowdown;

    bool has_bandwidth() const { return read_bw_mbps && write_bw_mbps; }
    double total_bw_mbps() const { return *read_bw_mbps + *write_bw_mbps; }
};

struct TierThresholds {
    double tier_low = 1.5;       // slowdown boundary insensitive/scaled
    double tier_high = 5.0;      // slowdown boundary scaled/bottlenecked
    double borderline_band = 0.10; // flag within +-10% of a boundary
    double bw_floor_mbps = 500.0;  // advisory: below this, predicted insensitive
    double rw_thresh = 2.5;        // advisory + throttling read/write ratio bound
    double write_thresh_mbps = 2000.0; // throttling write bandwidth bound
};

struct Tier {
    TierLabel label = TierLabel::Insensitive;
    bool borderline = false;
    bool from_slowdown = true; // false when only the bandwidth advisory was available
    std::optional<TierLabel> advisory; // bandwidth-only prediction, when computable
};

struct ContentionVerdict {
    double ratio_dram = 0.0;
    std::optional<double> ratio_cached;
    double ratio_uncached = 0.0;
    double gap = 0.0; // ratio_dram - ratio_uncached
    bool contended_on_nvm = false;
};

/// write_bw / (read_bw + write_bw); 0 when both are 0.
double write_ratio(double read_bw, double write_bw);

/// Three-tier sensitivity classification with a borderline flag, plus a
/// bandwidth-only advisory label for traces lacking a DRAM baseline.
Tier classify_tier(const AppMetrics& m, const TierThresholds& t = {});

/// High risk iff the phase writes more than write_thresh with a read/write
/// ratio under rw_thresh.
ThrottleRisk detect_write_throttling(const Phase& p, double write_thresh_mbps = 2000.0,
                                     double rw_thresh = 2.5);

/// Performance at high concurrency normalized to low concurrency; > 1
/// always means scaling helped.
double contention_ratio(double perf_high, double perf_low, MetricKind kind);

/// Builds the verdict and applies the gap rule: contended iff the uncached
/// ratio shows loss and trails the DRAM ratio by more than gap_threshold.
ContentionVerdict make_contention_verdict(double ratio_dram,
                                          std::optional<double> ratio_cached,
                                          double ratio_uncached,
                                          double gap_threshold = 0.15);

bool contention_flag(const ContentionVerdict& v, double gap_threshold = 0.15);

/// Cached-NVM performance relative to DRAM (footprint fits in DRAM).
double cache_efficiency(double perf_cached, double perf_dram, MetricKind kind);

/// Cached-NVM performance relative to uncached-NVM (footprint exceeds DRAM).
double cached_speedup(double perf_cached, double perf_uncached, MetricKind kind);

} // namespace nvmlens
