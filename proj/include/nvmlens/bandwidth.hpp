#pragma once

#include <cstddef>
#include <vector>

#include "nvmlens/trace.hpp"

namespace nvmlens {

/// Reconstructed bandwidth timeline. Interval i ends at time_s[i] and
/// lasts interval_s[i] seconds; bandwidths are decimal MB/s (1e6 bytes/s).
struct BandwidthTrace {
    std::vector<double> time_s;
    std::vector<double> interval_s;
    std::vector<double> read_mbps;
    std::vector<double> write_mbps;

    std::size_t size() const { return time_s.size(); }
    double duration_s() const;
};

/// One segment of a phase decomposition. Indices are inclusive.
struct Phase {
    std::size_t start_index = 0;
    std::size_t end_index = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    double avg_read_mbps = 0.0;
    double avg_write_mbps = 0.0;
    double peak_write_mbps = 0.0;
    double rw_ratio = 0.0; // +inf when the segment writes nothing
    double duration_share = 0.0;
};

struct SegmentationOptions {
    std::size_t max_phases = 8;
    std::size_t min_phase_len = 3;
    double lambda = 0.05; // penalty per extra segment, as a fraction of total variance
};

BandwidthTrace compute_bandwidth(const TrafficSeries& series);

/// Centered moving average with truncated edge windows; window_len = 1 is
/// the identity.
BandwidthTrace moving_average(const BandwidthTrace& trace, std::size_t window_len);

/// Optimal piecewise-constant segmentation of the (read, write) series:
/// exact change-point DP minimizing within-segment squared deviation, with
/// the segment count chosen by a penalized cost.
std::vector<Phase> segment_phases(const BandwidthTrace& trace,
                                  const SegmentationOptions& opts = {});

/// Time-weighted statistics over trace[first..last] (inclusive).
Phase phase_stats(const BandwidthTrace& trace, std::size_t first, std::size_t last);

} // namespace nvmlens
