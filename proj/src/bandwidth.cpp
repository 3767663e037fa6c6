#include "nvmlens/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nvmlens/error.hpp"

namespace nvmlens {

double BandwidthTrace::duration_s() const {
    return std::accumulate(interval_s.begin(), interval_s.end(), 0.0);
}

BandwidthTrace compute_bandwidth(const TrafficSeries& series) {
    if (series.size() == 0) throw InsufficientDataError("empty traffic series");
    BandwidthTrace trace;
    trace.time_s.reserve(series.size());
    trace.interval_s.reserve(series.size());
    trace.read_mbps.reserve(series.size());
    trace.write_mbps.reserve(series.size());
    std::int64_t prev_ms = series.start_ms;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::int64_t dt_ms = series.end_ms[i] - prev_ms;
        if (dt_ms <= 0)
            throw DomainError("degenerate interval at t=" +
                              std::to_string(series.end_ms[i]) + " ms");
        const double dt_s = static_cast<double>(dt_ms) / 1000.0;
        trace.time_s.push_back(static_cast<double>(series.end_ms[i]) / 1000.0);
        trace.interval_s.push_back(dt_s);
        trace.read_mbps.push_back(static_cast<double>(series.read_bytes[i]) / dt_s / 1e6);
        trace.write_mbps.push_back(static_cast<double>(series.write_bytes[i]) / dt_s / 1e6);
        prev_ms = series.end_ms[i];
    }
    return trace;
}

BandwidthTrace moving_average(const BandwidthTrace& trace, std::size_t window_len) {
    if (window_len < 1) throw DomainError("moving average window must be >= 1");
    if (window_len == 1) return trace;
    BandwidthTrace out = trace;
    const std::size_t n = trace.size();
    const std::size_t left = (window_len - 1) / 2;
    const std::size_t right = window_len / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= left ? i - left : 0;
        const std::size_t hi = std::min(n - 1, i + right);
        double r = 0.0, w = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) {
            r += trace.read_mbps[j];
            w += trace.write_mbps[j];
        }
        const double len = static_cast<double>(hi - lo + 1);
        out.read_mbps[i] = r / len;
        out.write_mbps[i] = w / len;
    }
    return out;
}

namespace {

// Within-segment sum of squared deviations over both channels, O(1) via
// prefix sums. Segment is the half-open sample range [a, b).
class SegmentCost {
public:
    explicit SegmentCost(const BandwidthTrace& t) {
        const std::size_t n = t.size();
        sr_.assign(n + 1, 0.0);
        sw_.assign(n + 1, 0.0);
        sr2_.assign(n + 1, 0.0);
        sw2_.assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            sr_[i + 1] = sr_[i] + t.read_mbps[i];
            sw_[i + 1] = sw_[i] + t.write_mbps[i];
            sr2_[i + 1] = sr2_[i] + t.read_mbps[i] * t.read_mbps[i];
            sw2_[i + 1] = sw2_[i] + t.write_mbps[i] * t.write_mbps[i];
        }
    }

    double operator()(std::size_t a, std::size_t b) const {
        const double len = static_cast<double>(b - a);
        const double r = sr_[b] - sr_[a];
        const double w = sw_[b] - sw_[a];
        const double sse_r = (sr2_[b] - sr2_[a]) - r * r / len;
        const double sse_w = (sw2_[b] - sw2_[a]) - w * w / len;
        return std::max(0.0, sse_r) + std::max(0.0, sse_w);
    }

private:
    std::vector<double> sr_, sw_, sr2_, sw2_;
};

} // namespace

std::vector<Phase> segment_phases(const BandwidthTrace& trace,
                                  const SegmentationOptions& opts) {
    const std::size_t n = trace.size();
    if (opts.max_phases < 1) throw DomainError("max_phases must be >= 1");
    if (opts.min_phase_len < 1) throw DomainError("min_phase_len must be >= 1");
    if (n < opts.min_phase_len)
        throw InsufficientDataError("trace too short to segment: " + std::to_string(n) +
                                    " samples, min phase length " +
                                    std::to_string(opts.min_phase_len));
    const std::size_t kmax = std::min(opts.max_phases, n / opts.min_phase_len);
    const std::size_t m = opts.min_phase_len;

    const SegmentCost cost(trace);
    const double total_var = cost(0, n);
    const double inf = std::numeric_limits<double>::infinity();

    // best[k][j]: minimal cost of splitting the first j samples into k
    // segments of length >= m. back[k][j]: start of the last segment.
    std::vector<std::vector<double>> best(kmax + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<std::size_t>> back(kmax + 1,
                                               std::vector<std::size_t>(n + 1, 0));
    for (std::size_t j = m; j <= n; ++j) {
        best[1][j] = cost(0, j);
        back[1][j] = 0;
    }
    for (std::size_t k = 2; k <= kmax; ++k) {
        for (std::size_t j = k * m; j <= n; ++j) {
            for (std::size_t i = (k - 1) * m; i + m <= j; ++i) {
                if (best[k - 1][i] == inf) continue;
                const double c = best[k - 1][i] + cost(i, j);
                if (c < best[k][j]) {
                    best[k][j] = c;
                    back[k][j] = i;
                }
            }
        }
    }

    std::size_t k_star = 1;
    double penalized_star = best[1][n];
    for (std::size_t k = 2; k <= kmax; ++k) {
        if (best[k][n] == inf) continue;
        const double penalized =
            best[k][n] + opts.lambda * total_var * static_cast<double>(k - 1);
        if (penalized < penalized_star) {
            penalized_star = penalized;
            k_star = k;
        }
    }

    std::vector<std::size_t> starts(k_star);
    std::size_t j = n;
    for (std::size_t k = k_star; k >= 1; --k) {
        starts[k - 1] = back[k][j];
        j = back[k][j];
    }

    std::vector<Phase> phases;
    phases.reserve(k_star);
    for (std::size_t k = 0; k < k_star; ++k) {
        const std::size_t first = starts[k];
        const std::size_t last = (k + 1 < k_star ? starts[k + 1] : n) - 1;
        phases.push_back(phase_stats(trace, first, last));
    }
    return phases;
}

Phase phase_stats(const BandwidthTrace& trace, std::size_t first, std::size_t last) {
    const std::size_t n = trace.size();
    if (first > last || last >= n) throw DomainError("empty or out-of-range segment");
    Phase p;
    p.start_index = first;
    p.end_index = last;
    p.start_s = trace.time_s[first] - trace.interval_s[first];
    p.end_s = trace.time_s[last];
    double dt = 0.0, read = 0.0, write = 0.0, peak = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
        dt += trace.interval_s[i];
        read += trace.read_mbps[i] * trace.interval_s[i];
        write += trace.write_mbps[i] * trace.interval_s[i];
        peak = std::max(peak, trace.write_mbps[i]);
    }
    p.avg_read_mbps = read / dt;
    p.avg_write_mbps = write / dt;
    p.peak_write_mbps = peak;
    p.rw_ratio = p.avg_write_mbps == 0.0
                     ? std::numeric_limits<double>::infinity()
                     : p.avg_read_mbps / p.avg_write_mbps;
    p.duration_share = dt / trace.duration_s();
    return p;
}

} // namespace nvmlens
