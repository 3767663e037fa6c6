#include "nvmlens/characterize.hpp"

#include <cmath>

#include "nvmlens/error.hpp"

namespace nvmlens {

const char* to_string(MetricKind m) {
    return m == MetricKind::TimeLowerBetter ? "time" : "rate";
}

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "time") return MetricKind::TimeLowerBetter;
    if (s == "rate") return MetricKind::RateHigherBetter;
    throw FormatError("unknown metric kind '" + s + "' (want time|rate)");
}

const char* to_string(TierLabel t) {
    switch (t) {
    case TierLabel::Insensitive: return "insensitive";
    case TierLabel::Scaled: return "scaled";
    case TierLabel::Bottlenecked: return "bottlenecked";
    }
    return "?";
}

const char* to_string(ThrottleRisk r) {
    return r == ThrottleRisk::Low ? "low" : "high";
}

double write_ratio(double read_bw, double write_bw) {
    if (read_bw < 0.0 || write_bw < 0.0)
        throw DomainError("bandwidth must be non-negative");
    const double total = read_bw + write_bw;
    return total == 0.0 ? 0.0 : write_bw / total;
}

namespace {

TierLabel advisory_label(const AppMetrics& m, const TierThresholds& t) {
    const double total = m.total_bw_mbps();
    if (total < t.bw_floor_mbps) return TierLabel::Insensitive;
    const double w = *m.write_bw_mbps;
    const double rw = w == 0.0 ? std::numeric_limits<double>::infinity()
                               : *m.read_bw_mbps / w;
    if (rw < t.rw_thresh && w > t.write_thresh_mbps) return TierLabel::Bottlenecked;
    return TierLabel::Scaled;
}

bool near_boundary(double slowdown, double boundary, double band) {
    return slowdown >= boundary * (1.0 - band) && slowdown <= boundary * (1.0 + band);
}

} // namespace

Tier classify_tier(const AppMetrics& m, const TierThresholds& t) {
    if (!m.slowdown && !m.has_bandwidth())
        throw InsufficientDataError("classification needs a slowdown or a bandwidth "
                                    "profile");
    Tier tier;
    if (m.has_bandwidth()) tier.advisory = advisory_label(m, t);
    if (m.slowdown) {
        const double s = *m.slowdown;
        if (s <= 0.0) throw DomainError("slowdown must be positive");
        if (s <= t.tier_low)
            tier.label = TierLabel::Insensitive;
        else if (s <= t.tier_high)
            tier.label = TierLabel::Scaled;
        else
            tier.label = TierLabel::Bottlenecked;
        tier.borderline = near_boundary(s, t.tier_low, t.borderline_band) ||
                          near_boundary(s, t.tier_high, t.borderline_band);
        tier.from_slowdown = true;
    } else {
        tier.label = *tier.advisory;
        tier.borderline = false;
        tier.from_slowdown = false;
    }
    return tier;
}

ThrottleRisk detect_write_throttling(const Phase& p, double write_thresh_mbps,
                                     double rw_thresh) {
    const bool risky =
        p.avg_write_mbps > write_thresh_mbps && p.rw_ratio < rw_thresh;
    return risky ? ThrottleRisk::High : ThrottleRisk::Low;
}

double contention_ratio(double perf_high, double perf_low, MetricKind kind) {
    if (perf_high <= 0.0 || perf_low <= 0.0)
        throw DomainError("performance values must be positive");
    return kind == MetricKind::RateHigherBetter ? perf_high / perf_low
                                                : perf_low / perf_high;
}

ContentionVerdict make_contention_verdict(double ratio_dram,
                                          std::optional<double> ratio_cached,
                                          double ratio_uncached, double gap_threshold) {
    if (ratio_dram <= 0.0 || ratio_uncached <= 0.0 ||
        (ratio_cached && *ratio_cached <= 0.0))
        throw DomainError("contention ratios must be positive");
    ContentionVerdict v;
    v.ratio_dram = ratio_dram;
    v.ratio_cached = ratio_cached;
    v.ratio_uncached = ratio_uncached;
    v.gap = ratio_dram - ratio_uncached;
    v.contended_on_nvm = contention_flag(v, gap_threshold);
    return v;
}

bool contention_flag(const ContentionVerdict& v, double gap_threshold) {
    return v.ratio_uncached < 1.0 && (v.ratio_dram - v.ratio_uncached) > gap_threshold;
}

namespace {

double oriented_ratio(double perf_new, double perf_base, MetricKind kind) {
    if (perf_new <= 0.0 || perf_base <= 0.0)
        throw DomainError("performance values must be positive");
    return kind == MetricKind::RateHigherBetter ? perf_new / perf_base
                                                : perf_base / perf_new;
}

} // namespace

double cache_efficiency(double perf_cached, double perf_dram, MetricKind kind) {
    return oriented_ratio(perf_cached, perf_dram, kind);
}

double cached_speedup(double perf_cached, double perf_uncached, MetricKind kind) {
    return oriented_ratio(perf_cached, perf_uncached, kind);
}

} // namespace nvmlens
