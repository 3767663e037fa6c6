#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nvmlens/bandwidth.hpp"
#include "nvmlens/characterize.hpp"
#include "nvmlens/detail/text.hpp"
#include "nvmlens/error.hpp"
#include "nvmlens/memsim.hpp"
#include "nvmlens/placement.hpp"
#include "nvmlens/predictor.hpp"
#include "nvmlens/report.hpp"
#include "nvmlens/trace.hpp"
#include "nvmlens/version.hpp"

namespace {

using namespace nvmlens;

struct GlobalOpts {
    std::string config_path;
    std::string report_path;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
    std::optional<double> tier_low, tier_high, write_thresh, rw_thresh, gap_thresh;
    std::optional<double> alpha, lambda, bw_floor;
    std::optional<std::size_t> min_phase_len, max_phases;
    std::optional<std::size_t> smooth;
};

struct Settings {
    TierThresholds tiers;
    double gap_thresh = 0.15;
    double alpha = 0.05;
    SegmentationOptions seg;
    std::size_t smooth = 1;
    std::uint64_t seed = 1;
    bool deterministic = false;
};

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::strip(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
        kv[detail::strip(t.substr(0, eq))] = detail::strip(t.substr(eq + 1));
    }
    return kv;
}

// Precedence: built-in defaults < config file < command-line flags.
Settings resolve_settings(const GlobalOpts& g) {
    Settings s;
    std::map<std::string, std::string> file;
    if (!g.config_path.empty()) file = load_config_file(g.config_path);

    auto pick_double = [&](const std::optional<double>& flag, const char* key,
                           double fallback) {
        if (flag) return *flag;
        auto it = file.find(key);
        if (it != file.end()) return detail::parse_num<double>(it->second);
        return fallback;
    };
    auto pick_size = [&](const std::optional<std::size_t>& flag, const char* key,
                         std::size_t fallback) {
        if (flag) return *flag;
        auto it = file.find(key);
        if (it != file.end()) return detail::parse_num<std::size_t>(it->second);
        return fallback;
    };

    s.tiers.tier_low = pick_double(g.tier_low, "tier_low", s.tiers.tier_low);
    s.tiers.tier_high = pick_double(g.tier_high, "tier_high", s.tiers.tier_high);
    s.tiers.write_thresh_mbps =
        pick_double(g.write_thresh, "write_thresh", s.tiers.write_thresh_mbps);
    s.tiers.rw_thresh = pick_double(g.rw_thresh, "rw_thresh", s.tiers.rw_thresh);
    s.tiers.bw_floor_mbps = pick_double(g.bw_floor, "bw_floor", s.tiers.bw_floor_mbps);
    s.gap_thresh = pick_double(g.gap_thresh, "gap_thresh", s.gap_thresh);
    s.alpha = pick_double(g.alpha, "alpha", s.alpha);
    s.seg.lambda = pick_double(g.lambda, "lambda", s.seg.lambda);
    s.seg.min_phase_len = pick_size(g.min_phase_len, "min_phase_len", s.seg.min_phase_len);
    s.seg.max_phases = pick_size(g.max_phases, "max_phases", s.seg.max_phases);
    s.smooth = pick_size(g.smooth, "smooth", 1);
    if (g.seed) s.seed = *g.seed;
    s.deterministic = g.deterministic;
    return s;
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void manifest(Report& r, const std::string& subcommand, const Settings& s,
              const std::vector<std::pair<std::string, std::string>>& inputs) {
    r.section("manifest");
    r.kv("tool_version", kVersion);
    r.kv("subcommand", subcommand);
    for (const auto& [k, v] : inputs) r.kv(k, v);
    r.kv("seed", s.seed);
    r.kv("deterministic", s.deterministic);
    if (!s.deterministic) r.kv("generated_at", now_iso8601());
    r.section("settings");
    r.kv("tier_low", s.tiers.tier_low);
    r.kv("tier_high", s.tiers.tier_high);
    r.kv("borderline_band", s.tiers.borderline_band);
    r.kv("bw_floor_mbps", s.tiers.bw_floor_mbps);
    r.kv("write_thresh_mbps", s.tiers.write_thresh_mbps);
    r.kv("rw_thresh", s.tiers.rw_thresh);
    r.kv("gap_thresh", s.gap_thresh);
    r.kv("alpha", s.alpha);
    r.kv("lambda", s.seg.lambda);
    r.kv("min_phase_len", static_cast<std::uint64_t>(s.seg.min_phase_len));
    r.kv("max_phases", static_cast<std::uint64_t>(s.seg.max_phases));
    r.kv("smooth", static_cast<std::uint64_t>(s.smooth));
}

void finish(const Report& r, const GlobalOpts& g) {
    std::cout << r.str();
    if (!g.report_path.empty()) r.save(g.report_path);
}

// ---- table parsing ------------------------------------------------------

std::optional<double> opt_field(const std::string& raw, std::size_t lineno) {
    const std::string t = detail::strip(raw);
    if (t.empty() || t == "na") return std::nullopt;
    return detail::parse_num<double>(t, lineno);
}

struct MetricsRow {
    std::string name;
    MetricKind kind = MetricKind::TimeLowerBetter;
    std::optional<double> read_bw, write_bw, slowdown;
};

std::vector<MetricsRow> parse_metrics_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path, 1);
    if (detail::strip(line) != "name,metric_kind,read_bw_mbps,write_bw_mbps,slowdown")
        throw FormatError(path + ": expected header "
                                 "'name,metric_kind,read_bw_mbps,write_bw_mbps,slowdown'");
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::strip(line).empty()) continue;
        auto f = detail::split(line, ',');
        if (f.size() != 5) throw ParseError("expected 5 fields", lineno);
        MetricsRow r;
        r.name = detail::strip(f[0]);
        r.kind = metric_kind_from_string(detail::strip(f[1]));
        r.read_bw = opt_field(f[2], lineno);
        r.write_bw = opt_field(f[3], lineno);
        r.slowdown = opt_field(f[4], lineno);
        rows.push_back(r);
    }
    return rows;
}

struct ContentionRow {
    std::string name;
    MetricKind kind = MetricKind::TimeLowerBetter;
    double dram_low = 0, dram_high = 0;
    std::optional<double> cached_low, cached_high;
    double uncached_low = 0, uncached_high = 0;
};

std::vector<ContentionRow> parse_contention_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path, 1);
    const char* header = "name,metric_kind,perf_dram_low,perf_dram_high,perf_cached_low,"
                         "perf_cached_high,perf_uncached_low,perf_uncached_high";
    if (detail::strip(line) != header)
        throw FormatError(path + ": expected header '" + std::string(header) + "'");
    std::vector<ContentionRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::strip(line).empty()) continue;
        auto f = detail::split(line, ',');
        if (f.size() != 8) throw ParseError("expected 8 fields", lineno);
        ContentionRow r;
        r.name = detail::strip(f[0]);
        r.kind = metric_kind_from_string(detail::strip(f[1]));
        r.dram_low = detail::parse_num<double>(f[2], lineno);
        r.dram_high = detail::parse_num<double>(f[3], lineno);
        r.cached_low = opt_field(f[4], lineno);
        r.cached_high = opt_field(f[5], lineno);
        r.uncached_low = detail::parse_num<double>(f[6], lineno);
        r.uncached_high = detail::parse_num<double>(f[7], lineno);
        rows.push_back(r);
    }
    return rows;
}

struct CachePerfRow {
    std::string name;
    MetricKind kind = MetricKind::TimeLowerBetter;
    std::optional<double> dram, cached, uncached;
};

std::vector<CachePerfRow> parse_cache_perf_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path, 1);
    if (detail::strip(line) != "name,metric_kind,perf_dram,perf_cached,perf_uncached")
        throw FormatError(path + ": expected header "
                                 "'name,metric_kind,perf_dram,perf_cached,perf_uncached'");
    std::vector<CachePerfRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::strip(line).empty()) continue;
        auto f = detail::split(line, ',');
        if (f.size() != 5) throw ParseError("expected 5 fields", lineno);
        CachePerfRow r;
        r.name = detail::strip(f[0]);
        r.kind = metric_kind_from_string(detail::strip(f[1]));
        r.dram = opt_field(f[2], lineno);
        r.cached = opt_field(f[3], lineno);
        r.uncached = opt_field(f[4], lineno);
        rows.push_back(r);
    }
    return rows;
}

// ---- shared pipeline pieces ---------------------------------------------

// Core samples for training/evaluation; when a metadata sidecar sits next
// to the core file, samples outside its window are dropped.
std::vector<CoreSample> load_core_windowed(const std::string& path) {
    auto core = parse_core_file(path);
    std::filesystem::path meta(path);
    meta.replace_extension(".meta");
    if (std::filesystem::exists(meta)) {
        CounterTrace scratch;
        parse_meta_file(meta, scratch);
        std::erase_if(core, [&](const CoreSample& s) {
            return !scratch.window.contains(s.timestamp_ms);
        });
    }
    return core;
}

BandwidthTrace analyzed_trace(const std::string& prefix, const Settings& s) {
    const CounterTrace trace = parse_trace(prefix);
    const TrafficSeries series = account_traffic(trace);
    BandwidthTrace bw = compute_bandwidth(series);
    if (s.smooth > 1) bw = moving_average(bw, s.smooth);
    return bw;
}

void phase_section(Report& r, const Phase& p, std::size_t index) {
    r.section("phase " + std::to_string(index));
    r.kv("start_s", p.start_s);
    r.kv("end_s", p.end_s);
    r.kv("samples", static_cast<std::uint64_t>(p.end_index - p.start_index + 1));
    r.kv("avg_read_mbps", p.avg_read_mbps);
    r.kv("avg_write_mbps", p.avg_write_mbps);
    r.kv("peak_write_mbps", p.peak_write_mbps);
    r.kv("rw_ratio", p.rw_ratio);
    r.kv("duration_share", p.duration_share);
}

void write_plot_file(const std::string& path, const BandwidthTrace& bw,
                     const std::string& channel) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    if (channel == "both") {
        out << "time_s,read_mbps,write_mbps\n";
        for (std::size_t i = 0; i < bw.size(); ++i)
            out << fmt_double(bw.time_s[i]) << ',' << fmt_double(bw.read_mbps[i]) << ','
                << fmt_double(bw.write_mbps[i]) << '\n';
    } else {
        out << "time_s," << channel << "_mbps\n";
        const auto& v = channel == "read" ? bw.read_mbps : bw.write_mbps;
        for (std::size_t i = 0; i < bw.size(); ++i)
            out << fmt_double(bw.time_s[i]) << ',' << fmt_double(v[i]) << '\n';
    }
}

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ' ';
        out += names[i];
    }
    return out.empty() ? "none" : out;
}

void classify_section(Report& r, const std::string& name, const MetricsRow& row,
                      const Settings& s) {
    AppMetrics m;
    m.read_bw_mbps = row.read_bw;
    m.write_bw_mbps = row.write_bw;
    m.slowdown = row.slowdown;
    const Tier tier = classify_tier(m, s.tiers);
    r.section("app " + name);
    r.kv("metric_kind", to_string(row.kind));
    if (m.has_bandwidth()) {
        r.kv("read_bw_mbps", *m.read_bw_mbps);
        r.kv("write_bw_mbps", *m.write_bw_mbps);
        r.kv("total_bw_mbps", m.total_bw_mbps());
        r.kv("write_ratio", write_ratio(*m.read_bw_mbps, *m.write_bw_mbps));
    }
    if (m.slowdown)
        r.kv("slowdown", *m.slowdown);
    else
        r.kv("slowdown", "na");
    r.kv("tier", to_string(tier.label));
    r.kv("borderline", tier.borderline);
    r.kv("basis", tier.from_slowdown ? "slowdown" : "bandwidth");
    if (tier.advisory)
        r.kv("advisory_tier", to_string(*tier.advisory));
    else
        r.kv("advisory_tier", "na");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nvmlens: performance analysis toolkit for DRAM/NVM main memory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "key=value settings file")
        ->envname("NVMLENS_CONFIG");
    app.add_option("--report", g.report_path, "also write the report to this file");
    app.add_option("--seed", g.seed, "simulation seed override");
    app.add_flag("--deterministic", g.deterministic,
                 "omit timestamps so reports are byte-reproducible");
    app.add_option("--tier-low", g.tier_low, "slowdown boundary insensitive/scaled");
    app.add_option("--tier-high", g.tier_high, "slowdown boundary scaled/bottlenecked");
    app.add_option("--write-thresh", g.write_thresh, "throttling write bandwidth MB/s");
    app.add_option("--rw-thresh", g.rw_thresh, "throttling read/write ratio bound");
    app.add_option("--gap-thresh", g.gap_thresh, "contention ratio gap threshold");
    app.add_option("--alpha", g.alpha, "significance level for feature pruning");
    app.add_option("--lambda", g.lambda, "segmentation penalty fraction");
    app.add_option("--min-phase-len", g.min_phase_len, "minimum phase length, samples");
    app.add_option("--max-phases", g.max_phases, "maximum number of phases");
    app.add_option("--smooth", g.smooth, "moving average window, samples");
    app.add_option("--bw-floor", g.bw_floor, "advisory bandwidth floor MB/s");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "run the memory simulator");
    sim_cmd->fallthrough();
    struct {
        std::string workload, mem_config, mode, out_prefix;
    } sim;
    sim_cmd->add_option("--workload", sim.workload, "workload spec file")->required();
    sim_cmd->add_option("--mem-config", sim.mem_config, "memory config file");
    sim_cmd->add_option("--mode", sim.mode, "mode override: dram_only|cached_nvm|uncached_nvm");
    sim_cmd->add_option("--out-prefix", sim.out_prefix, "output path prefix")->required();
    sim_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        WorkloadSpec w = load_workload(sim.workload);
        MemoryConfig cfg;
        if (!sim.mem_config.empty()) cfg = load_memory_config(sim.mem_config);
        if (!sim.mode.empty()) cfg.mode = mem_mode_from_string(sim.mode);
        if (g.seed) w.rng_seed = *g.seed;
        const SimResult result = simulate(w, cfg);
        emit_trace(result, w, sim.out_prefix);
        Report r;
        manifest(r, "simulate", s,
                 {{"workload", sim.workload},
                  {"mem_config", sim.mem_config.empty() ? "defaults" : sim.mem_config},
                  {"mode", to_string(cfg.mode)},
                  {"out_prefix", sim.out_prefix}});
        r.section("result");
        r.kv("mode", to_string(cfg.mode));
        r.kv("concurrency", w.concurrency);
        r.kv("runtime_s", result.runtime_s);
        r.kv("samples", static_cast<std::uint64_t>(result.intervals.size()));
        for (std::size_t i = 0; i < result.phases.size(); ++i) {
            const auto& p = result.phases[i];
            r.section("sim_phase " + std::to_string(i));
            r.kv("nominal_s", p.nominal_s);
            r.kv("actual_s", p.actual_s);
            r.kv("stretch", p.stretch);
            r.kv("achieved_read_mbps", p.achieved_read_mbps);
            r.kv("achieved_write_mbps", p.achieved_write_mbps);
            r.kv("dram_read_mbps", p.dram_read_mbps);
            r.kv("dram_write_mbps", p.dram_write_mbps);
            r.kv("nvm_read_mbps", p.nvm_read_mbps);
            r.kv("nvm_write_mbps", p.nvm_write_mbps);
        }
        finish(r, g);
    });

    // analyze
    auto* an_cmd = app.add_subcommand("analyze", "bandwidth timeline and phase report");
    an_cmd->fallthrough();
    struct {
        std::string trace, plot_out;
    } an;
    an_cmd->add_option("--trace", an.trace, "trace path or prefix")->required();
    an_cmd->add_option("--plot-out", an.plot_out, "write time_s,read_mbps,write_mbps CSV");
    an_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        const BandwidthTrace bw = analyzed_trace(an.trace, s);
        const auto phases = segment_phases(bw, s.seg);
        Report r;
        manifest(r, "analyze", s, {{"trace", an.trace}});
        r.section("bandwidth");
        r.kv("samples", static_cast<std::uint64_t>(bw.size()));
        r.kv("duration_s", bw.duration_s());
        const Phase whole = phase_stats(bw, 0, bw.size() - 1);
        r.kv("avg_read_mbps", whole.avg_read_mbps);
        r.kv("avg_write_mbps", whole.avg_write_mbps);
        r.kv("peak_write_mbps", whole.peak_write_mbps);
        r.kv("rw_ratio", whole.rw_ratio);
        r.kv("phases", static_cast<std::uint64_t>(phases.size()));
        for (std::size_t i = 0; i < phases.size(); ++i) phase_section(r, phases[i], i);
        if (!an.plot_out.empty()) write_plot_file(an.plot_out, bw, "both");
        finish(r, g);
    });

    // classify
    auto* cl_cmd = app.add_subcommand("classify", "three-tier sensitivity classification");
    cl_cmd->fallthrough();
    struct {
        std::string metrics, trace_dram, trace_nvm, name = "app";
    } cl;
    cl_cmd->add_option("--metrics", cl.metrics, "metrics table CSV");
    cl_cmd->add_option("--trace-dram", cl.trace_dram, "DRAM baseline trace prefix");
    cl_cmd->add_option("--trace-nvm", cl.trace_nvm, "uncached-NVM trace prefix");
    cl_cmd->add_option("--name", cl.name, "app name for trace-pair classification");
    cl_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        Report r;
        if (!cl.metrics.empty()) {
            manifest(r, "classify", s, {{"metrics", cl.metrics}});
            for (const auto& row : parse_metrics_file(cl.metrics))
                classify_section(r, row.name, row, s);
        } else if (!cl.trace_dram.empty() && !cl.trace_nvm.empty()) {
            manifest(r, "classify", s,
                     {{"trace_dram", cl.trace_dram}, {"trace_nvm", cl.trace_nvm}});
            const CounterTrace dram = parse_trace(cl.trace_dram);
            const CounterTrace nvm = parse_trace(cl.trace_nvm);
            const BandwidthTrace bw = compute_bandwidth(account_traffic(dram));
            const Phase whole = phase_stats(bw, 0, bw.size() - 1);
            MetricsRow row;
            row.name = cl.name;
            row.kind = MetricKind::TimeLowerBetter;
            row.read_bw = whole.avg_read_mbps;
            row.write_bw = whole.avg_write_mbps;
            const double dram_span =
                static_cast<double>(dram.window.end_ms - dram.window.start_ms);
            const double nvm_span =
                static_cast<double>(nvm.window.end_ms - nvm.window.start_ms);
            row.slowdown = nvm_span / dram_span;
            classify_section(r, row.name, row, s);
        } else {
            throw DomainError("classify needs --metrics or --trace-dram/--trace-nvm");
        }
        finish(r, g);
    });

    // throttle-check
    auto* th_cmd = app.add_subcommand("throttle-check",
                                      "per-phase write throttling risk on a DRAM trace");
    th_cmd->fallthrough();
    struct {
        std::string trace;
    } th;
    th_cmd->add_option("--trace", th.trace, "trace path or prefix")->required();
    th_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        const BandwidthTrace bw = analyzed_trace(th.trace, s);
        const auto phases = segment_phases(bw, s.seg);
        Report r;
        manifest(r, "throttle-check", s, {{"trace", th.trace}});
        bool any_high = false;
        r.section("throttle");
        r.kv("phases", static_cast<std::uint64_t>(phases.size()));
        for (std::size_t i = 0; i < phases.size(); ++i) {
            const auto risk = detect_write_throttling(phases[i], s.tiers.write_thresh_mbps,
                                                      s.tiers.rw_thresh);
            any_high = any_high || risk == ThrottleRisk::High;
            phase_section(r, phases[i], i);
            r.kv("throttle_risk", to_string(risk));
        }
        r.section("summary");
        r.kv("any_high", any_high);
        finish(r, g);
    });

    // contention
    auto* co_cmd = app.add_subcommand("contention", "concurrency contention verdicts");
    co_cmd->fallthrough();
    struct {
        std::string perf;
    } co;
    co_cmd->add_option("--perf", co.perf, "performance table CSV")->required();
    co_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        Report r;
        manifest(r, "contention", s, {{"perf", co.perf}});
        for (const auto& row : parse_contention_file(co.perf)) {
            const double rd = contention_ratio(row.dram_high, row.dram_low, row.kind);
            std::optional<double> rc;
            if (row.cached_low && row.cached_high)
                rc = contention_ratio(*row.cached_high, *row.cached_low, row.kind);
            const double ru =
                contention_ratio(row.uncached_high, row.uncached_low, row.kind);
            const auto v = make_contention_verdict(rd, rc, ru, s.gap_thresh);
            r.section("app " + row.name);
            r.kv("metric_kind", to_string(row.kind));
            r.kv("ratio_dram", v.ratio_dram);
            if (v.ratio_cached)
                r.kv("ratio_cached", *v.ratio_cached);
            else
                r.kv("ratio_cached", "na");
            r.kv("ratio_uncached", v.ratio_uncached);
            r.kv("gap", v.gap);
            r.kv("contended_on_nvm", v.contended_on_nvm);
        }
        finish(r, g);
    });

    // cache-metrics
    auto* cm_cmd = app.add_subcommand("cache-metrics",
                                      "cache efficiency and cached speedup");
    cm_cmd->fallthrough();
    struct {
        std::string perf;
    } cm;
    cm_cmd->add_option("--perf", cm.perf, "performance table CSV")->required();
    cm_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        Report r;
        manifest(r, "cache-metrics", s, {{"perf", cm.perf}});
        for (const auto& row : parse_cache_perf_file(cm.perf)) {
            r.section("app " + row.name);
            r.kv("metric_kind", to_string(row.kind));
            if (row.cached && row.dram)
                r.kv("cache_efficiency", cache_efficiency(*row.cached, *row.dram, row.kind));
            else
                r.kv("cache_efficiency", "na");
            if (row.cached && row.uncached)
                r.kv("cached_speedup", cached_speedup(*row.cached, *row.uncached, row.kind));
            else
                r.kv("cached_speedup", "na");
        }
        finish(r, g);
    });

    // predict-train
    auto* pt_cmd = app.add_subcommand("predict-train", "fit the IPC prediction model");
    pt_cmd->fallthrough();
    struct {
        std::vector<std::string> core;
        std::string out_model;
    } pt;
    pt_cmd->add_option("--core", pt.core, "core sample file(s)")->required();
    pt_cmd->add_option("--out-model", pt.out_model, "model file to write")->required();
    pt_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        std::vector<FeatureVector> feats;
        std::vector<double> y;
        for (const auto& path : pt.core) {
            const auto core = load_core_windowed(path);
            auto f = features_per_sample(core);
            auto ipc = ipc_per_sample(core);
            feats.insert(feats.end(), f.begin(), f.end());
            y.insert(y.end(), ipc.begin(), ipc.end());
        }
        const RegressionModel model = train_model(feats, y, s.alpha);
        save_model(pt.out_model, model);
        Report r;
        std::vector<std::pair<std::string, std::string>> inputs;
        for (std::size_t i = 0; i < pt.core.size(); ++i)
            inputs.emplace_back("core_" + std::to_string(i), pt.core[i]);
        inputs.emplace_back("out_model", pt.out_model);
        manifest(r, "predict-train", s, inputs);
        r.section("model");
        r.kv("training_rows", static_cast<std::uint64_t>(y.size()));
        std::string inc;
        for (int i : model.included) inc += (inc.empty() ? "p" : " p") + std::to_string(i);
        r.kv("included", inc);
        r.kv_list("beta", model.beta);
        r.kv("sigma", model.sigma);
        r.kv("r_squared", model.r_squared);
        r.kv("dof", model.dof);
        r.kv("p_values_valid", model.p_values_valid);
        if (model.p_values_valid) r.kv_list("p_value", model.p_value);
        std::string rem;
        for (int i : model.removal_order)
            rem += (rem.empty() ? "p" : " p") + std::to_string(i);
        r.kv("removed", rem.empty() ? "none" : rem);
        r.kv("pruning_skipped", model.pruning_skipped);
        finish(r, g);
    });

    // predict-eval
    auto* pe_cmd = app.add_subcommand("predict-eval", "score the model on core samples");
    pe_cmd->fallthrough();
    struct {
        std::string model;
        std::vector<std::string> core;
    } pe;
    pe_cmd->add_option("--model", pe.model, "model file")->required();
    pe_cmd->add_option("--core", pe.core, "core sample file(s)")->required();
    pe_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        const RegressionModel model = load_model(pe.model);
        Report r;
        std::vector<std::pair<std::string, std::string>> inputs{{"model", pe.model}};
        for (std::size_t i = 0; i < pe.core.size(); ++i)
            inputs.emplace_back("core_" + std::to_string(i), pe.core[i]);
        manifest(r, "predict-eval", s, inputs);
        double sum_all = 0;
        std::size_t n_all = 0;
        for (const auto& path : pe.core) {
            const auto core = load_core_windowed(path);
            const auto feats = features_per_sample(core);
            const auto y = ipc_per_sample(core);
            double sum = 0, lo = 1e300, hi = -1e300;
            for (std::size_t i = 0; i < feats.size(); ++i) {
                const double a = accuracy(predict_ipc(model, feats[i]), y[i]);
                sum += a;
                lo = std::min(lo, a);
                hi = std::max(hi, a);
            }
            r.section("eval " + path);
            r.kv("rows", static_cast<std::uint64_t>(feats.size()));
            r.kv("mean_accuracy", sum / static_cast<double>(feats.size()));
            r.kv("min_accuracy", lo);
            r.kv("max_accuracy", hi);
            sum_all += sum;
            n_all += feats.size();
        }
        r.section("summary");
        r.kv("rows", static_cast<std::uint64_t>(n_all));
        r.kv("mean_accuracy", sum_all / static_cast<double>(n_all));
        finish(r, g);
    });

    // place
    auto* pl_cmd = app.add_subcommand("place", "write-aware data placement advisor");
    pl_cmd->fallthrough();
    struct {
        std::string objects, workload, mem_config;
        std::int64_t budget = 0;
        std::uint64_t granule = 1ull << 20;
    } pl;
    pl_cmd->add_option("--objects", pl.objects, "per-object traffic profile CSV")->required();
    pl_cmd->add_option("--budget", pl.budget, "DRAM budget in bytes")->required();
    pl_cmd->add_option("--granule", pl.granule, "knapsack size granule in bytes");
    pl_cmd->add_option("--workload", pl.workload, "workload spec for runtime estimation");
    pl_cmd->add_option("--mem-config", pl.mem_config, "memory config for estimation");
    pl_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        const auto objects = profile_objects(pl.objects);
        Report r;
        manifest(r, "place", s,
                 {{"objects", pl.objects},
                  {"budget_bytes", std::to_string(pl.budget)},
                  {"granule_bytes", std::to_string(pl.granule)},
                  {"workload", pl.workload.empty() ? "none" : pl.workload}});
        for (const auto strategy :
             {PlacementStrategy::GreedyDensity, PlacementStrategy::ExactDP}) {
            const auto plan = advise(objects, pl.budget, strategy, pl.granule);
            r.section(std::string("plan ") + to_string(strategy));
            r.kv("in_dram", join_names(plan.in_dram));
            r.kv("dram_used_bytes", plan.dram_used_bytes);
            r.kv("captured_write_fraction", plan.captured_write_fraction);
            r.kv("captured_read_fraction", plan.captured_read_fraction);
            if (!pl.workload.empty()) {
                WorkloadSpec w = load_workload(pl.workload);
                w.objects = objects; // the profile is authoritative for shares
                MemoryConfig cfg;
                if (!pl.mem_config.empty()) cfg = load_memory_config(pl.mem_config);
                cfg.mode = MemMode::UncachedNvm;
                const auto est = estimate(plan, w, cfg);
                r.kv("runtime_s", est.runtime_s);
                r.kv("all_nvm_runtime_s", est.all_nvm_runtime_s);
                r.kv("speedup_vs_all_nvm", est.speedup_vs_all_nvm);
            }
        }
        finish(r, g);
    });

    // plot-data
    auto* pd_cmd = app.add_subcommand("plot-data", "emit delimited series for plotting");
    pd_cmd->fallthrough();
    struct {
        std::string trace, report, section, key, out, channel = "both";
    } pd;
    pd_cmd->add_option("--trace", pd.trace, "trace path or prefix");
    pd_cmd->add_option("--from-report", pd.report, "extract an array field from a report");
    pd_cmd->add_option("--section", pd.section, "report section holding the field");
    pd_cmd->add_option("--key", pd.key, "report key holding the array");
    pd_cmd->add_option("--out", pd.out, "output CSV file")->required();
    pd_cmd->add_option("--channel", pd.channel, "both|read|write");
    pd_cmd->callback([&] {
        const Settings s = resolve_settings(g);
        Report r;
        if (!pd.trace.empty()) {
            if (pd.channel != "both" && pd.channel != "read" && pd.channel != "write")
                throw DomainError("channel must be both|read|write");
            const BandwidthTrace bw = analyzed_trace(pd.trace, s);
            write_plot_file(pd.out, bw, pd.channel);
            manifest(r, "plot-data", s, {{"trace", pd.trace}, {"out", pd.out}});
        } else if (!pd.report.empty()) {
            const auto entries = parse_report(pd.report);
            const ReportEntry* hit = nullptr;
            for (const auto& e : entries)
                if (e.section == pd.section && e.key == pd.key) hit = &e;
            if (!hit)
                throw Error("report has no key '" + pd.key + "' in section '" +
                            pd.section + "'");
            std::ofstream out(pd.out);
            if (!out) throw Error("cannot write " + pd.out);
            out << "index," << pd.key << '\n';
            std::istringstream is(hit->value);
            std::string tok;
            std::size_t idx = 0;
            while (is >> tok) out << idx++ << ',' << tok << '\n';
            manifest(r, "plot-data", s, {{"from_report", pd.report}, {"out", pd.out}});
        } else {
            throw DomainError("plot-data needs --trace or --from-report");
        }
        r.section("plot");
        r.kv("out", pd.out);
        finish(r, g);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
