#include "nvmlens/trace.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "nvmlens/detail/text.hpp"
#include "nvmlens/error.hpp"

namespace nvmlens {

const char* to_string(DeviceKind k) {
    switch (k) {
    case DeviceKind::DramDimm: return "dram_dimm";
    case DeviceKind::Nvdimm: return "nvdimm";
    }
    return "?";
}

const char* to_string(MemMode m) {
    switch (m) {
    case MemMode::DramOnly: return "dram_only";
    case MemMode::CachedNvm: return "cached_nvm";
    case MemMode::UncachedNvm: return "uncached_nvm";
    }
    return "?";
}

DeviceKind device_kind_from_string(const std::string& s) {
    if (s == "dram_dimm") return DeviceKind::DramDimm;
    if (s == "nvdimm") return DeviceKind::Nvdimm;
    throw FormatError("unknown device_kind '" + s + "'");
}

MemMode mem_mode_from_string(const std::string& s) {
    if (s == "dram_only") return MemMode::DramOnly;
    if (s == "cached_nvm") return MemMode::CachedNvm;
    if (s == "uncached_nvm") return MemMode::UncachedNvm;
    throw FormatError("unknown mode '" + s + "'");
}

std::string device_label(const CounterSample::DeviceId& d) {
    std::ostringstream os;
    os << to_string(d.kind) << " socket=" << d.socket << " id=" << d.device_id;
    return os.str();
}

namespace {

using detail::parse_num;
using detail::split;
using detail::strip;

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

void expect_header(const std::string& got, const std::string& want,
                   const std::filesystem::path& path) {
    if (strip(got) != want)
        throw FormatError(path.string() + ": expected header '" + want + "', got '" +
                          strip(got) + "'");
}

} // namespace

std::uint64_t TrafficSeries::total_read() const {
    return std::accumulate(read_bytes.begin(), read_bytes.end(), std::uint64_t{0});
}

std::uint64_t TrafficSeries::total_write() const {
    return std::accumulate(write_bytes.begin(), write_bytes.end(), std::uint64_t{0});
}

std::vector<CounterSample> parse_counter_file(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path.string(), lineno);
    expect_header(line, "timestamp_ms,socket,device_kind,device_id,read_bytes,write_bytes",
                  path);

    std::vector<CounterSample> samples;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 6)
            throw ParseError("expected 6 fields, got " + std::to_string(fields.size()),
                             lineno);
        CounterSample s;
        s.timestamp_ms = parse_num<std::int64_t>(fields[0], lineno);
        s.socket = parse_num<int>(fields[1], lineno);
        s.device_kind = device_kind_from_string(strip(fields[2]));
        s.device_id = parse_num<int>(fields[3], lineno);
        s.read_bytes = parse_num<std::uint64_t>(fields[4], lineno);
        s.write_bytes = parse_num<std::uint64_t>(fields[5], lineno);
        samples.push_back(s);
    }
    return samples;
}

std::vector<CoreSample> parse_core_file(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path.string(), lineno);
    expect_header(line, "timestamp_ms,p0,p1,p2,p3,p4,p5", path);

    std::vector<CoreSample> samples;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 7)
            throw ParseError("expected 7 fields, got " + std::to_string(fields.size()),
                             lineno);
        CoreSample s;
        s.timestamp_ms = parse_num<std::int64_t>(fields[0], lineno);
        for (std::size_t i = 0; i < kNumCoreEvents; ++i)
            s.events[i] = parse_num<std::uint64_t>(fields[1 + i], lineno);
        s.ipc = s.events[1] > 0
                    ? static_cast<double>(s.events[0]) / static_cast<double>(s.events[1])
                    : 0.0;
        samples.push_back(s);
    }
    return samples;
}

void parse_meta_file(const std::filesystem::path& path, CounterTrace& trace) {
    auto in = open_or_throw(path);
    std::string line;
    std::size_t lineno = 0;
    bool have_mode = false, have_start = false, have_end = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = strip(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
        const std::string key = strip(t.substr(0, eq));
        const std::string value = strip(t.substr(eq + 1));
        if (key == "mode") {
            trace.mode = mem_mode_from_string(value);
            have_mode = true;
        } else if (key == "concurrency") {
            trace.concurrency = parse_num<int>(value, lineno);
        } else if (key == "footprint_bytes") {
            trace.footprint_bytes = parse_num<std::uint64_t>(value, lineno);
        } else if (key == "window_start_ms") {
            trace.window.start_ms = parse_num<std::int64_t>(value, lineno);
            have_start = true;
        } else if (key == "window_end_ms") {
            trace.window.end_ms = parse_num<std::int64_t>(value, lineno);
            have_end = true;
        } else {
            throw FormatError(path.string() + ": unknown metadata key '" + key + "'");
        }
    }
    if (!have_mode || !have_start || !have_end)
        throw FormatError(path.string() + ": metadata requires mode, window_start_ms, "
                                          "window_end_ms");
}

void CounterTrace::validate() const {
    // Group rows into per-device streams, preserving file order.
    std::map<CounterSample::DeviceId, const CounterSample*> last_seen;
    std::int64_t min_ts = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_ts = std::numeric_limits<std::int64_t>::min();
    for (const auto& s : samples) {
        if (mode == MemMode::DramOnly && s.device_kind == DeviceKind::Nvdimm)
            throw IntegrityError("dram_only trace contains a record for " +
                                 device_label(s.device()));
        min_ts = std::min(min_ts, s.timestamp_ms);
        max_ts = std::max(max_ts, s.timestamp_ms);
        auto [it, inserted] = last_seen.try_emplace(s.device(), &s);
        if (!inserted) {
            const CounterSample* prev = it->second;
            if (s.timestamp_ms <= prev->timestamp_ms)
                throw IntegrityError("non-increasing timestamps for " +
                                     device_label(s.device()));
            if (s.read_bytes < prev->read_bytes || s.write_bytes < prev->write_bytes)
                throw IntegrityError("cumulative counter decreased for " +
                                     device_label(s.device()));
            it->second = &s;
        }
    }
    if (!samples.empty()) {
        if (window.start_ms < min_ts || window.end_ms > max_ts ||
            window.start_ms >= window.end_ms)
            throw IntegrityError("window [" + std::to_string(window.start_ms) + ", " +
                                 std::to_string(window.end_ms) +
                                 "] not inside sampled span [" + std::to_string(min_ts) +
                                 ", " + std::to_string(max_ts) + "]");
    }
    for (const auto& c : core) {
        if (c.events[1] > 0) {
            const double want =
                static_cast<double>(c.events[0]) / static_cast<double>(c.events[1]);
            if (std::abs(c.ipc - want) > 1e-9 * std::max(1.0, std::abs(want)))
                throw IntegrityError("core sample ipc inconsistent with p0/p1");
        }
    }
}

namespace {

std::filesystem::path resolve_prefix(const std::filesystem::path& path) {
    if (path.extension() == ".trace") {
        auto p = path;
        p.replace_extension();
        return p;
    }
    return path;
}

} // namespace

CounterTrace parse_trace(const std::filesystem::path& path) {
    const auto prefix = resolve_prefix(path);
    auto with_ext = [&](const char* ext) {
        auto p = prefix;
        p += ext;
        return p;
    };
    CounterTrace trace;
    trace.samples = parse_counter_file(with_ext(".trace"));
    parse_meta_file(with_ext(".meta"), trace);
    if (std::filesystem::exists(with_ext(".core")))
        trace.core = parse_core_file(with_ext(".core"));
    trace.validate();
    return trace;
}

void write_counter_file(const std::filesystem::path& path,
                        const std::vector<CounterSample>& samples) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "timestamp_ms,socket,device_kind,device_id,read_bytes,write_bytes\n";
    for (const auto& s : samples)
        out << s.timestamp_ms << ',' << s.socket << ',' << to_string(s.device_kind) << ','
            << s.device_id << ',' << s.read_bytes << ',' << s.write_bytes << '\n';
}

void write_core_file(const std::filesystem::path& path,
                     const std::vector<CoreSample>& samples) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "timestamp_ms,p0,p1,p2,p3,p4,p5\n";
    for (const auto& s : samples) {
        out << s.timestamp_ms;
        for (auto e : s.events) out << ',' << e;
        out << '\n';
    }
}

void write_meta_file(const std::filesystem::path& path, const CounterTrace& trace) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "mode = " << to_string(trace.mode) << '\n'
        << "concurrency = " << trace.concurrency << '\n'
        << "footprint_bytes = " << trace.footprint_bytes << '\n'
        << "window_start_ms = " << trace.window.start_ms << '\n'
        << "window_end_ms = " << trace.window.end_ms << '\n';
}

TrafficSeries account_traffic(const CounterTrace& trace) {
    trace.validate();

    const bool include_nvm = trace.mode == MemMode::UncachedNvm;
    struct Point {
        std::int64_t ts;
        std::uint64_t read, write;
    };
    std::map<CounterSample::DeviceId, std::vector<Point>> streams;
    std::vector<std::int64_t> boundaries;
    for (const auto& s : trace.samples) {
        if (s.device_kind == DeviceKind::Nvdimm && !include_nvm) continue;
        streams[s.device()].push_back({s.timestamp_ms, s.read_bytes, s.write_bytes});
        if (trace.window.contains(s.timestamp_ms)) boundaries.push_back(s.timestamp_ms);
    }
    std::sort(boundaries.begin(), boundaries.end());
    boundaries.erase(std::unique(boundaries.begin(), boundaries.end()), boundaries.end());
    if (boundaries.size() < 2)
        throw InsufficientDataError("window contains fewer than two sample timestamps; "
                                    "accounted series would be empty");
    for (auto& [id, pts] : streams)
        std::sort(pts.begin(), pts.end(),
                  [](const Point& a, const Point& b) { return a.ts < b.ts; });

    // Cumulative counter value at time t: last sample at or before t;
    // before a device's first sample the device contributes nothing.
    auto value_at = [](const std::vector<Point>& pts, std::int64_t t) {
        auto it = std::upper_bound(pts.begin(), pts.end(), t,
                                   [](std::int64_t v, const Point& p) { return v < p.ts; });
        if (it == pts.begin()) return std::pair<std::uint64_t, std::uint64_t>{pts[0].read,
                                                                              pts[0].write};
        --it;
        return std::pair<std::uint64_t, std::uint64_t>{it->read, it->write};
    };

    TrafficSeries series;
    series.start_ms = boundaries.front();
    series.end_ms.assign(boundaries.begin() + 1, boundaries.end());
    series.read_bytes.assign(series.end_ms.size(), 0);
    series.write_bytes.assign(series.end_ms.size(), 0);
    for (const auto& [id, pts] : streams) {
        auto [r_prev, w_prev] = value_at(pts, boundaries.front());
        for (std::size_t i = 1; i < boundaries.size(); ++i) {
            auto [r, w] = value_at(pts, boundaries[i]);
            series.read_bytes[i - 1] += r - r_prev;
            series.write_bytes[i - 1] += w - w_prev;
            r_prev = r;
            w_prev = w;
        }
    }
    return series;
}

} // namespace nvmlens
