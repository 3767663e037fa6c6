#include "nvmlens/memsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "nvmlens/detail/text.hpp"
#include "nvmlens/error.hpp"

namespace nvmlens {

namespace {

constexpr int kDimmsPerKind = 6;
constexpr double kCoreNoise = 0.01;

std::string fmt_full(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

void MemoryConfig::validate() const {
    if (dram_read_cap_mbps <= 0 || dram_write_cap_mbps <= 0 || nvm_read_cap_mbps <= 0 ||
        nvm_write_cap_mbps <= 0)
        throw DomainError("bandwidth caps must be positive");
    if (throttle_knee_mbps < 0) throw DomainError("throttle knee must be >= 0");
    if (wpq_knee < 1) throw DomainError("wpq knee must be >= 1");
    if (wpq_decay < 0) throw DomainError("wpq decay must be >= 0");
    if (write_thrash < 0 || read_throttle < 0)
        throw DomainError("coupling knobs must be >= 0");
    if (conflict_factor <= 0 || conflict_factor > 1)
        throw DomainError("conflict factor must be in (0, 1]");
    if (jitter_amplitude < 0 || jitter_amplitude > 0.5)
        throw DomainError("jitter amplitude must be in [0, 0.5]");
    if (sample_interval_ms <= 0) throw DomainError("sample interval must be positive");
    if (clock_ghz <= 0 || peak_ipc <= 0) throw DomainError("core model needs positive "
                                                           "clock and peak ipc");
}

void WorkloadSpec::validate() const {
    if (phases.empty()) throw DomainError("workload needs at least one phase");
    for (const auto& p : phases) {
        if (p.duration_s <= 0) throw DomainError("phase durations must be positive");
        if (p.read_mbps < 0 || p.write_mbps < 0)
            throw DomainError("phase demands must be >= 0");
    }
    if (concurrency < 1) throw DomainError("concurrency must be >= 1");
    double rs = 0, ws = 0;
    std::set<std::string> names;
    for (const auto& o : objects) {
        if (o.name.empty()) throw FormatError("object with empty name");
        if (!names.insert(o.name).second)
            throw FormatError("duplicate object name '" + o.name + "'");
        if (o.read_share < 0 || o.read_share > 1 || o.write_share < 0 ||
            o.write_share > 1)
            throw DomainError("object shares must be in [0, 1]");
        rs += o.read_share;
        ws += o.write_share;
    }
    if (rs > 1.0 + 1e-9 || ws > 1.0 + 1e-9)
        throw DomainError("object shares sum beyond 1");
}

NvmService nvm_service(double demand_read_mbps, double demand_write_mbps,
                       double concurrency, const MemoryConfig& cfg) {
    if (demand_read_mbps < 0 || demand_write_mbps < 0)
        throw DomainError("demands must be >= 0");
    if (concurrency < 1) throw DomainError("concurrency must be >= 1");

    // Queue-merge efficiency decays beyond the knee; the write ramp models
    // filling the queue, the read ramp the growing request parallelism.
    const double eta = 1.0 / (1.0 + cfg.wpq_decay * std::max(0.0, concurrency - cfg.wpq_knee));
    const double write_cap =
        cfg.nvm_write_cap_mbps * std::min(concurrency / cfg.wpq_knee, 1.0) * eta;
    const double read_cap =
        cfg.nvm_read_cap_mbps * std::min(1.0, 0.25 + 0.75 * concurrency / cfg.wpq_knee);

    NvmService out;
    if (demand_write_mbps <= cfg.throttle_knee_mbps) {
        out.read_mbps = std::min(demand_read_mbps, read_cap);
        out.write_mbps = std::min(demand_write_mbps, write_cap);
        return out;
    }
    // Coupled regime: overcommitted writes thrash the queue, and the
    // excess write load (in read-unit cost) starves read service.
    const double k = cfg.nvm_read_cap_mbps / cfg.nvm_write_cap_mbps;
    const double overcommit = std::max(0.0, demand_write_mbps / write_cap - 1.0);
    const double thrashed_cap = write_cap / (1.0 + cfg.write_thrash * overcommit);
    out.write_mbps = eta * std::min(demand_write_mbps, thrashed_cap);
    const double excess = demand_write_mbps - cfg.throttle_knee_mbps;
    const double read_avail =
        read_cap / (1.0 + cfg.read_throttle * k * excess / read_cap);
    out.read_mbps = std::min(demand_read_mbps, read_avail);
    return out;
}

CacheTraffic dram_cache(std::uint64_t footprint_bytes, std::uint64_t dram_capacity_bytes,
                        double demand_read_mbps, double demand_write_mbps,
                        const MemoryConfig& cfg) {
    if (footprint_bytes == 0) throw DomainError("zero workload footprint");
    if (demand_read_mbps < 0 || demand_write_mbps < 0)
        throw DomainError("demands must be >= 0");
    CacheTraffic t;
    const double capacity_ratio =
        static_cast<double>(dram_capacity_bytes) / static_cast<double>(footprint_bytes);
    t.hit_ratio = std::min(1.0, capacity_ratio) * cfg.conflict_factor;
    const double miss = 1.0 - t.hit_ratio;
    const double fill = miss * demand_read_mbps; // load misses read NVM, then fill DRAM
    t.dram_read_mbps = demand_read_mbps;
    t.dram_write_mbps = demand_write_mbps + fill;
    t.nvm_read_mbps = fill;
    t.nvm_write_mbps = miss * demand_write_mbps; // dirty lines evicted to NVM
    return t;
}

namespace {

PhaseResult route_phase(const WorkloadPhaseSpec& phase, const WorkloadSpec& w,
                        const MemoryConfig& cfg) {
    PhaseResult r;
    r.nominal_s = phase.duration_s;
    const double dr = phase.read_mbps, dw = phase.write_mbps;
    double stretch = 1.0;
    switch (cfg.mode) {
    case MemMode::DramOnly: {
        stretch = std::max({1.0, dr / cfg.dram_read_cap_mbps, dw / cfg.dram_write_cap_mbps});
        r.dram_read_mbps = dr / stretch;
        r.dram_write_mbps = dw / stretch;
        break;
    }
    case MemMode::UncachedNvm: {
        const auto svc = nvm_service(dr, dw, w.concurrency, cfg);
        if (dr > 0) stretch = std::max(stretch, dr / svc.read_mbps);
        if (dw > 0) stretch = std::max(stretch, dw / svc.write_mbps);
        r.nvm_read_mbps = dr / stretch;
        r.nvm_write_mbps = dw / stretch;
        break;
    }
    case MemMode::CachedNvm: {
        const auto ct = dram_cache(w.footprint_bytes, cfg.dram_capacity_bytes, dr, dw, cfg);
        const auto svc = nvm_service(ct.nvm_read_mbps, ct.nvm_write_mbps, w.concurrency, cfg);
        stretch = std::max({1.0, ct.dram_read_mbps / cfg.dram_read_cap_mbps,
                            ct.dram_write_mbps / cfg.dram_write_cap_mbps});
        if (ct.nvm_read_mbps > 0) stretch = std::max(stretch, ct.nvm_read_mbps / svc.read_mbps);
        if (ct.nvm_write_mbps > 0)
            stretch = std::max(stretch, ct.nvm_write_mbps / svc.write_mbps);
        r.dram_read_mbps = ct.dram_read_mbps / stretch;
        r.dram_write_mbps = ct.dram_write_mbps / stretch;
        r.nvm_read_mbps = ct.nvm_read_mbps / stretch;
        r.nvm_write_mbps = ct.nvm_write_mbps / stretch;
        break;
    }
    }
    r.stretch = stretch;
    r.actual_s = phase.duration_s * stretch;
    r.achieved_read_mbps = dr / stretch;
    r.achieved_write_mbps = dw / stretch;
    return r;
}

// Deterministic symmetric jitter in [-1, 1); mt19937_64 gives the same
// stream on every platform, the distribution mapping is done by hand.
class JitterStream {
public:
    explicit JitterStream(std::uint64_t seed) : rng_(seed) {}
    double sym() {
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }

private:
    std::mt19937_64 rng_;
};

std::uint64_t scaled_bytes(double mbps_times_s, double jitter) {
    const double v = mbps_times_s * 1e6 * jitter;
    return v <= 0 ? 0 : static_cast<std::uint64_t>(std::llround(v));
}

} // namespace

SimResult simulate(const WorkloadSpec& w, const MemoryConfig& cfg) {
    w.validate();
    cfg.validate();
    if (cfg.mode == MemMode::CachedNvm && w.footprint_bytes == 0)
        throw DomainError("cached mode needs a non-zero footprint");

    SimResult result;
    result.trace.mode = cfg.mode;
    result.trace.concurrency = w.concurrency;
    result.trace.footprint_bytes = w.footprint_bytes;

    double clock_s = 0.0;
    std::vector<double> phase_start_s;
    for (const auto& p : w.phases) {
        auto r = route_phase(p, w, cfg);
        phase_start_s.push_back(clock_s);
        clock_s += r.actual_s;
        result.phases.push_back(r);
    }
    result.runtime_s = clock_s;

    const std::int64_t runtime_ms = std::max<std::int64_t>(1, std::llround(clock_s * 1000.0));
    std::vector<std::int64_t> ends;
    for (std::int64_t t = cfg.sample_interval_ms; t < runtime_ms; t += cfg.sample_interval_ms)
        ends.push_back(t);
    ends.push_back(runtime_ms);

    const bool emit_nvm = cfg.mode != MemMode::DramOnly;
    JitterStream jitter(w.rng_seed);

    struct DeviceState {
        DeviceKind kind;
        int id;
        std::uint64_t read = 0, write = 0;
    };
    std::vector<DeviceState> devices;
    for (int i = 0; i < kDimmsPerKind; ++i)
        devices.push_back({DeviceKind::DramDimm, i});
    if (emit_nvm)
        for (int i = 0; i < kDimmsPerKind; ++i)
            devices.push_back({DeviceKind::Nvdimm, i});

    auto emit_samples = [&](std::int64_t ts) {
        for (const auto& d : devices) {
            CounterSample s;
            s.timestamp_ms = ts;
            s.socket = 0;
            s.device_kind = d.kind;
            s.device_id = d.id;
            s.read_bytes = d.read;
            s.write_bytes = d.write;
            result.trace.samples.push_back(s);
        }
    };
    emit_samples(0);

    auto spread = [&](std::uint64_t total, DeviceKind kind, bool is_read) {
        const std::uint64_t base = total / kDimmsPerKind;
        std::uint64_t rem = total % kDimmsPerKind;
        for (auto& d : devices) {
            if (d.kind != kind) continue;
            std::uint64_t add = base + (rem > 0 ? 1 : 0);
            if (rem > 0) --rem;
            (is_read ? d.read : d.write) += add;
        }
    };

    std::int64_t prev_ms = 0;
    for (std::int64_t end : ends) {
        const double t0 = static_cast<double>(prev_ms) / 1000.0;
        const double t1 = static_cast<double>(end) / 1000.0;
        const double dt = t1 - t0;
        double dram_r = 0, dram_w = 0, nvm_r = 0, nvm_w = 0, serviced = 0;
        for (std::size_t i = 0; i < result.phases.size(); ++i) {
            const auto& ph = result.phases[i];
            const double a = std::max(t0, phase_start_s[i]);
            const double b = std::min(t1, phase_start_s[i] + ph.actual_s);
            if (b <= a) continue;
            const double ov = b - a;
            dram_r += ph.dram_read_mbps * ov;
            dram_w += ph.dram_write_mbps * ov;
            nvm_r += ph.nvm_read_mbps * ov;
            nvm_w += ph.nvm_write_mbps * ov;
            serviced += ov / ph.stretch;
        }
        // One jitter draw per channel per interval, in fixed order, so a
        // seed fully determines the emitted byte stream.
        const double j_dr = 1.0 + cfg.jitter_amplitude * jitter.sym();
        const double j_dw = 1.0 + cfg.jitter_amplitude * jitter.sym();
        const double j_nr = 1.0 + cfg.jitter_amplitude * jitter.sym();
        const double j_nw = 1.0 + cfg.jitter_amplitude * jitter.sym();

        IntervalRecord rec;
        rec.end_ms = end;
        rec.dram_read_bytes = scaled_bytes(dram_r, j_dr);
        rec.dram_write_bytes = scaled_bytes(dram_w, j_dw);
        rec.nvm_read_bytes = emit_nvm ? scaled_bytes(nvm_r, j_nr) : 0;
        rec.nvm_write_bytes = emit_nvm ? scaled_bytes(nvm_w, j_nw) : 0;
        result.intervals.push_back(rec);

        spread(rec.dram_read_bytes, DeviceKind::DramDimm, true);
        spread(rec.dram_write_bytes, DeviceKind::DramDimm, false);
        if (emit_nvm) {
            spread(rec.nvm_read_bytes, DeviceKind::Nvdimm, true);
            spread(rec.nvm_write_bytes, DeviceKind::Nvdimm, false);
        }
        emit_samples(end);

        // Synthetic core events, per hardware thread scale: activity and
        // stalls follow the serviced fraction, traffic events follow the
        // emitted byte stream.
        const double rho = std::clamp(dt > 0 ? serviced / dt : 1.0, 0.0, 1.0);
        const double n1 = 1.0 + kCoreNoise * jitter.sym();
        const double n2 = 1.0 + kCoreNoise * jitter.sym();
        const double n3 = 1.0 + kCoreNoise * jitter.sym();
        const double n4 = 1.0 + kCoreNoise * jitter.sym();
        CoreSample cs;
        cs.timestamp_ms = end;
        const double active = (0.70 + 0.30 * rho) * n1;
        const double cycles = cfg.clock_ghz * 1e9 * dt * active;
        const double ipc = cfg.peak_ipc * (0.15 + 0.85 * rho) * n2;
        cs.events[1] = static_cast<std::uint64_t>(std::llround(cycles));
        cs.events[0] = static_cast<std::uint64_t>(std::llround(ipc * cycles));
        cs.events[2] =
            static_cast<std::uint64_t>(std::llround(cycles * 0.85 * (1.0 - rho) * n3));
        cs.events[3] =
            static_cast<std::uint64_t>(std::llround(cycles * 0.55 * (1.0 - rho) * n4));
        cs.events[4] = (rec.dram_read_bytes + rec.nvm_read_bytes) / 64;
        cs.events[5] = (rec.dram_write_bytes + rec.nvm_write_bytes) / 64;
        cs.ipc = cs.events[1] > 0 ? static_cast<double>(cs.events[0]) /
                                        static_cast<double>(cs.events[1])
                                  : 0.0;
        result.trace.core.push_back(cs);

        prev_ms = end;
    }

    result.trace.window = {0, runtime_ms};
    result.trace.validate();
    return result;
}

void emit_trace(const SimResult& result, const WorkloadSpec& w,
                const std::filesystem::path& prefix) {
    auto with_ext = [&](const char* ext) {
        auto p = prefix;
        p += ext;
        return p;
    };
    write_counter_file(with_ext(".trace"), result.trace.samples);
    write_meta_file(with_ext(".meta"), result.trace);
    write_core_file(with_ext(".core"), result.trace.core);

    std::ofstream truth(with_ext(".truth"));
    if (!truth) throw Error("cannot write " + with_ext(".truth").string());
    truth << "nvmlens truth v1\n";
    truth << "runtime_s = " << fmt_full(result.runtime_s) << '\n';
    for (std::size_t i = 0; i < result.phases.size(); ++i) {
        const auto& p = result.phases[i];
        truth << "phase = index=" << i << " nominal_s=" << fmt_full(p.nominal_s)
              << " actual_s=" << fmt_full(p.actual_s) << " stretch=" << fmt_full(p.stretch)
              << " achieved_read_mbps=" << fmt_full(p.achieved_read_mbps)
              << " achieved_write_mbps=" << fmt_full(p.achieved_write_mbps)
              << " dram_read_mbps=" << fmt_full(p.dram_read_mbps)
              << " dram_write_mbps=" << fmt_full(p.dram_write_mbps)
              << " nvm_read_mbps=" << fmt_full(p.nvm_read_mbps)
              << " nvm_write_mbps=" << fmt_full(p.nvm_write_mbps) << '\n';
    }

    if (!w.objects.empty()) {
        double total_read_mb = 0, total_write_mb = 0;
        for (const auto& p : w.phases) {
            total_read_mb += p.read_mbps * p.duration_s;
            total_write_mb += p.write_mbps * p.duration_s;
        }
        std::ofstream obj(with_ext(".objects"));
        if (!obj) throw Error("cannot write " + with_ext(".objects").string());
        obj << "name,size_bytes,read_bytes,write_bytes\n";
        for (const auto& o : w.objects) {
            const auto rb = static_cast<std::uint64_t>(
                std::llround(o.read_share * total_read_mb * 1e6));
            const auto wb = static_cast<std::uint64_t>(
                std::llround(o.write_share * total_write_mb * 1e6));
            obj << o.name << ',' << o.size_bytes << ',' << rb << ',' << wb << '\n';
        }
    }
}

namespace {

using detail::parse_num;
using detail::parse_pairs;
using detail::strip;

} // namespace

WorkloadSpec load_workload(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    WorkloadSpec w;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = strip(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
        const std::string key = strip(t.substr(0, eq));
        const std::string value = strip(t.substr(eq + 1));
        if (key == "concurrency") {
            w.concurrency = parse_num<int>(value, lineno);
        } else if (key == "footprint_bytes") {
            w.footprint_bytes = parse_num<std::uint64_t>(value, lineno);
        } else if (key == "seed") {
            w.rng_seed = parse_num<std::uint64_t>(value, lineno);
        } else if (key == "phase") {
            WorkloadPhaseSpec p;
            for (const auto& [k, v] : parse_pairs(value, lineno)) {
                if (k == "duration_s") p.duration_s = parse_num<double>(v, lineno);
                else if (k == "read_mbps") p.read_mbps = parse_num<double>(v, lineno);
                else if (k == "write_mbps") p.write_mbps = parse_num<double>(v, lineno);
                else throw FormatError("unknown phase field '" + k + "'");
            }
            w.phases.push_back(p);
        } else if (key == "object") {
            DataObject o;
            for (const auto& [k, v] : parse_pairs(value, lineno)) {
                if (k == "name") o.name = v;
                else if (k == "size_bytes") o.size_bytes = parse_num<std::uint64_t>(v, lineno);
                else if (k == "read_share") o.read_share = parse_num<double>(v, lineno);
                else if (k == "write_share") o.write_share = parse_num<double>(v, lineno);
                else throw FormatError("unknown object field '" + k + "'");
            }
            w.objects.push_back(o);
        } else {
            throw FormatError(path.string() + ": unknown workload key '" + key + "'");
        }
    }
    w.validate();
    return w;
}

MemoryConfig load_memory_config(const std::filesystem::path& path,
                                const MemoryConfig& defaults) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    MemoryConfig cfg = defaults;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = strip(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
        const std::string key = strip(t.substr(0, eq));
        const std::string value = strip(t.substr(eq + 1));
        if (key == "mode") cfg.mode = mem_mode_from_string(value);
        else if (key == "dram_read_cap_mbps") cfg.dram_read_cap_mbps = parse_num<double>(value, lineno);
        else if (key == "dram_write_cap_mbps") cfg.dram_write_cap_mbps = parse_num<double>(value, lineno);
        else if (key == "nvm_read_cap_mbps") cfg.nvm_read_cap_mbps = parse_num<double>(value, lineno);
        else if (key == "nvm_write_cap_mbps") cfg.nvm_write_cap_mbps = parse_num<double>(value, lineno);
        else if (key == "throttle_knee_mbps") cfg.throttle_knee_mbps = parse_num<double>(value, lineno);
        else if (key == "wpq_knee") cfg.wpq_knee = parse_num<double>(value, lineno);
        else if (key == "wpq_decay") cfg.wpq_decay = parse_num<double>(value, lineno);
        else if (key == "write_thrash") cfg.write_thrash = parse_num<double>(value, lineno);
        else if (key == "read_throttle") cfg.read_throttle = parse_num<double>(value, lineno);
        else if (key == "conflict_factor") cfg.conflict_factor = parse_num<double>(value, lineno);
        else if (key == "dram_capacity_bytes") cfg.dram_capacity_bytes = parse_num<std::uint64_t>(value, lineno);
        else if (key == "jitter") cfg.jitter_amplitude = parse_num<double>(value, lineno);
        else if (key == "sample_interval_ms") cfg.sample_interval_ms = parse_num<std::int64_t>(value, lineno);
        else if (key == "clock_ghz") cfg.clock_ghz = parse_num<double>(value, lineno);
        else if (key == "peak_ipc") cfg.peak_ipc = parse_num<double>(value, lineno);
        else throw FormatError(path.string() + ": unknown config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

} // namespace nvmlens
