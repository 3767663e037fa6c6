#include "nvmlens/placement.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "nvmlens/detail/text.hpp"
#include "nvmlens/error.hpp"

namespace nvmlens {

const char* to_string(PlacementStrategy s) {
    return s == PlacementStrategy::GreedyDensity ? "greedy_density" : "exact_dp";
}

namespace {

void validate_objects(const std::vector<DataObject>& objects) {
    std::set<std::string> names;
    double rs = 0, ws = 0;
    for (const auto& o : objects) {
        if (o.name.empty()) throw FormatError("object with empty name");
        if (!names.insert(o.name).second)
            throw FormatError("duplicate object name '" + o.name + "'");
        if (o.read_share < 0 || o.read_share > 1 || o.write_share < 0 || o.write_share > 1)
            throw FormatError("object shares must be in [0, 1]");
        rs += o.read_share;
        ws += o.write_share;
    }
    if (rs > 1.0 + 1e-9 || ws > 1.0 + 1e-9)
        throw FormatError("object shares sum beyond 1 after normalization");
}

PlacementPlan finish_plan(PlacementStrategy strategy,
                          const std::vector<DataObject>& objects,
                          const std::vector<bool>& take) {
    PlacementPlan plan;
    plan.strategy = strategy;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (!take[i]) continue;
        plan.in_dram.push_back(objects[i].name);
        plan.dram_used_bytes += objects[i].size_bytes;
        plan.captured_write_fraction += objects[i].write_share;
        plan.captured_read_fraction += objects[i].read_share;
    }
    std::sort(plan.in_dram.begin(), plan.in_dram.end());
    return plan;
}

std::vector<bool> greedy_density(const std::vector<DataObject>& objects,
                                 std::uint64_t budget) {
    std::vector<std::size_t> order(objects.size());
    std::iota(order.begin(), order.end(), 0);
    auto density = [&](std::size_t i) {
        const auto& o = objects[i];
        if (o.size_bytes == 0)
            return std::numeric_limits<double>::infinity();
        return o.write_share / static_cast<double>(o.size_bytes);
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = density(a), db = density(b);
        if (da != db) return da > db;
        return objects[a].name < objects[b].name;
    });
    std::vector<bool> take(objects.size(), false);
    std::uint64_t used = 0;
    for (std::size_t i : order) {
        if (used + objects[i].size_bytes > budget) continue;
        used += objects[i].size_bytes;
        take[i] = true;
    }
    return take;
}

std::vector<bool> knapsack_dp(const std::vector<DataObject>& objects,
                              std::uint64_t budget, std::uint64_t granule) {
    const std::size_t n = objects.size();
    // Sizes are quantized upward so a DP-feasible pick never exceeds the
    // byte budget.
    std::vector<std::uint64_t> weight(n);
    std::uint64_t weight_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = (objects[i].size_bytes + granule - 1) / granule;
        weight_sum += weight[i];
    }
    // a budget beyond the total size only needs the total-sized table
    const std::uint64_t cap = std::min(budget / granule, weight_sum);

    std::vector<double> best(cap + 1, 0.0);
    std::vector<std::vector<bool>> chosen(n, std::vector<bool>(cap + 1, false));
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t wi = weight[i];
        const double vi = objects[i].write_share;
        if (wi > cap) continue;
        for (std::uint64_t c = cap;; --c) {
            if (c >= wi && best[c - wi] + vi > best[c]) {
                best[c] = best[c - wi] + vi;
                chosen[i][c] = true;
            }
            if (c == 0) break;
        }
    }
    std::vector<bool> take(n, false);
    std::uint64_t c = cap;
    for (std::size_t i = n; i-- > 0;) {
        if (chosen[i][c]) {
            take[i] = true;
            c -= weight[i];
        }
    }
    return take;
}

} // namespace

PlacementPlan advise(const std::vector<DataObject>& objects, std::int64_t budget_bytes,
                     PlacementStrategy strategy, std::uint64_t granule_bytes) {
    if (budget_bytes < 0) throw DomainError("budget must be >= 0");
    if (granule_bytes == 0) throw DomainError("granule must be positive");
    validate_objects(objects);
    const auto budget = static_cast<std::uint64_t>(budget_bytes);
    const auto take = strategy == PlacementStrategy::GreedyDensity
                          ? greedy_density(objects, budget)
                          : knapsack_dp(objects, budget, granule_bytes);
    return finish_plan(strategy, objects, take);
}

PlacementEstimate estimate(const PlacementPlan& plan, const WorkloadSpec& w,
                           const MemoryConfig& cfg) {
    if (cfg.mode != MemMode::UncachedNvm)
        throw DomainError("placement estimate needs uncached_nvm mode");
    w.validate();
    cfg.validate();

    std::map<std::string, const DataObject*> by_name;
    for (const auto& o : w.objects) by_name[o.name] = &o;
    double captured_r = 0, captured_w = 0;
    for (const auto& name : plan.in_dram) {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw Error("plan references unknown object '" + name + "'");
        captured_r += it->second->read_share;
        captured_w += it->second->write_share;
    }

    auto run = [&](double cr, double cw) {
        double runtime = 0.0;
        for (const auto& p : w.phases) {
            const double dram_r = cr * p.read_mbps;
            const double dram_w = cw * p.write_mbps;
            const double nvm_r = p.read_mbps - dram_r;
            const double nvm_w = p.write_mbps - dram_w;
            double stretch = std::max({1.0, dram_r / cfg.dram_read_cap_mbps,
                                       dram_w / cfg.dram_write_cap_mbps});
            const auto svc = nvm_service(nvm_r, nvm_w, w.concurrency, cfg);
            if (nvm_r > 0) stretch = std::max(stretch, nvm_r / svc.read_mbps);
            if (nvm_w > 0) stretch = std::max(stretch, nvm_w / svc.write_mbps);
            runtime += p.duration_s * stretch;
        }
        return runtime;
    };

    PlacementEstimate est;
    est.runtime_s = run(captured_r, captured_w);
    est.all_nvm_runtime_s = run(0.0, 0.0);
    est.speedup_vs_all_nvm = est.all_nvm_runtime_s / est.runtime_s;
    return est;
}

std::vector<DataObject> profile_objects(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path.string(), lineno);
    if (detail::strip(line) != "name,size_bytes,read_bytes,write_bytes")
        throw FormatError(path.string() +
                          ": expected header 'name,size_bytes,read_bytes,write_bytes'");

    struct Row {
        std::string name;
        std::uint64_t size, read, write;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::strip(line).empty()) continue;
        auto fields = detail::split(line, ',');
        if (fields.size() != 4)
            throw ParseError("expected 4 fields, got " + std::to_string(fields.size()),
                             lineno);
        rows.push_back({detail::strip(fields[0]),
                        detail::parse_num<std::uint64_t>(fields[1], lineno),
                        detail::parse_num<std::uint64_t>(fields[2], lineno),
                        detail::parse_num<std::uint64_t>(fields[3], lineno)});
    }

    long double total_r = 0, total_w = 0;
    for (const auto& r : rows) {
        total_r += r.read;
        total_w += r.write;
    }
    std::vector<DataObject> objects;
    objects.reserve(rows.size());
    for (const auto& r : rows) {
        DataObject o;
        o.name = r.name;
        o.size_bytes = r.size;
        o.read_share = total_r > 0 ? static_cast<double>(r.read / total_r) : 0.0;
        o.write_share = total_w > 0 ? static_cast<double>(r.write / total_w) : 0.0;
        objects.push_back(o);
    }
    validate_objects(objects);
    return objects;
}

} // namespace nvmlens
