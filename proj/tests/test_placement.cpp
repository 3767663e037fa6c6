#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "nvmlens/error.hpp"
#include "nvmlens/placement.hpp"

using namespace nvmlens;
using testutil::TempDir;

namespace {

constexpr std::uint64_t kMiB = 1ull << 20;
constexpr std::uint64_t kGiB = 1ull << 30;

DataObject obj(const std::string& name, std::uint64_t size, double wshare,
               double rshare = 0.0) {
    return {name, size, rshare, wshare};
}

// Exhaustive knapsack oracle over raw byte sizes.
double enumerate_best(const std::vector<DataObject>& objects, std::uint64_t budget) {
    const std::size_t n = objects.size();
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
        std::uint64_t size = 0;
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1ull << i)) {
                size += objects[i].size_bytes;
                value += objects[i].write_share;
            }
        }
        if (size <= budget && value > best) best = value;
    }
    return best;
}

std::vector<DataObject> random_instance(std::mt19937_64& rng, std::size_t max_n) {
    const std::size_t n = 1 + rng() % max_n;
    std::vector<DataObject> objects;
    double remaining = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double share = remaining * (static_cast<double>(rng() % 1000) / 1500.0);
        remaining -= share;
        objects.push_back(obj("o" + std::to_string(i), (1 + rng() % 4096) * kMiB, share,
                              remaining * 0.001));
    }
    return objects;
}

} // namespace

TEST_CASE("advise trivial budgets") {
    const std::vector<DataObject> objects{obj("a", 2 * kGiB, 0.5), obj("b", 3 * kGiB, 0.3),
                                          obj("c", 4 * kGiB, 0.2)};
    SUBCASE("budget above the total takes everything") {
        for (auto strategy : {PlacementStrategy::GreedyDensity, PlacementStrategy::ExactDP}) {
            const auto plan = advise(objects, 10 * kGiB, strategy);
            CHECK(plan.in_dram.size() == 3);
            CHECK(plan.captured_write_fraction == doctest::Approx(1.0));
        }
    }
    SUBCASE("zero budget takes nothing") {
        for (auto strategy : {PlacementStrategy::GreedyDensity, PlacementStrategy::ExactDP}) {
            const auto plan = advise(objects, 0, strategy);
            CHECK(plan.in_dram.empty());
            CHECK(plan.captured_write_fraction == 0.0);
            CHECK(plan.dram_used_bytes == 0);
        }
    }
    SUBCASE("negative budget is a domain error") {
        CHECK_THROWS_AS(advise(objects, -1, PlacementStrategy::ExactDP), DomainError);
    }
}

TEST_CASE("three-object instance matches the exhaustive oracle") {
    const std::vector<DataObject> objects{obj("a", 2 * kGiB, 0.5), obj("b", 3 * kGiB, 0.3),
                                          obj("c", 4 * kGiB, 0.2)};
    const std::uint64_t budget = 5 * kGiB;
    const auto dp = advise(objects, static_cast<std::int64_t>(budget),
                           PlacementStrategy::ExactDP);
    CHECK(dp.captured_write_fraction == doctest::Approx(0.8));
    CHECK(dp.in_dram == std::vector<std::string>{"a", "b"});
    CHECK(dp.captured_write_fraction ==
          doctest::Approx(enumerate_best(objects, budget)));

    const auto greedy = advise(objects, static_cast<std::int64_t>(budget),
                               PlacementStrategy::GreedyDensity);
    CHECK(greedy.in_dram == dp.in_dram);
}

TEST_CASE("exact dp equals exhaustive enumeration on random MiB-aligned instances") {
    std::mt19937_64 rng(1231);
    for (int trial = 0; trial < 300; ++trial) {
        const auto objects = random_instance(rng, 12);
        std::uint64_t total = 0;
        for (const auto& o : objects) total += o.size_bytes;
        const std::uint64_t budget = (rng() % (total / kMiB + 2)) * kMiB;
        const auto dp = advise(objects, static_cast<std::int64_t>(budget),
                               PlacementStrategy::ExactDP);
        CHECK(dp.captured_write_fraction ==
              doctest::Approx(enumerate_best(objects, budget)).epsilon(1e-9));
        CHECK(dp.dram_used_bytes <= budget);

        const auto greedy = advise(objects, static_cast<std::int64_t>(budget),
                                   PlacementStrategy::GreedyDensity);
        CHECK(greedy.dram_used_bytes <= budget);
        CHECK(dp.captured_write_fraction >= greedy.captured_write_fraction - 1e-12);
    }
}

TEST_CASE("captured write fraction is non-decreasing in budget") {
    std::mt19937_64 rng(777);
    const auto objects = random_instance(rng, 10);
    for (auto strategy : {PlacementStrategy::GreedyDensity, PlacementStrategy::ExactDP}) {
        double prev = -1.0;
        for (std::uint64_t b = 0; b <= 16 * kGiB; b += kGiB) {
            const auto plan = advise(objects, static_cast<std::int64_t>(b), strategy);
            CHECK(plan.captured_write_fraction >= prev - 1e-12);
            prev = plan.captured_write_fraction;
        }
    }
}

TEST_CASE("estimate consistency cases") {
    WorkloadSpec w;
    w.phases = {{10.0, 9000.0, 4000.0}, {20.0, 30000.0, 800.0}};
    w.concurrency = 24;
    w.footprint_bytes = 10 * kGiB;
    w.objects = {obj("hot", 3 * kGiB, 0.7, 0.4), obj("cold", 7 * kGiB, 0.3, 0.6)};
    MemoryConfig cfg;
    cfg.mode = MemMode::UncachedNvm;

    SUBCASE("an empty plan is exactly the all-nvm baseline") {
        PlacementPlan empty;
        const auto est = estimate(empty, w, cfg);
        CHECK(est.speedup_vs_all_nvm == doctest::Approx(1.0));
        CHECK(est.runtime_s == doctest::Approx(est.all_nvm_runtime_s));
    }
    SUBCASE("an all-dram plan under dram caps runs at nominal time") {
        const auto plan = advise(w.objects, static_cast<std::int64_t>(20 * kGiB),
                                 PlacementStrategy::ExactDP);
        REQUIRE(plan.captured_write_fraction == doctest::Approx(1.0));
        const auto est = estimate(plan, w, cfg);
        CHECK(est.runtime_s == doctest::Approx(30.0)); // dram-only would be nominal
    }
    SUBCASE("unknown object names are rejected") {
        PlacementPlan plan;
        plan.in_dram = {"mystery"};
        CHECK_THROWS_AS(estimate(plan, w, cfg), Error);
    }
    SUBCASE("estimate requires uncached mode") {
        MemoryConfig cached = cfg;
        cached.mode = MemMode::CachedNvm;
        CHECK_THROWS_AS(estimate(PlacementPlan{}, w, cached), DomainError);
    }
    SUBCASE("dp plans never slow the workload down") {
        std::mt19937_64 rng(4242);
        for (int trial = 0; trial < 25; ++trial) {
            WorkloadSpec wr = w;
            wr.phases = {{5.0 + static_cast<double>(rng() % 20),
                          static_cast<double>(rng() % 50000),
                          static_cast<double>(rng() % 30000)}};
            const auto plan =
                advise(wr.objects, static_cast<std::int64_t>(rng() % (12 * kGiB)),
                       PlacementStrategy::ExactDP);
            CHECK(estimate(plan, wr, cfg).speedup_vs_all_nvm >= 1.0 - 1e-9);
        }
    }
}

TEST_CASE("write-hot placement doubles a matrix-multiply style workload") {
    // write-hot panel takes 30% of the footprint; a short write burst phase
    // dominates the uncached run
    const std::uint64_t footprint = 50 * kGiB;
    WorkloadSpec w;
    w.phases = {{6.0, 20000.0, 35700.0}, {114.0, 9583.0, 100.0}};
    w.concurrency = 36;
    w.footprint_bytes = footprint;
    w.objects = {obj("panel", 15 * kGiB, 0.85, 0.30), obj("left", 12 * kGiB, 0.06, 0.35),
                 obj("right", 23 * kGiB, 0.09, 0.35)};
    MemoryConfig cfg;
    cfg.mode = MemMode::UncachedNvm;

    const auto budget = static_cast<std::int64_t>(footprint * 2 / 5); // 40%
    const auto plan = advise(w.objects, budget, PlacementStrategy::ExactDP);
    CHECK(plan.dram_used_bytes <= static_cast<std::uint64_t>(budget));
    const auto est = estimate(plan, w, cfg);
    CHECK(est.speedup_vs_all_nvm >= 1.8);
}

TEST_CASE("profile files normalize byte counts into shares") {
    TempDir dir("objects");
    SUBCASE("single object owns all traffic") {
        testutil::write_file(dir.file("p.objects"), "name,size_bytes,read_bytes,write_bytes\n"
                                                    "only,1048576,123,456\n");
        const auto objects = profile_objects(dir.file("p.objects"));
        REQUIRE(objects.size() == 1);
        CHECK(objects[0].read_share == doctest::Approx(1.0));
        CHECK(objects[0].write_share == doctest::Approx(1.0));
    }
    SUBCASE("equal write traffic splits evenly") {
        testutil::write_file(dir.file("p.objects"), "name,size_bytes,read_bytes,write_bytes\n"
                                                    "a,1048576,10,700\n"
                                                    "b,2097152,30,700\n");
        const auto objects = profile_objects(dir.file("p.objects"));
        REQUIRE(objects.size() == 2);
        CHECK(objects[0].write_share == doctest::Approx(0.5));
        CHECK(objects[1].write_share == doctest::Approx(0.5));
        CHECK(objects[0].read_share == doctest::Approx(0.25));
    }
    SUBCASE("zero totals mean zero shares") {
        testutil::write_file(dir.file("p.objects"), "name,size_bytes,read_bytes,write_bytes\n"
                                                    "a,1048576,0,0\n");
        CHECK(profile_objects(dir.file("p.objects"))[0].write_share == 0.0);
    }
    SUBCASE("duplicate names are rejected") {
        testutil::write_file(dir.file("p.objects"), "name,size_bytes,read_bytes,write_bytes\n"
                                                    "a,1,1,1\na,1,1,1\n");
        CHECK_THROWS_AS(profile_objects(dir.file("p.objects")), FormatError);
    }
}

TEST_CASE("object profiles emitted by the simulator round-trip into shares") {
    WorkloadSpec w;
    w.phases = {{30.0, 12000.0, 6000.0}};
    w.concurrency = 24;
    w.footprint_bytes = 10 * kGiB;
    w.objects = {obj("hot", 3 * kGiB, 0.625, 0.125), obj("cold", 7 * kGiB, 0.375, 0.875)};
    w.rng_seed = 61;
    MemoryConfig cfg;
    const auto result = simulate(w, cfg);
    TempDir dir("obj_rt");
    emit_trace(result, w, dir.file("run"));
    const auto objects = profile_objects(dir.file("run.objects"));
    REQUIRE(objects.size() == 2);
    CHECK(objects[0].write_share == doctest::Approx(0.625).epsilon(1e-9));
    CHECK(objects[0].read_share == doctest::Approx(0.125).epsilon(1e-9));
    CHECK(objects[1].size_bytes == 7 * kGiB);
}
