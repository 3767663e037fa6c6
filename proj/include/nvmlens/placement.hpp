#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nvmlens/memsim.hpp"

namespace nvmlens {

enum class PlacementStrategy { GreedyDensity, ExactDP };

const char* to_string(PlacementStrategy s);

struct PlacementPlan {
    PlacementStrategy strategy = PlacementStrategy::ExactDP;
    std::vector<std::string> in_dram; // sorted by object name
    std::uint64_t dram_used_bytes = 0;
    double captured_write_fraction = 0.0;
    double captured_read_fraction = 0.0;
};

/// Chooses which objects live in DRAM under the byte budget, maximizing
/// captured write share. GreedyDensity packs by write_share/size;
/// ExactDP solves the 0/1 knapsack with sizes quantized to the granule.
PlacementPlan advise(const std::vector<DataObject>& objects, std::int64_t budget_bytes,
                     PlacementStrategy strategy,
                     std::uint64_t granule_bytes = 1ull << 20);

struct PlacementEstimate {
    double runtime_s = 0.0;
    double all_nvm_runtime_s = 0.0;
    double speedup_vs_all_nvm = 1.0;
};

/// Runs the workload with the plan's captured fractions served from DRAM
/// and the remainder through the NVM service model; cfg.mode must be
/// UncachedNvm (side-by-side placement).
PlacementEstimate estimate(const PlacementPlan& plan, const WorkloadSpec& w,
                           const MemoryConfig& cfg);

/// Reads a per-object traffic profile (name,size_bytes,read_bytes,write_bytes)
/// and normalizes byte counts into demand shares.
std::vector<DataObject> profile_objects(const std::filesystem::path& path);

} // namespace nvmlens
