#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nvmlens/trace.hpp"

namespace nvmlens {

/// Event counts for one observation window, plus the sampled IPC used to
/// scale them before normalization.
struct FeatureVector {
    std::array<double, kNumCoreEvents> raw{}; // window-total event counts
    double ipc_s = 0.0;

    std::array<double, kNumCoreEvents> scaled() const {
        std::array<double, kNumCoreEvents> s{};
        for (std::size_t i = 0; i < kNumCoreEvents; ++i) s[i] = raw[i] * ipc_s;
        return s;
    }
};

/// Zero-score parameters over a training set (population stddev).
struct NormalizationParams {
    std::array<double, kNumCoreEvents> mean{};
    std::array<double, kNumCoreEvents> stddev{};
    std::array<bool, kNumCoreEvents> constant{}; // stddev == 0, excluded from models
};

/// Plain multivariate least-squares fit of y on the given columns plus an
/// intercept.
struct OlsResult {
    std::vector<double> beta;
    double intercept = 0.0;
    std::vector<double> std_err;
    std::vector<double> t_stat;
    std::vector<double> p_value;
    bool p_values_valid = true; // false on the rank-deficient (minimum-norm) path
    double r_squared = 0.0;
    int dof = 0;
    std::vector<double> residuals;
};

/// Fitted prediction model: surviving events, their coefficients on
/// zero-scored scaled features, and the diagnostics of the final fit.
struct RegressionModel {
    std::vector<int> included; // event indices, ascending
    std::vector<double> beta;  // one per included event
    double sigma = 0.0;        // intercept
    std::vector<double> std_err;
    std::vector<double> t_stat;
    std::vector<double> p_value;
    bool p_values_valid = true;
    double r_squared = 0.0;
    int dof = 0;
    NormalizationParams norm;
    std::vector<int> removal_order; // events pruned, in pruning order
    bool pruning_skipped = false;
    double alpha = 0.05;
};

enum class TrainingStrategy { MidConcurrency, SmallSize };

const char* to_string(TrainingStrategy s);

struct TrainingPlan {
    TrainingStrategy strategy = TrainingStrategy::MidConcurrency;
    int anchor_concurrency = 0;
    std::uint64_t anchor_size_bytes = 0; // SmallSize only
};

/// Sums event counts over core samples inside the window; ipc_s is the
/// window-level p0/p1 ratio.
FeatureVector extract_features(const std::vector<CoreSample>& core_samples,
                               const TimeWindow& window);

/// One feature vector (and observed IPC) per core sample.
std::vector<FeatureVector> features_per_sample(const std::vector<CoreSample>& core);
std::vector<double> ipc_per_sample(const std::vector<CoreSample>& core);

NormalizationParams fit_normalization(const std::vector<FeatureVector>& features);

/// Zero scores of the scaled features; constant features map to 0.
std::array<double, kNumCoreEvents> apply_normalization(const NormalizationParams& params,
                                                       const FeatureVector& feature);

/// rows: n observations of p regressors (no intercept column; one is added).
OlsResult ols_fit(const std::vector<std::vector<double>>& rows,
                  const std::vector<double>& y);

/// Two-sided Student-t tail probability.
double student_t_p_value(double t, int dof);

/// Full training pipeline: normalization, initial fit over non-constant
/// events, rank repair, and backward elimination at significance alpha.
RegressionModel train_model(const std::vector<FeatureVector>& features,
                            const std::vector<double>& observed_ipc,
                            double alpha = 0.05);

double predict_ipc(const RegressionModel& model, const FeatureVector& feature);

/// 1 - |predicted - observed| / observed (unclamped).
double accuracy(double predicted, double observed);

TrainingPlan make_concurrency_plan(int hardware_threads);
TrainingPlan make_size_plan(int fixed_concurrency,
                            const std::vector<std::uint64_t>& size_ladder_bytes);

void save_model(const std::filesystem::path& path, const RegressionModel& model);
RegressionModel load_model(const std::filesystem::path& path);

} // namespace nvmlens
