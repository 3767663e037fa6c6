#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "nvmlens/error.hpp"
#include "nvmlens/memsim.hpp"
#include "nvmlens/predictor.hpp"

using namespace nvmlens;

namespace {

// Deterministic uniform in [0,1) and Box-Muller normal; keeps fixtures
// identical across platforms.
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    double gauss() {
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

// Independent check: solve the normal equations (A^T A) c = A^T y in
// extended precision with Gaussian elimination.
std::vector<long double> normal_equation_oracle(const std::vector<std::vector<double>>& rows,
                                                const std::vector<double>& y) {
    const std::size_t n = rows.size();
    const std::size_t p = rows[0].size() + 1; // plus intercept
    std::vector<std::vector<long double>> ata(p, std::vector<long double>(p, 0));
    std::vector<long double> aty(p, 0);
    auto at = [&](std::size_t i, std::size_t j) -> long double {
        return j + 1 == p ? 1.0L : static_cast<long double>(rows[i][j]);
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            aty[a] += at(i, a) * static_cast<long double>(y[i]);
            for (std::size_t b = 0; b < p; ++b) ata[a][b] += at(i, a) * at(i, b);
        }
    }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(static_cast<double>(ata[r][col])) >
                std::abs(static_cast<double>(ata[pivot][col])))
                pivot = r;
        std::swap(ata[col], ata[pivot]);
        std::swap(aty[col], aty[pivot]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const long double f = ata[r][col] / ata[col][col];
            for (std::size_t c = col; c < p; ++c) ata[r][c] -= f * ata[col][c];
            aty[r] -= f * aty[col];
        }
    }
    std::vector<long double> coef(p);
    for (std::size_t i = 0; i < p; ++i) coef[i] = aty[i] / ata[i][i];
    return coef;
}

FeatureVector vec1(double value) {
    FeatureVector f;
    f.raw[0] = value;
    f.ipc_s = 1.0;
    return f;
}

CoreSample sample(std::int64_t ts, std::uint64_t p0, std::uint64_t p1,
                  std::uint64_t rest = 10) {
    CoreSample s;
    s.timestamp_ms = ts;
    s.events = {p0, p1, rest, rest + 1, rest + 2, rest + 3};
    s.ipc = p1 ? static_cast<double>(p0) / static_cast<double>(p1) : 0.0;
    return s;
}

} // namespace

TEST_CASE("extract_features sums the window and scales by the sampled ipc") {
    std::vector<CoreSample> core{sample(1000, 2000000000, 1000000000, 7)};
    const auto f = extract_features(core, {0, 2000});
    CHECK(f.ipc_s == doctest::Approx(2.0));
    const auto s = f.scaled();
    CHECK(s[2] == doctest::Approx(2.0 * 7));
    CHECK(s[3] == doctest::Approx(2.0 * 8));

    SUBCASE("doubling the samples doubles the counts but not the ipc") {
        core.push_back(sample(1500, 2000000000, 1000000000, 7));
        const auto g = extract_features(core, {0, 2000});
        CHECK(g.ipc_s == doctest::Approx(2.0));
        CHECK(g.raw[2] == doctest::Approx(14.0));
    }
    SUBCASE("samples outside the window are ignored") {
        core.push_back(sample(9000, 1, 1, 999));
        const auto g = extract_features(core, {0, 2000});
        CHECK(g.raw[2] == doctest::Approx(7.0));
    }
    SUBCASE("empty window fails") {
        CHECK_THROWS_AS(extract_features(core, {5000, 6000}), InsufficientDataError);
    }
    SUBCASE("no active cycles fails") {
        std::vector<CoreSample> dead{sample(1000, 0, 0)};
        CHECK_THROWS_AS(extract_features(dead, {0, 2000}), DomainError);
    }
}

TEST_CASE("zero scores use the population stddev") {
    const std::vector<FeatureVector> train{vec1(1.0), vec1(3.0)};
    const auto params = fit_normalization(train);
    CHECK(params.mean[0] == doctest::Approx(2.0));
    CHECK(params.stddev[0] == doctest::Approx(1.0));
    CHECK(apply_normalization(params, train[0])[0] == doctest::Approx(-1.0));
    CHECK(apply_normalization(params, train[1])[0] == doctest::Approx(1.0));
}

TEST_CASE("constant features are flagged and map to zero") {
    std::vector<FeatureVector> train;
    for (int i = 0; i < 5; ++i) {
        FeatureVector f;
        f.raw[0] = i;
        f.raw[1] = 42.0;
        f.ipc_s = 1.0;
        train.push_back(f);
    }
    const auto params = fit_normalization(train);
    CHECK_FALSE(params.constant[0]);
    CHECK(params.constant[1]);
    CHECK(apply_normalization(params, train[3])[1] == 0.0);
}

TEST_CASE("normalization needs two vectors and recenters a random set") {
    CHECK_THROWS_AS(fit_normalization({vec1(1.0)}), InsufficientDataError);

    Rng rng(77);
    std::vector<FeatureVector> train;
    for (int i = 0; i < 100; ++i) train.push_back(vec1(rng.uniform() * 50 + 3));
    const auto params = fit_normalization(train);
    double mean = 0, var = 0;
    for (const auto& f : train) mean += apply_normalization(params, f)[0];
    mean /= 100.0;
    for (const auto& f : train) {
        const double z = apply_normalization(params, f)[0];
        var += (z - mean) * (z - mean);
    }
    var /= 100.0;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
}

TEST_CASE("ols recovers an exact line") {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 5; ++i) {
        rows.push_back({static_cast<double>(i)});
        y.push_back(2.0 * i + 3.0);
    }
    const auto fit = ols_fit(rows, y);
    CHECK(fit.beta[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(fit.intercept == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
    for (double r : fit.residuals) CHECK(std::abs(r) < 1e-9);
}

TEST_CASE("noisy ols matches the extended-precision normal-equation oracle") {
    Rng rng(2024);
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 200; ++i) {
        const double x1 = rng.uniform();
        const double x2 = rng.uniform();
        rows.push_back({x1, x2});
        y.push_back(4.0 * x1 - 1.0 * x2 + 0.5 + 0.01 * rng.gauss());
    }
    const auto fit = ols_fit(rows, y);
    CHECK(std::abs(fit.beta[0] - 4.0) < 0.05);
    CHECK(std::abs(fit.beta[1] + 1.0) < 0.05);
    CHECK(std::abs(fit.intercept - 0.5) < 0.05);

    const auto oracle = normal_equation_oracle(rows, y);
    CHECK(std::abs(fit.beta[0] - static_cast<double>(oracle[0])) < 1e-8);
    CHECK(std::abs(fit.beta[1] - static_cast<double>(oracle[1])) < 1e-8);
    CHECK(std::abs(fit.intercept - static_cast<double>(oracle[2])) < 1e-8);

    SUBCASE("residuals are orthogonal to the regressors and the constant") {
        double dot1 = 0, dot2 = 0, dotc = 0, norm = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            dot1 += fit.residuals[i] * rows[i][0];
            dot2 += fit.residuals[i] * rows[i][1];
            dotc += fit.residuals[i];
            norm += std::abs(fit.residuals[i]);
        }
        CHECK(std::abs(dot1) / norm < 1e-8);
        CHECK(std::abs(dot2) / norm < 1e-8);
        CHECK(std::abs(dotc) / norm < 1e-8);
    }
}

TEST_CASE("adding a regressor never increases the residual sum of squares") {
    Rng rng(5150);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> one, two;
        std::vector<double> y;
        for (int i = 0; i < 40; ++i) {
            const double x1 = rng.uniform(), x2 = rng.uniform();
            one.push_back({x1});
            two.push_back({x1, x2});
            y.push_back(rng.uniform() * 3 + x1);
        }
        auto rss = [](const OlsResult& f) {
            double s = 0;
            for (double r : f.residuals) s += r * r;
            return s;
        };
        CHECK(rss(ols_fit(two, y)) <= rss(ols_fit(one, y)) + 1e-9);
    }
}

TEST_CASE("student t tail probabilities match the frozen oracle") {
    // reference values computed with an independent statistics library
    struct Case {
        double t;
        int dof;
        double want;
    };
    const Case cases[] = {
        {0.0, 5, 1.0},
        {1.0, 1, 0.5},
        {2.228138851986273, 10, 0.05},
        {2.5, 3, 0.0877066470080655},
        {5.0, 30, 2.32966854670078e-05},
        {0.5, 100, 0.618173565830887},
        {12.0, 6, 2.03074061953732e-05},
    };
    for (const auto& c : cases)
        CHECK(std::abs(student_t_p_value(c.t, c.dof) - c.want) < 1e-10);

    SUBCASE("symmetry, p(0)=1, and monotone decay in |t|") {
        for (int dof : {1, 4, 17, 120}) {
            CHECK(student_t_p_value(0.0, dof) == doctest::Approx(1.0));
            double prev = 1.0;
            for (double t = 0.25; t < 8.0; t += 0.25) {
                const double p = student_t_p_value(t, dof);
                CHECK(p < prev);
                CHECK(student_t_p_value(-t, dof) == doctest::Approx(p).epsilon(1e-12));
                prev = p;
            }
        }
    }
    SUBCASE("dof below one is rejected") {
        CHECK_THROWS_AS(student_t_p_value(1.0, 0), DomainError);
    }
}

TEST_CASE("rank-deficient designs fall back to minimum norm without p-values") {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    Rng rng(31337);
    for (int i = 0; i < 30; ++i) {
        const double x = rng.uniform();
        rows.push_back({x, x}); // perfectly collinear pair
        y.push_back(2 * x + 1);
    }
    const auto fit = ols_fit(rows, y);
    CHECK_FALSE(fit.p_values_valid);
    // minimum-norm solution still predicts correctly
    for (int i = 0; i < 30; ++i) {
        const double pred = fit.beta[0] * rows[i][0] + fit.beta[1] * rows[i][1] +
                            fit.intercept;
        CHECK(pred == doctest::Approx(y[i]).epsilon(1e-6));
    }
}

TEST_CASE("ols requires more rows than regressors plus one") {
    std::vector<std::vector<double>> rows{{1.0}, {2.0}};
    std::vector<double> y{1.0, 2.0};
    CHECK_THROWS_AS(ols_fit(rows, y), InsufficientDataError);
}

namespace {

// Training set where events p0 and p1 carry the signal, p2 is pure noise
// and p3..p5 are constant.
void make_training_set(Rng& rng, int n, std::vector<FeatureVector>& feats,
                       std::vector<double>& y) {
    feats.clear();
    y.clear();
    for (int i = 0; i < n; ++i) {
        FeatureVector f;
        f.raw[0] = rng.uniform() * 10;
        f.raw[1] = rng.uniform() * 5;
        f.raw[2] = rng.uniform() * 8;
        f.raw[3] = 13;
        f.raw[4] = 13;
        f.raw[5] = 13;
        f.ipc_s = 1.0;
        feats.push_back(f);
        y.push_back(3.0 * f.raw[0] - 2.0 * f.raw[1] + 1.0 + 0.01 * rng.gauss());
    }
}

} // namespace

TEST_CASE("backward elimination keeps significant features untouched") {
    Rng rng(404);
    std::vector<FeatureVector> feats;
    std::vector<double> y;
    make_training_set(rng, 80, feats, y);
    // strip the noise feature so every remaining one is significant
    for (auto& f : feats) f.raw[2] = 99.0;
    const auto model = train_model(feats, y, 0.05);
    REQUIRE(model.included == std::vector<int>{0, 1});
    CHECK(model.removal_order.empty());
    CHECK(model.r_squared > 0.999);
}

TEST_CASE("a pure-noise feature is pruned in at least 90 of 100 seeded trials") {
    int pruned = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed * 7919 + 11);
        std::vector<FeatureVector> feats;
        std::vector<double> y;
        make_training_set(rng, 60, feats, y);
        const auto model = train_model(feats, y, 0.05);
        const bool kept2 = std::find(model.included.begin(), model.included.end(), 2) !=
                           model.included.end();
        if (!kept2) ++pruned;
        // the informative features must always survive
        CHECK(std::find(model.included.begin(), model.included.end(), 0) !=
              model.included.end());
        CHECK(std::find(model.included.begin(), model.included.end(), 1) !=
              model.included.end());
    }
    CHECK(pruned >= 90);
}

TEST_CASE("duplicated collinear features exercise the rank repair path") {
    Rng rng(99);
    std::vector<FeatureVector> feats;
    std::vector<double> y;
    for (int i = 0; i < 50; ++i) {
        FeatureVector f;
        f.raw[0] = rng.uniform() * 10;
        f.raw[1] = f.raw[0]; // exact duplicate
        f.raw[2] = rng.uniform() * 3;
        f.raw[3] = 5;
        f.raw[4] = 5;
        f.raw[5] = 5;
        f.ipc_s = 1.0;
        feats.push_back(f);
        y.push_back(2.0 * f.raw[0] + 0.5 * f.raw[2] + 0.02 * rng.gauss());
    }
    const auto model = train_model(feats, y, 0.05);
    CHECK(model.p_values_valid);
    const bool kept0 = std::find(model.included.begin(), model.included.end(), 0) !=
                       model.included.end();
    const bool kept1 = std::find(model.included.begin(), model.included.end(), 1) !=
                       model.included.end();
    CHECK(kept0);
    CHECK_FALSE(kept1); // the higher-indexed twin is dropped
}

TEST_CASE("prediction basics") {
    Rng rng(2717);
    std::vector<FeatureVector> feats;
    std::vector<double> y;
    make_training_set(rng, 100, feats, y);
    const auto model = train_model(feats, y, 0.05);

    SUBCASE("the mean feature vector predicts the mean target") {
        FeatureVector mean;
        mean.ipc_s = 1.0;
        for (std::size_t i = 0; i < kNumCoreEvents; ++i) mean.raw[i] = model.norm.mean[i];
        double ybar = 0;
        for (double v : y) ybar += v;
        ybar /= static_cast<double>(y.size());
        CHECK(predict_ipc(model, mean) == doctest::Approx(ybar).epsilon(1e-9));
    }
    SUBCASE("all-zero normalized features predict the intercept") {
        FeatureVector mean;
        mean.ipc_s = 1.0;
        for (std::size_t i = 0; i < kNumCoreEvents; ++i) mean.raw[i] = model.norm.mean[i];
        CHECK(predict_ipc(model, mean) == doctest::Approx(model.sigma).epsilon(1e-9));
    }
    SUBCASE("fits on raw and zero-scored features predict identically") {
        std::vector<std::vector<double>> raw_rows;
        for (const auto& f : feats) {
            const auto s = f.scaled();
            raw_rows.push_back({s[0], s[1], s[2]});
        }
        const auto raw_fit = ols_fit(raw_rows, y);
        for (int i = 0; i < 25; ++i) {
            FeatureVector probe;
            probe.ipc_s = 1.0;
            probe.raw[0] = rng.uniform() * 10;
            probe.raw[1] = rng.uniform() * 5;
            probe.raw[2] = rng.uniform() * 8;
            probe.raw[3] = 13;
            probe.raw[4] = 13;
            probe.raw[5] = 13;
            const auto s = probe.scaled();
            const double from_raw = raw_fit.beta[0] * s[0] + raw_fit.beta[1] * s[1] +
                                    raw_fit.beta[2] * s[2] + raw_fit.intercept;
            // the trained model may have pruned the noise feature; compare
            // against a train_model run that keeps everything
            const auto full = train_model(feats, y, 1.1);
            const double from_norm = predict_ipc(full, probe);
            CHECK(from_norm == doctest::Approx(from_raw).epsilon(1e-6));
        }
    }
}

TEST_CASE("accuracy definition") {
    CHECK(accuracy(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(accuracy(0.95, 1.0) == doctest::Approx(0.95));
    CHECK(accuracy(3.0, 1.0) == doctest::Approx(-1.0)); // wild misprediction, unclamped
    CHECK_THROWS_AS(accuracy(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(accuracy(1.0, -2.0), DomainError);
}

TEST_CASE("training plans") {
    CHECK(make_concurrency_plan(48).anchor_concurrency == 36);
    CHECK(make_concurrency_plan(2).anchor_concurrency == 2);
    CHECK_THROWS_AS(make_concurrency_plan(1), DomainError);

    const auto plan = make_size_plan(36, {900, 100, 500});
    CHECK(plan.anchor_size_bytes == 100);
    CHECK(plan.anchor_concurrency == 36);
    CHECK_THROWS_AS(make_size_plan(36, {}), InsufficientDataError);
}

TEST_CASE("model files round-trip exactly") {
    Rng rng(616);
    std::vector<FeatureVector> feats;
    std::vector<double> y;
    make_training_set(rng, 70, feats, y);
    const auto model = train_model(feats, y, 0.05);

    testutil::TempDir dir("model_rt");
    save_model(dir.file("m.model"), model);
    const auto back = load_model(dir.file("m.model"));
    CHECK(back.included == model.included);
    REQUIRE(back.beta.size() == model.beta.size());
    for (std::size_t i = 0; i < model.beta.size(); ++i)
        CHECK(back.beta[i] == model.beta[i]); // bit-exact via %.17g
    CHECK(back.sigma == model.sigma);
    for (std::size_t i = 0; i < kNumCoreEvents; ++i) {
        CHECK(back.norm.mean[i] == model.norm.mean[i]);
        CHECK(back.norm.stddev[i] == model.norm.stddev[i]);
        CHECK(back.norm.constant[i] == model.norm.constant[i]);
    }
    CHECK(back.r_squared == model.r_squared);
    CHECK(back.dof == model.dof);
    CHECK(back.removal_order == model.removal_order);

    // predictions agree exactly
    for (int i = 0; i < 10; ++i)
        CHECK(predict_ipc(back, feats[i]) == predict_ipc(model, feats[i]));
}

TEST_CASE("a model trained at the smallest data size transfers to larger ones") {
    WorkloadSpec base;
    base.phases = {
        {30, 4000, 500},   {30, 20000, 3000}, {30, 35000, 8000}, {30, 8000, 15000},
        {30, 50000, 1000}, {30, 15000, 25000}, {30, 28000, 5000}, {30, 2000, 2200},
    };
    base.concurrency = 36;
    base.rng_seed = 900;
    MemoryConfig cfg;
    cfg.mode = MemMode::CachedNvm;
    const double cap = static_cast<double>(cfg.dram_capacity_bytes);
    auto cores_at = [&](double footprint_factor) {
        WorkloadSpec w = base;
        w.footprint_bytes = static_cast<std::uint64_t>(footprint_factor * cap);
        w.rng_seed = base.rng_seed + static_cast<std::uint64_t>(footprint_factor * 10);
        return simulate(w, cfg).trace.core;
    };

    const std::vector<std::uint64_t> ladder{
        static_cast<std::uint64_t>(4 * cap), static_cast<std::uint64_t>(2 * cap),
        static_cast<std::uint64_t>(3 * cap), static_cast<std::uint64_t>(5 * cap)};
    const auto plan = make_size_plan(36, ladder);
    CHECK(plan.anchor_size_bytes == ladder[1]); // smallest rung

    const auto train = cores_at(2.0);
    const auto model =
        train_model(features_per_sample(train), ipc_per_sample(train), 0.05);
    CHECK(model.r_squared > 0.9);
    for (double f : {3.0, 4.0, 5.0}) {
        const auto core = cores_at(f);
        const auto feats = features_per_sample(core);
        const auto y = ipc_per_sample(core);
        double sum = 0;
        for (std::size_t i = 0; i < feats.size(); ++i)
            sum += accuracy(predict_ipc(model, feats[i]), y[i]);
        CHECK(sum / static_cast<double>(feats.size()) >= 0.90);
    }
}

TEST_CASE("backward elimination terminates within the feature budget") {
    Rng rng(8888);
    std::vector<FeatureVector> feats;
    std::vector<double> y;
    for (int i = 0; i < 50; ++i) {
        FeatureVector f;
        for (std::size_t j = 0; j < kNumCoreEvents; ++j) f.raw[j] = rng.uniform();
        f.ipc_s = 1.0;
        feats.push_back(f);
        y.push_back(rng.uniform()); // no real signal anywhere
    }
    const auto model = train_model(feats, y, 0.05);
    CHECK(model.removal_order.size() <= kNumCoreEvents);
    CHECK(!model.included.empty()); // at least one feature always retained
    CHECK(model.included.size() + model.removal_order.size() <= kNumCoreEvents);
}
