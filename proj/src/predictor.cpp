#include "nvmlens/predictor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nvmlens/detail/text.hpp"
#include "nvmlens/error.hpp"

namespace nvmlens {

const char* to_string(TrainingStrategy s) {
    return s == TrainingStrategy::MidConcurrency ? "mid_concurrency" : "small_size";
}

FeatureVector extract_features(const std::vector<CoreSample>& core_samples,
                               const TimeWindow& window) {
    FeatureVector f;
    std::size_t used = 0;
    for (const auto& s : core_samples) {
        if (!window.contains(s.timestamp_ms)) continue;
        for (std::size_t i = 0; i < kNumCoreEvents; ++i)
            f.raw[i] += static_cast<double>(s.events[i]);
        ++used;
    }
    if (used == 0) throw InsufficientDataError("no core samples inside the window");
    if (f.raw[1] <= 0.0)
        throw DomainError("degenerate IPC: no active cycles in the window");
    f.ipc_s = f.raw[0] / f.raw[1];
    return f;
}

std::vector<FeatureVector> features_per_sample(const std::vector<CoreSample>& core) {
    std::vector<FeatureVector> out;
    out.reserve(core.size());
    for (const auto& s : core) {
        FeatureVector f;
        for (std::size_t i = 0; i < kNumCoreEvents; ++i)
            f.raw[i] = static_cast<double>(s.events[i]);
        if (s.events[1] == 0)
            throw DomainError("degenerate IPC: core sample with no active cycles");
        f.ipc_s = f.raw[0] / f.raw[1];
        out.push_back(f);
    }
    return out;
}

std::vector<double> ipc_per_sample(const std::vector<CoreSample>& core) {
    std::vector<double> y;
    y.reserve(core.size());
    for (const auto& s : core) y.push_back(s.ipc);
    return y;
}

NormalizationParams fit_normalization(const std::vector<FeatureVector>& features) {
    if (features.size() < 2)
        throw InsufficientDataError("normalization needs at least 2 training vectors");
    NormalizationParams p;
    const double n = static_cast<double>(features.size());
    for (const auto& f : features) {
        const auto s = f.scaled();
        for (std::size_t i = 0; i < kNumCoreEvents; ++i) p.mean[i] += s[i];
    }
    for (std::size_t i = 0; i < kNumCoreEvents; ++i) p.mean[i] /= n;
    for (const auto& f : features) {
        const auto s = f.scaled();
        for (std::size_t i = 0; i < kNumCoreEvents; ++i) {
            const double d = s[i] - p.mean[i];
            p.stddev[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < kNumCoreEvents; ++i) {
        p.stddev[i] = std::sqrt(p.stddev[i] / n); // population stddev
        p.constant[i] = p.stddev[i] == 0.0;
    }
    return p;
}

std::array<double, kNumCoreEvents> apply_normalization(const NormalizationParams& params,
                                                       const FeatureVector& feature) {
    std::array<double, kNumCoreEvents> out{};
    const auto s = feature.scaled();
    for (std::size_t i = 0; i < kNumCoreEvents; ++i)
        out[i] = params.constant[i] ? 0.0 : (s[i] - params.mean[i]) / params.stddev[i];
    return out;
}

namespace {

// Continued-fraction evaluation of the regularized incomplete beta
// function, modified Lentz scheme.
double incomplete_beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * incomplete_beta_cf(a, b, x) / a;
    return 1.0 - front * incomplete_beta_cf(b, a, 1.0 - x) / b;
}

} // namespace

double student_t_p_value(double t, int dof) {
    if (dof < 1) throw DomainError("Student-t needs dof >= 1");
    if (!std::isfinite(t)) return 0.0;
    const double v = static_cast<double>(dof);
    const double x = v / (v + t * t);
    return regularized_incomplete_beta(v / 2.0, 0.5, x);
}

OlsResult ols_fit(const std::vector<std::vector<double>>& rows,
                  const std::vector<double>& y) {
    const std::size_t n = rows.size();
    if (n == 0 || n != y.size()) throw DomainError("ols_fit: shape mismatch");
    const std::size_t p = rows[0].size();
    if (n <= p + 1)
        throw InsufficientDataError("ols_fit needs more rows than regressors plus one");

    Eigen::MatrixXd A(n, p + 1);
    Eigen::VectorXd yv(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != p) throw DomainError("ols_fit: ragged rows");
        for (std::size_t j = 0; j < p; ++j) A(i, j) = rows[i][j];
        A(i, p) = 1.0;
        yv(i) = y[i];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    const bool full_rank = qr.rank() == static_cast<Eigen::Index>(p + 1);

    Eigen::VectorXd coef;
    if (full_rank) {
        coef = qr.solve(yv);
    } else {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
        coef = cod.solve(yv); // minimum-norm solution
    }

    OlsResult r;
    r.beta.assign(coef.data(), coef.data() + p);
    r.intercept = coef(p);

    const Eigen::VectorXd resid = yv - A * coef;
    r.residuals.assign(resid.data(), resid.data() + n);
    const double rss = resid.squaredNorm();
    const double mean_y = yv.mean();
    const double tss = (yv.array() - mean_y).square().sum();
    r.r_squared = tss == 0.0 ? 1.0 : std::clamp(1.0 - rss / tss, 0.0, 1.0);
    r.dof = static_cast<int>(n - p - 1);

    if (full_rank && r.dof >= 1) {
        const double s2 = rss / static_cast<double>(r.dof);
        const Eigen::MatrixXd cov = (A.transpose() * A).inverse() * s2;
        r.std_err.resize(p);
        r.t_stat.resize(p);
        r.p_value.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            r.std_err[j] = std::sqrt(std::max(0.0, cov(j, j)));
            r.t_stat[j] = r.std_err[j] > 0.0 ? r.beta[j] / r.std_err[j]
                                             : std::numeric_limits<double>::infinity();
            r.p_value[j] = student_t_p_value(r.t_stat[j], r.dof);
        }
        r.p_values_valid = true;
    } else {
        r.std_err.assign(p, std::numeric_limits<double>::quiet_NaN());
        r.t_stat.assign(p, std::numeric_limits<double>::quiet_NaN());
        r.p_value.assign(p, std::numeric_limits<double>::quiet_NaN());
        r.p_values_valid = false;
    }
    return r;
}

namespace {

struct FitState {
    std::vector<std::array<double, kNumCoreEvents>> normalized; // per observation
    std::vector<double> y;

    std::vector<std::vector<double>> design(const std::vector<int>& active) const {
        std::vector<std::vector<double>> rows(normalized.size());
        for (std::size_t i = 0; i < normalized.size(); ++i) {
            rows[i].reserve(active.size());
            for (int j : active) rows[i].push_back(normalized[i][j]);
        }
        return rows;
    }
};

// Drops the highest-indexed events whose removal restores full column rank.
// Handles perfectly collinear inputs so p-values become available.
bool repair_rank(const FitState& state, std::vector<int>& active,
                 std::vector<int>& removed) {
    auto is_full_rank = [&](const std::vector<int>& cols) {
        auto rows = state.design(cols);
        const std::size_t n = rows.size(), p = cols.size();
        if (n <= p + 1) return false;
        Eigen::MatrixXd A(n, p + 1);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) A(i, j) = rows[i][j];
            A(i, p) = 1.0;
        }
        return Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(A).rank() ==
               static_cast<Eigen::Index>(p + 1);
    };
    while (active.size() > 1 && !is_full_rank(active)) {
        bool dropped = false;
        for (auto it = active.rbegin(); it != active.rend(); ++it) {
            std::vector<int> trial;
            for (int j : active)
                if (j != *it) trial.push_back(j);
            if (is_full_rank(trial)) {
                removed.push_back(*it);
                active = trial;
                dropped = true;
                break;
            }
        }
        if (!dropped) return false;
    }
    return is_full_rank(active);
}

} // namespace

RegressionModel train_model(const std::vector<FeatureVector>& features,
                            const std::vector<double>& observed_ipc, double alpha) {
    if (features.size() != observed_ipc.size())
        throw DomainError("train_model: feature/target count mismatch");
    RegressionModel model;
    model.alpha = alpha;
    model.norm = fit_normalization(features);

    FitState state;
    state.normalized.reserve(features.size());
    for (const auto& f : features)
        state.normalized.push_back(apply_normalization(model.norm, f));
    state.y = observed_ipc;

    std::vector<int> active;
    for (std::size_t i = 0; i < kNumCoreEvents; ++i)
        if (!model.norm.constant[i]) active.push_back(static_cast<int>(i));
    if (active.empty())
        throw InsufficientDataError("all features are constant over the training set");

    OlsResult fit = ols_fit(state.design(active), state.y);
    if (!fit.p_values_valid) {
        if (repair_rank(state, active, model.removal_order)) {
            fit = ols_fit(state.design(active), state.y);
        }
    }

    if (!fit.p_values_valid) {
        model.pruning_skipped = true;
    } else {
        // Backward elimination: one feature per iteration, worst p-value
        // first, lowest event index on ties.
        while (active.size() > 1) {
            std::size_t worst = 0;
            for (std::size_t j = 1; j < active.size(); ++j)
                if (fit.p_value[j] > fit.p_value[worst]) worst = j;
            if (fit.p_value[worst] <= alpha) break;
            model.removal_order.push_back(active[worst]);
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
            fit = ols_fit(state.design(active), state.y);
            if (!fit.p_values_valid) break;
        }
    }

    model.included = active;
    model.beta = fit.beta;
    model.sigma = fit.intercept;
    model.std_err = fit.std_err;
    model.t_stat = fit.t_stat;
    model.p_value = fit.p_value;
    model.p_values_valid = fit.p_values_valid;
    model.r_squared = fit.r_squared;
    model.dof = fit.dof;
    return model;
}

double predict_ipc(const RegressionModel& model, const FeatureVector& feature) {
    if (model.included.size() != model.beta.size())
        throw DomainError("model has inconsistent coefficient count");
    const auto z = apply_normalization(model.norm, feature);
    double pred = model.sigma;
    for (std::size_t j = 0; j < model.included.size(); ++j) {
        const int idx = model.included[j];
        if (idx < 0 || idx >= static_cast<int>(kNumCoreEvents))
            throw DomainError("model references event index " + std::to_string(idx) +
                              " not present in the feature vector");
        pred += model.beta[j] * z[idx];
    }
    if (!std::isfinite(pred)) throw DomainError("non-finite prediction");
    return pred;
}

double accuracy(double predicted, double observed) {
    if (observed <= 0.0) throw DomainError("observed value must be positive");
    return 1.0 - std::abs(predicted - observed) / observed;
}

TrainingPlan make_concurrency_plan(int hardware_threads) {
    if (hardware_threads < 2)
        throw DomainError("concurrency plan needs at least 2 hardware threads");
    TrainingPlan plan;
    plan.strategy = TrainingStrategy::MidConcurrency;
    const int anchor = static_cast<int>(std::llround(0.75 * hardware_threads));
    plan.anchor_concurrency = std::clamp(anchor, 1, hardware_threads);
    return plan;
}

TrainingPlan make_size_plan(int fixed_concurrency,
                            const std::vector<std::uint64_t>& size_ladder_bytes) {
    if (size_ladder_bytes.empty())
        throw InsufficientDataError("size plan needs a non-empty size ladder");
    if (fixed_concurrency < 1) throw DomainError("concurrency must be >= 1");
    TrainingPlan plan;
    plan.strategy = TrainingStrategy::SmallSize;
    plan.anchor_concurrency = fixed_concurrency;
    plan.anchor_size_bytes =
        *std::min_element(size_ladder_bytes.begin(), size_ladder_bytes.end());
    return plan;
}

namespace {

std::string fmt_full(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <typename It>
std::string join(It first, It last) {
    std::ostringstream os;
    for (It it = first; it != last; ++it) {
        if (it != first) os << ' ';
        os << *it;
    }
    return os.str();
}

std::vector<std::string> tokens(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

} // namespace

void save_model(const std::filesystem::path& path, const RegressionModel& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "nvmlens model v1\n";
    out << "included =";
    for (int i : m.included) out << " p" << i;
    out << '\n';
    out << "beta =";
    for (double b : m.beta) out << ' ' << fmt_full(b);
    out << '\n';
    out << "sigma = " << fmt_full(m.sigma) << '\n';
    out << "norm_mean =";
    for (double v : m.norm.mean) out << ' ' << fmt_full(v);
    out << '\n';
    out << "norm_stddev =";
    for (double v : m.norm.stddev) out << ' ' << fmt_full(v);
    out << '\n';
    out << "norm_constant =";
    for (bool b : m.norm.constant) out << ' ' << (b ? 1 : 0);
    out << '\n';
    out << "p_values_valid = " << (m.p_values_valid ? 1 : 0) << '\n';
    if (m.p_values_valid) {
        out << "std_err =";
        for (double v : m.std_err) out << ' ' << fmt_full(v);
        out << '\n';
        out << "t_stat =";
        for (double v : m.t_stat) out << ' ' << fmt_full(v);
        out << '\n';
        out << "p_value =";
        for (double v : m.p_value) out << ' ' << fmt_full(v);
        out << '\n';
    }
    out << "r_squared = " << fmt_full(m.r_squared) << '\n';
    out << "dof = " << m.dof << '\n';
    out << "removed =";
    for (int i : m.removal_order) out << " p" << i;
    out << '\n';
    out << "pruning_skipped = " << (m.pruning_skipped ? 1 : 0) << '\n';
    out << "alpha = " << fmt_full(m.alpha) << '\n';
}

RegressionModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "nvmlens model v1")
        throw FormatError(path.string() + ": not a nvmlens model file");
    RegressionModel m;
    auto parse_event_list = [&](const std::string& v) {
        std::vector<int> out;
        for (const auto& t : tokens(v)) {
            if (t.size() < 2 || t[0] != 'p')
                throw FormatError("bad event name '" + t + "'");
            const int idx = std::stoi(t.substr(1));
            if (idx < 0 || idx >= static_cast<int>(kNumCoreEvents))
                throw FormatError("event index out of range: " + t);
            out.push_back(idx);
        }
        return out;
    };
    auto parse_doubles = [&](const std::string& v) {
        std::vector<double> out;
        for (const auto& t : tokens(v)) out.push_back(std::stod(t));
        return out;
    };
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = detail::strip(line.substr(0, eq));
        const std::string v = line.substr(eq + 1);
        if (k == "included") m.included = parse_event_list(v);
        else if (k == "beta") m.beta = parse_doubles(v);
        else if (k == "sigma") m.sigma = std::stod(v);
        else if (k == "norm_mean") {
            auto vals = parse_doubles(v);
            std::copy_n(vals.begin(), std::min(vals.size(), kNumCoreEvents),
                        m.norm.mean.begin());
        } else if (k == "norm_stddev") {
            auto vals = parse_doubles(v);
            std::copy_n(vals.begin(), std::min(vals.size(), kNumCoreEvents),
                        m.norm.stddev.begin());
        } else if (k == "norm_constant") {
            auto vals = parse_doubles(v);
            for (std::size_t i = 0; i < std::min(vals.size(), kNumCoreEvents); ++i)
                m.norm.constant[i] = vals[i] != 0.0;
        } else if (k == "p_values_valid") m.p_values_valid = std::stoi(v) != 0;
        else if (k == "std_err") m.std_err = parse_doubles(v);
        else if (k == "t_stat") m.t_stat = parse_doubles(v);
        else if (k == "p_value") m.p_value = parse_doubles(v);
        else if (k == "r_squared") m.r_squared = std::stod(v);
        else if (k == "dof") m.dof = std::stoi(v);
        else if (k == "removed") m.removal_order = parse_event_list(v);
        else if (k == "pruning_skipped") m.pruning_skipped = std::stoi(v) != 0;
        else if (k == "alpha") m.alpha = std::stod(v);
        else throw FormatError(path.string() + ": unknown model key '" + k + "'");
    }
    if (m.included.size() != m.beta.size())
        throw FormatError(path.string() + ": included/beta length mismatch");
    return m;
}

} // namespace nvmlens
