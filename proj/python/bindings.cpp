#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nvmlens/bandwidth.hpp"
#include "nvmlens/characterize.hpp"
#include "nvmlens/error.hpp"
#include "nvmlens/memsim.hpp"
#include "nvmlens/placement.hpp"
#include "nvmlens/predictor.hpp"
#include "nvmlens/trace.hpp"
#include "nvmlens/version.hpp"

namespace py = pybind11;
using namespace nvmlens;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Performance analysis toolkit for heterogeneous DRAM/NVM main memory";
    m.attr("__version__") = kVersion;

    const auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<FormatError>(m, "FormatError", base);
    py::register_exception<IntegrityError>(m, "IntegrityError", base);
    py::register_exception<DomainError>(m, "DomainError", base);
    py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base);

    py::enum_<DeviceKind>(m, "DeviceKind")
        .value("DRAM_DIMM", DeviceKind::DramDimm)
        .value("NVDIMM", DeviceKind::Nvdimm);
    py::enum_<MemMode>(m, "MemMode")
        .value("DRAM_ONLY", MemMode::DramOnly)
        .value("CACHED_NVM", MemMode::CachedNvm)
        .value("UNCACHED_NVM", MemMode::UncachedNvm);
    py::enum_<MetricKind>(m, "MetricKind")
        .value("TIME_LOWER_BETTER", MetricKind::TimeLowerBetter)
        .value("RATE_HIGHER_BETTER", MetricKind::RateHigherBetter);
    py::enum_<TierLabel>(m, "TierLabel")
        .value("INSENSITIVE", TierLabel::Insensitive)
        .value("SCALED", TierLabel::Scaled)
        .value("BOTTLENECKED", TierLabel::Bottlenecked);
    py::enum_<ThrottleRisk>(m, "ThrottleRisk")
        .value("LOW", ThrottleRisk::Low)
        .value("HIGH", ThrottleRisk::High);
    py::enum_<PlacementStrategy>(m, "PlacementStrategy")
        .value("GREEDY_DENSITY", PlacementStrategy::GreedyDensity)
        .value("EXACT_DP", PlacementStrategy::ExactDP);
    py::enum_<TrainingStrategy>(m, "TrainingStrategy")
        .value("MID_CONCURRENCY", TrainingStrategy::MidConcurrency)
        .value("SMALL_SIZE", TrainingStrategy::SmallSize);

    py::class_<TimeWindow>(m, "TimeWindow")
        .def(py::init<>())
        .def(py::init<std::int64_t, std::int64_t>())
        .def_readwrite("start_ms", &TimeWindow::start_ms)
        .def_readwrite("end_ms", &TimeWindow::end_ms);

    py::class_<CounterSample>(m, "CounterSample")
        .def(py::init<>())
        .def_readwrite("timestamp_ms", &CounterSample::timestamp_ms)
        .def_readwrite("socket", &CounterSample::socket)
        .def_readwrite("device_kind", &CounterSample::device_kind)
        .def_readwrite("device_id", &CounterSample::device_id)
        .def_readwrite("read_bytes", &CounterSample::read_bytes)
        .def_readwrite("write_bytes", &CounterSample::write_bytes);

    py::class_<CoreSample>(m, "CoreSample")
        .def(py::init<>())
        .def_readwrite("timestamp_ms", &CoreSample::timestamp_ms)
        .def_readwrite("events", &CoreSample::events)
        .def_readwrite("ipc", &CoreSample::ipc);

    py::class_<CounterTrace>(m, "CounterTrace")
        .def(py::init<>())
        .def_readwrite("samples", &CounterTrace::samples)
        .def_readwrite("core", &CounterTrace::core)
        .def_readwrite("mode", &CounterTrace::mode)
        .def_readwrite("concurrency", &CounterTrace::concurrency)
        .def_readwrite("footprint_bytes", &CounterTrace::footprint_bytes)
        .def_readwrite("window", &CounterTrace::window)
        .def("validate", &CounterTrace::validate);

    py::class_<TrafficSeries>(m, "TrafficSeries")
        .def(py::init<>())
        .def_readwrite("start_ms", &TrafficSeries::start_ms)
        .def_readwrite("end_ms", &TrafficSeries::end_ms)
        .def_readwrite("read_bytes", &TrafficSeries::read_bytes)
        .def_readwrite("write_bytes", &TrafficSeries::write_bytes)
        .def("total_read", &TrafficSeries::total_read)
        .def("total_write", &TrafficSeries::total_write);

    py::class_<BandwidthTrace>(m, "BandwidthTrace")
        .def(py::init<>())
        .def_readwrite("time_s", &BandwidthTrace::time_s)
        .def_readwrite("interval_s", &BandwidthTrace::interval_s)
        .def_readwrite("read_mbps", &BandwidthTrace::read_mbps)
        .def_readwrite("write_mbps", &BandwidthTrace::write_mbps)
        .def("duration_s", &BandwidthTrace::duration_s)
        .def("__len__", &BandwidthTrace::size);

    py::class_<Phase>(m, "Phase")
        .def(py::init<>())
        .def_readwrite("start_index", &Phase::start_index)
        .def_readwrite("end_index", &Phase::end_index)
        .def_readwrite("start_s", &Phase::start_s)
        .def_readwrite("end_s", &Phase::end_s)
        .def_readwrite("avg_read_mbps", &Phase::avg_read_mbps)
        .def_readwrite("avg_write_mbps", &Phase::avg_write_mbps)
        .def_readwrite("peak_write_mbps", &Phase::peak_write_mbps)
        .def_readwrite("rw_ratio", &Phase::rw_ratio)
        .def_readwrite("duration_share", &Phase::duration_share);

    py::class_<SegmentationOptions>(m, "SegmentationOptions")
        .def(py::init<>())
        .def_readwrite("max_phases", &SegmentationOptions::max_phases)
        .def_readwrite("min_phase_len", &SegmentationOptions::min_phase_len)
        .def_readwrite("lambda_", &SegmentationOptions::lambda);

    py::class_<AppMetrics>(m, "AppMetrics")
        .def(py::init<>())
        .def_readwrite("read_bw_mbps", &AppMetrics::read_bw_mbps)
        .def_readwrite("write_bw_mbps", &AppMetrics::write_bw_mbps)
        .def_readwrite("slowdown", &AppMetrics::slowdown);

    py::class_<TierThresholds>(m, "TierThresholds")
        .def(py::init<>())
        .def_readwrite("tier_low", &TierThresholds::tier_low)
        .def_readwrite("tier_high", &TierThresholds::tier_high)
        .def_readwrite("borderline_band", &TierThresholds::borderline_band)
        .def_readwrite("bw_floor_mbps", &TierThresholds::bw_floor_mbps)
        .def_readwrite("rw_thresh", &TierThresholds::rw_thresh)
        .def_readwrite("write_thresh_mbps", &TierThresholds::write_thresh_mbps);

    py::class_<Tier>(m, "Tier")
        .def(py::init<>())
        .def_readwrite("label", &Tier::label)
        .def_readwrite("borderline", &Tier::borderline)
        .def_readwrite("from_slowdown", &Tier::from_slowdown)
        .def_readwrite("advisory", &Tier::advisory);

    py::class_<ContentionVerdict>(m, "ContentionVerdict")
        .def(py::init<>())
        .def_readwrite("ratio_dram", &ContentionVerdict::ratio_dram)
        .def_readwrite("ratio_cached", &ContentionVerdict::ratio_cached)
        .def_readwrite("ratio_uncached", &ContentionVerdict::ratio_uncached)
        .def_readwrite("gap", &ContentionVerdict::gap)
        .def_readwrite("contended_on_nvm", &ContentionVerdict::contended_on_nvm);

    py::class_<MemoryConfig>(m, "MemoryConfig")
        .def(py::init<>())
        .def_readwrite("mode", &MemoryConfig::mode)
        .def_readwrite("dram_read_cap_mbps", &MemoryConfig::dram_read_cap_mbps)
        .def_readwrite("dram_write_cap_mbps", &MemoryConfig::dram_write_cap_mbps)
        .def_readwrite("nvm_read_cap_mbps", &MemoryConfig::nvm_read_cap_mbps)
        .def_readwrite("nvm_write_cap_mbps", &MemoryConfig::nvm_write_cap_mbps)
        .def_readwrite("throttle_knee_mbps", &MemoryConfig::throttle_knee_mbps)
        .def_readwrite("wpq_knee", &MemoryConfig::wpq_knee)
        .def_readwrite("wpq_decay", &MemoryConfig::wpq_decay)
        .def_readwrite("write_thrash", &MemoryConfig::write_thrash)
        .def_readwrite("read_throttle", &MemoryConfig::read_throttle)
        .def_readwrite("conflict_factor", &MemoryConfig::conflict_factor)
        .def_readwrite("dram_capacity_bytes", &MemoryConfig::dram_capacity_bytes)
        .def_readwrite("jitter_amplitude", &MemoryConfig::jitter_amplitude)
        .def_readwrite("sample_interval_ms", &MemoryConfig::sample_interval_ms)
        .def_readwrite("clock_ghz", &MemoryConfig::clock_ghz)
        .def_readwrite("peak_ipc", &MemoryConfig::peak_ipc);

    py::class_<WorkloadPhaseSpec>(m, "WorkloadPhaseSpec")
        .def(py::init<>())
        .def(py::init([](double d, double r, double w) {
                 return WorkloadPhaseSpec{d, r, w};
             }),
             py::arg("duration_s"), py::arg("read_mbps"), py::arg("write_mbps"))
        .def_readwrite("duration_s", &WorkloadPhaseSpec::duration_s)
        .def_readwrite("read_mbps", &WorkloadPhaseSpec::read_mbps)
        .def_readwrite("write_mbps", &WorkloadPhaseSpec::write_mbps);

    py::class_<DataObject>(m, "DataObject")
        .def(py::init<>())
        .def(py::init([](std::string name, std::uint64_t size, double rs, double ws) {
                 return DataObject{std::move(name), size, rs, ws};
             }),
             py::arg("name"), py::arg("size_bytes"), py::arg("read_share"),
             py::arg("write_share"))
        .def_readwrite("name", &DataObject::name)
        .def_readwrite("size_bytes", &DataObject::size_bytes)
        .def_readwrite("read_share", &DataObject::read_share)
        .def_readwrite("write_share", &DataObject::write_share);

    py::class_<WorkloadSpec>(m, "WorkloadSpec")
        .def(py::init<>())
        .def_readwrite("phases", &WorkloadSpec::phases)
        .def_readwrite("concurrency", &WorkloadSpec::concurrency)
        .def_readwrite("footprint_bytes", &WorkloadSpec::footprint_bytes)
        .def_readwrite("objects", &WorkloadSpec::objects)
        .def_readwrite("rng_seed", &WorkloadSpec::rng_seed)
        .def("validate", &WorkloadSpec::validate);

    py::class_<NvmService>(m, "NvmService")
        .def_readonly("read_mbps", &NvmService::read_mbps)
        .def_readonly("write_mbps", &NvmService::write_mbps);

    py::class_<CacheTraffic>(m, "CacheTraffic")
        .def_readonly("hit_ratio", &CacheTraffic::hit_ratio)
        .def_readonly("dram_read_mbps", &CacheTraffic::dram_read_mbps)
        .def_readonly("dram_write_mbps", &CacheTraffic::dram_write_mbps)
        .def_readonly("nvm_read_mbps", &CacheTraffic::nvm_read_mbps)
        .def_readonly("nvm_write_mbps", &CacheTraffic::nvm_write_mbps);

    py::class_<PhaseResult>(m, "PhaseResult")
        .def_readonly("nominal_s", &PhaseResult::nominal_s)
        .def_readonly("actual_s", &PhaseResult::actual_s)
        .def_readonly("stretch", &PhaseResult::stretch)
        .def_readonly("achieved_read_mbps", &PhaseResult::achieved_read_mbps)
        .def_readonly("achieved_write_mbps", &PhaseResult::achieved_write_mbps)
        .def_readonly("dram_read_mbps", &PhaseResult::dram_read_mbps)
        .def_readonly("dram_write_mbps", &PhaseResult::dram_write_mbps)
        .def_readonly("nvm_read_mbps", &PhaseResult::nvm_read_mbps)
        .def_readonly("nvm_write_mbps", &PhaseResult::nvm_write_mbps);

    py::class_<IntervalRecord>(m, "IntervalRecord")
        .def_readonly("end_ms", &IntervalRecord::end_ms)
        .def_readonly("dram_read_bytes", &IntervalRecord::dram_read_bytes)
        .def_readonly("dram_write_bytes", &IntervalRecord::dram_write_bytes)
        .def_readonly("nvm_read_bytes", &IntervalRecord::nvm_read_bytes)
        .def_readonly("nvm_write_bytes", &IntervalRecord::nvm_write_bytes);

    py::class_<SimResult>(m, "SimResult")
        .def_readonly("trace", &SimResult::trace)
        .def_readonly("phases", &SimResult::phases)
        .def_readonly("runtime_s", &SimResult::runtime_s)
        .def_readonly("intervals", &SimResult::intervals);

    py::class_<FeatureVector>(m, "FeatureVector")
        .def(py::init<>())
        .def_readwrite("raw", &FeatureVector::raw)
        .def_readwrite("ipc_s", &FeatureVector::ipc_s)
        .def("scaled", &FeatureVector::scaled);

    py::class_<NormalizationParams>(m, "NormalizationParams")
        .def(py::init<>())
        .def_readwrite("mean", &NormalizationParams::mean)
        .def_readwrite("stddev", &NormalizationParams::stddev)
        .def_readwrite("constant", &NormalizationParams::constant);

    py::class_<OlsResult>(m, "OlsResult")
        .def_readonly("beta", &OlsResult::beta)
        .def_readonly("intercept", &OlsResult::intercept)
        .def_readonly("std_err", &OlsResult::std_err)
        .def_readonly("t_stat", &OlsResult::t_stat)
        .def_readonly("p_value", &OlsResult::p_value)
        .def_readonly("p_values_valid", &OlsResult::p_values_valid)
        .def_readonly("r_squared", &OlsResult::r_squared)
        .def_readonly("dof", &OlsResult::dof)
        .def_readonly("residuals", &OlsResult::residuals);

    py::class_<RegressionModel>(m, "RegressionModel")
        .def(py::init<>())
        .def_readwrite("included", &RegressionModel::included)
        .def_readwrite("beta", &RegressionModel::beta)
        .def_readwrite("sigma", &RegressionModel::sigma)
        .def_readonly("std_err", &RegressionModel::std_err)
        .def_readonly("t_stat", &RegressionModel::t_stat)
        .def_readonly("p_value", &RegressionModel::p_value)
        .def_readonly("p_values_valid", &RegressionModel::p_values_valid)
        .def_readonly("r_squared", &RegressionModel::r_squared)
        .def_readonly("dof", &RegressionModel::dof)
        .def_readwrite("norm", &RegressionModel::norm)
        .def_readonly("removal_order", &RegressionModel::removal_order)
        .def_readonly("pruning_skipped", &RegressionModel::pruning_skipped)
        .def_readonly("alpha", &RegressionModel::alpha);

    py::class_<TrainingPlan>(m, "TrainingPlan")
        .def_readonly("strategy", &TrainingPlan::strategy)
        .def_readonly("anchor_concurrency", &TrainingPlan::anchor_concurrency)
        .def_readonly("anchor_size_bytes", &TrainingPlan::anchor_size_bytes);

    py::class_<PlacementPlan>(m, "PlacementPlan")
        .def(py::init<>())
        .def_readwrite("strategy", &PlacementPlan::strategy)
        .def_readwrite("in_dram", &PlacementPlan::in_dram)
        .def_readwrite("dram_used_bytes", &PlacementPlan::dram_used_bytes)
        .def_readwrite("captured_write_fraction", &PlacementPlan::captured_write_fraction)
        .def_readwrite("captured_read_fraction", &PlacementPlan::captured_read_fraction);

    py::class_<PlacementEstimate>(m, "PlacementEstimate")
        .def_readonly("runtime_s", &PlacementEstimate::runtime_s)
        .def_readonly("all_nvm_runtime_s", &PlacementEstimate::all_nvm_runtime_s)
        .def_readonly("speedup_vs_all_nvm", &PlacementEstimate::speedup_vs_all_nvm);

    // trace_io
    m.def("parse_trace", &parse_trace, py::arg("path"),
          "Parse <prefix>.trace/.meta/.core into a validated CounterTrace");
    m.def("parse_counter_file", &parse_counter_file, py::arg("path"));
    m.def("parse_core_file", &parse_core_file, py::arg("path"));
    m.def("account_traffic", &account_traffic, py::arg("trace"),
          "Apply the per-mode traffic accounting rule");

    // bandwidth analysis
    m.def("compute_bandwidth", &compute_bandwidth, py::arg("series"));
    m.def("moving_average", &moving_average, py::arg("trace"), py::arg("window_len"));
    m.def("segment_phases", &segment_phases, py::arg("trace"),
          py::arg("options") = SegmentationOptions{});
    m.def("phase_stats", &phase_stats, py::arg("trace"), py::arg("first"),
          py::arg("last"));

    // characterization
    m.def("write_ratio", &write_ratio, py::arg("read_bw"), py::arg("write_bw"));
    m.def("classify_tier", &classify_tier, py::arg("metrics"),
          py::arg("thresholds") = TierThresholds{});
    m.def("detect_write_throttling", &detect_write_throttling, py::arg("phase"),
          py::arg("write_thresh_mbps") = 2000.0, py::arg("rw_thresh") = 2.5);
    m.def("contention_ratio", &contention_ratio, py::arg("perf_high"),
          py::arg("perf_low"), py::arg("metric_kind"));
    m.def("make_contention_verdict", &make_contention_verdict, py::arg("ratio_dram"),
          py::arg("ratio_cached"), py::arg("ratio_uncached"),
          py::arg("gap_threshold") = 0.15);
    m.def("contention_flag", &contention_flag, py::arg("verdict"),
          py::arg("gap_threshold") = 0.15);
    m.def("cache_efficiency", &cache_efficiency, py::arg("perf_cached"),
          py::arg("perf_dram"), py::arg("metric_kind"));
    m.def("cached_speedup", &cached_speedup, py::arg("perf_cached"),
          py::arg("perf_uncached"), py::arg("metric_kind"));

    // prediction
    m.def("extract_features", &extract_features, py::arg("core_samples"),
          py::arg("window"));
    m.def("features_per_sample", &features_per_sample, py::arg("core_samples"));
    m.def("ipc_per_sample", &ipc_per_sample, py::arg("core_samples"));
    m.def("fit_normalization", &fit_normalization, py::arg("features"));
    m.def("apply_normalization", &apply_normalization, py::arg("params"),
          py::arg("feature"));
    m.def("ols_fit", &ols_fit, py::arg("rows"), py::arg("y"));
    m.def("student_t_p_value", &student_t_p_value, py::arg("t"), py::arg("dof"));
    m.def("train_model", &train_model, py::arg("features"), py::arg("observed_ipc"),
          py::arg("alpha") = 0.05);
    m.def("predict_ipc", &predict_ipc, py::arg("model"), py::arg("feature"));
    m.def("accuracy", &accuracy, py::arg("predicted"), py::arg("observed"));
    m.def("make_concurrency_plan", &make_concurrency_plan, py::arg("hardware_threads"));
    m.def("make_size_plan", &make_size_plan, py::arg("fixed_concurrency"),
          py::arg("size_ladder_bytes"));
    m.def("save_model", &save_model, py::arg("path"), py::arg("model"));
    m.def("load_model", &load_model, py::arg("path"));

    // simulator
    m.def("nvm_service", &nvm_service, py::arg("demand_read_mbps"),
          py::arg("demand_write_mbps"), py::arg("concurrency"), py::arg("config"));
    m.def("dram_cache", &dram_cache, py::arg("footprint_bytes"),
          py::arg("dram_capacity_bytes"), py::arg("demand_read_mbps"),
          py::arg("demand_write_mbps"), py::arg("config"));
    m.def("simulate", &simulate, py::arg("workload"), py::arg("config"));
    m.def("emit_trace", &emit_trace, py::arg("result"), py::arg("workload"),
          py::arg("prefix"));
    m.def("load_workload", &load_workload, py::arg("path"));
    m.def("load_memory_config", &load_memory_config, py::arg("path"),
          py::arg("defaults") = MemoryConfig{});

    // placement
    m.def("advise", &advise, py::arg("objects"), py::arg("budget_bytes"),
          py::arg("strategy"), py::arg("granule_bytes") = std::uint64_t{1} << 20);
    m.def("estimate", &estimate, py::arg("plan"), py::arg("workload"), py::arg("config"));
    m.def("profile_objects", &profile_objects, py::arg("path"));
}
