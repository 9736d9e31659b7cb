#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ppa/basis_adaptation.hpp"
#include "ppa/bench_models.hpp"
#include "ppa/density.hpp"
#include "ppa/io.hpp"
#include "ppa/ppr.hpp"
#include "ppa/pursuit_adaptation.hpp"

namespace ppa::harness {

using io::json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr std::uint64_t kTestSeedOffset = 1000000;
inline constexpr std::uint64_t kSizeSeedStride = 1000;

struct ExperimentConfig {
  // [model]
  std::string model = "borehole";  // benchmark name, or "csv" for an external dataset
  std::string dataset;             // CSV path used when no --data is given
  // [method]
  std::string method = "ppa";  // ppa | ppr | adaptation
  int p = 3;
  int max_dim = 0;
  int max_stages = 10;
  StageCriterion criterion = StageCriterion::LeaveOneOut;
  DistanceCriterion adaptation_criterion = DistanceCriterion::Kde;
  // [samples]
  std::vector<Eigen::Index> sample_sizes{150};
  Eigen::Index test_size = 100;
  Eigen::Index robustness_size = 150;
  // [seeds]
  std::uint64_t base_seed = 1;
  int n_repeats = 10;
  // [tolerances]
  double stage_tol = 0.1;
  double inner_tol = 1e-4;
  double adaptation_tol = kAdaptationTolerance;
  // [uq]
  Eigen::Index n_mc = kDefaultMonteCarlo;
  std::uint64_t mc_seed = 7;
  Eigen::Index reference_n_mc = kDefaultMonteCarlo;
  std::uint64_t reference_seed = 999;
  std::string reference;  // density CSV for models without a named benchmark
  std::string cache_dir;  // empty: <output>/cache
  // [output]
  std::string output_dir = "out";

  bool is_benchmark() const { return model != "csv"; }
  fs::path cache() const { return cache_dir.empty() ? fs::path(output_dir) / "cache" : fs::path(cache_dir); }

  void validate() const {
    require(method == "ppa" || method == "ppr" || method == "adaptation", ErrorCode::InvalidArgument,
            "method must be ppa, ppr or adaptation, got '" + method + "'");
    require(p >= 1, ErrorCode::InvalidArgument, "p must be >= 1");
    require(max_dim >= 0 && max_stages >= 0, ErrorCode::InvalidArgument,
            "max_dim and max_stages must be non-negative");
    require(!sample_sizes.empty(), ErrorCode::InvalidArgument, "sample_sizes is empty");
    for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
      require(sample_sizes[i] > 0, ErrorCode::InvalidArgument, "sample sizes must be positive");
      require(i == 0 || sample_sizes[i] > sample_sizes[i - 1], ErrorCode::InvalidArgument,
              "sample sizes must be strictly ascending");
    }
    require(test_size > 0 && robustness_size > 0, ErrorCode::InvalidArgument,
            "test_size and robustness_size must be positive");
    require(n_repeats >= 1, ErrorCode::InvalidArgument, "n_repeats must be >= 1");
    require(stage_tol >= 0.0 && inner_tol >= 0.0 && adaptation_tol > 0.0, ErrorCode::InvalidArgument,
            "tolerances must be non-negative");
    require(n_mc >= 1000, ErrorCode::InvalidArgument, "n_mc must be >= 1000");
    require(reference_n_mc >= 10000, ErrorCode::InvalidArgument, "reference_n_mc must be >= 1e4");
  }

  json to_json() const {
    return {
        {"model", {{"name", model}, {"dataset", dataset}}},
        {"method",
         {{"kind", method},
          {"p", p},
          {"max_dim", max_dim},
          {"max_stages", max_stages},
          {"criterion", to_string(criterion)},
          {"adaptation_criterion", to_string(adaptation_criterion)}}},
        {"samples",
         {{"sizes", sample_sizes}, {"test_size", test_size}, {"robustness_size", robustness_size}}},
        {"seeds", {{"base_seed", base_seed}, {"n_repeats", n_repeats}}},
        {"tolerances",
         {{"stage_tol", stage_tol}, {"inner_tol", inner_tol}, {"adaptation_tol", adaptation_tol}}},
        {"uq",
         {{"n_mc", n_mc},
          {"mc_seed", mc_seed},
          {"reference_n_mc", reference_n_mc},
          {"reference_seed", reference_seed},
          {"reference", reference},
          {"cache_dir", cache_dir}}},
        {"output", {{"dir", output_dir}}},
    };
  }
};

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream ss(text);
  T v{};
  ss >> v;
  require(!ss.fail() && (ss >> std::ws).eof(), ErrorCode::Parse,
          "config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

inline std::vector<Eigen::Index> parse_sizes(const std::string& text) {
  std::vector<Eigen::Index> out;
  std::string cell;
  std::istringstream ss(text);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto v = parse_number<long long>("samples.sizes", cell.substr(b));
    require(v > 0, ErrorCode::InvalidArgument, "sample sizes must be positive");
    out.push_back(static_cast<Eigen::Index>(v));
  }
  return out;
}

}  // namespace detail

/// Parse an INI-style configuration. Unknown sections or keys are rejected so typos surface.
inline ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorCode::Parse, origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"model.name", [&](const std::string& v) { c.model = v; }},
      {"model.dataset", [&](const std::string& v) { c.dataset = v; }},
      {"method.kind", [&](const std::string& v) { c.method = v; }},
      {"method.p", [&](const std::string& v) { c.p = detail::parse_number<int>("method.p", v); }},
      {"method.max_dim", [&](const std::string& v) { c.max_dim = detail::parse_number<int>("method.max_dim", v); }},
      {"method.max_stages",
       [&](const std::string& v) { c.max_stages = detail::parse_number<int>("method.max_stages", v); }},
      {"method.criterion", [&](const std::string& v) { c.criterion = parse_stage_criterion(v); }},
      {"method.adaptation_criterion",
       [&](const std::string& v) {
         require(v == "kde" || v == "coefficient", ErrorCode::Parse,
                 "method.adaptation_criterion must be kde or coefficient");
         c.adaptation_criterion = v == "kde" ? DistanceCriterion::Kde : DistanceCriterion::Coefficient;
       }},
      {"samples.sizes", [&](const std::string& v) { c.sample_sizes = detail::parse_sizes(v); }},
      {"samples.test_size",
       [&](const std::string& v) { c.test_size = detail::parse_number<long long>("samples.test_size", v); }},
      {"samples.robustness_size",
       [&](const std::string& v) {
         c.robustness_size = detail::parse_number<long long>("samples.robustness_size", v);
       }},
      {"seeds.base_seed",
       [&](const std::string& v) { c.base_seed = detail::parse_number<std::uint64_t>("seeds.base_seed", v); }},
      {"seeds.n_repeats",
       [&](const std::string& v) { c.n_repeats = detail::parse_number<int>("seeds.n_repeats", v); }},
      {"tolerances.stage_tol",
       [&](const std::string& v) { c.stage_tol = detail::parse_number<double>("tolerances.stage_tol", v); }},
      {"tolerances.inner_tol",
       [&](const std::string& v) { c.inner_tol = detail::parse_number<double>("tolerances.inner_tol", v); }},
      {"tolerances.adaptation_tol",
       [&](const std::string& v) {
         c.adaptation_tol = detail::parse_number<double>("tolerances.adaptation_tol", v);
       }},
      {"uq.n_mc", [&](const std::string& v) { c.n_mc = detail::parse_number<long long>("uq.n_mc", v); }},
      {"uq.mc_seed",
       [&](const std::string& v) { c.mc_seed = detail::parse_number<std::uint64_t>("uq.mc_seed", v); }},
      {"uq.reference_n_mc",
       [&](const std::string& v) {
         c.reference_n_mc = detail::parse_number<long long>("uq.reference_n_mc", v);
       }},
      {"uq.reference_seed",
       [&](const std::string& v) {
         c.reference_seed = detail::parse_number<std::uint64_t>("uq.reference_seed", v);
       }},
      {"uq.reference", [&](const std::string& v) { c.reference = v; }},
      {"uq.cache_dir", [&](const std::string& v) { c.cache_dir = v; }},
      {"output.dir", [&](const std::string& v) { c.output_dir = v; }},
  };
  for (const auto& [section, body] : tree) {
    require(!body.empty() || body.data().empty(), ErrorCode::Parse,
            origin + ": key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const auto it = setters.find(name);
      require(it != setters.end(), ErrorCode::Parse, origin + ": unknown key '" + name + "'");
      it->second(value.data());
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  return parse_config(io::read_text(path), path.string());
}

/// 64-bit FNV-1a, used to fingerprint configurations in run records.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------------------
// Seeds and benchmarks

inline std::uint64_t data_seed(const ExperimentConfig& c, std::size_t size_index, int repeat) {
  return c.base_seed + kSizeSeedStride * size_index + static_cast<std::uint64_t>(repeat);
}

inline std::uint64_t test_seed(const ExperimentConfig& c) { return c.base_seed + kTestSeedOffset; }

inline BenchModel benchmark(const std::string& name) {
  if (name == "borehole") return borehole();
  fail(ErrorCode::InvalidArgument, "unknown benchmark '" + name + "' (known: borehole)");
}

// ---------------------------------------------------------------------------------------
// Fitting

struct FitOutcome {
  io::StoredModel stored;
  json metrics;
};

/// Fit the configured method on `data`. `data_seed` is recorded for replay only.
inline FitOutcome fit_method(const ExperimentConfig& c, const Dataset& data, std::uint64_t seed,
                             std::uint64_t data_seed_used) {
  FitOutcome out;
  out.stored.seed = seed;
  out.stored.input_spec = c.is_benchmark() ? json(c.model) : json(nullptr);
  out.stored.fit = {{"method", c.method},
                    {"p", c.p},
                    {"max_dim", c.max_dim},
                    {"n_samples", data.size()},
                    {"data_seed", data_seed_used}};
  json& m = out.metrics;
  if (c.method == "ppa") {
    PpaOptions o;
    o.p = c.p;
    o.max_dim = c.max_dim;
    o.tol = c.stage_tol;
    o.seed = seed;
    o.criterion = c.criterion;
    o.inner.rss_tol = c.inner_tol;
    PpaFit f = fit_ppa(data, o);
    out.stored.fit["stage_tol"] = c.stage_tol;
    out.stored.fit["inner_tol"] = c.inner_tol;
    out.stored.fit["criterion"] = to_string(c.criterion);
    std::vector<double> rss, loo;
    for (const auto& st : f.model.fit_trace) {
      rss.push_back(st.rss);
      loo.push_back(st.loo);
    }
    m = {{"r", f.model.r()},
         {"stopped_reason", f.model.stopped_reason},
         {"training_rss", (data.outputs - f.fitted).squaredNorm()},
         {"rss_trace", rss},
         {"loo_trace", loo}};
    out.stored.kind = "ppa";
    out.stored.model = std::move(f.model);
  } else if (c.method == "ppr") {
    PprOptions o;
    o.p = c.p;
    o.max_stages = c.max_stages;
    o.tol = c.stage_tol;
    o.seed = seed;
    o.criterion = c.criterion;
    o.inner.rss_tol = c.inner_tol;
    PprFit f = fit_ppr(data, o);
    out.stored.fit["stage_tol"] = c.stage_tol;
    out.stored.fit["inner_tol"] = c.inner_tol;
    out.stored.fit["max_stages"] = c.max_stages;
    out.stored.fit["criterion"] = to_string(c.criterion);
    m = {{"stages", f.model.stages.size()},
         {"stopped_reason", f.model.stopped_reason},
         {"training_rss", (data.outputs - f.fitted).squaredNorm()},
         {"rss_trace", f.model.fit_trace},
         {"loo_trace", f.model.loo_trace}};
    out.stored.kind = "ppr";
    out.stored.model = std::move(f.model);
  } else {
    AdaptationOptions o;
    o.p = c.p;
    o.max_dim = c.max_dim;
    o.criterion = c.adaptation_criterion;
    o.tol = c.adaptation_tol;
    o.seed = seed;
    AdaptationReport rep = classical_adaptation(data, o);
    out.stored.fit["adaptation_tol"] = c.adaptation_tol;
    out.stored.fit["adaptation_criterion"] = to_string(c.adaptation_criterion);
    PceModel best = rep.converged();
    m = {{"r", rep.converged_r},
         {"distances", rep.distances},
         {"training_rss", (data.outputs - evaluate(best, data.inputs)).squaredNorm()}};
    out.stored.kind = "adaptation";
    out.stored.model = std::move(best);
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Densities

/// Reference density of a named benchmark, read from or written to the on-disk cache.
inline DensityEstimate cached_reference(const ExperimentConfig& c, const std::string& name) {
  const fs::path path = c.cache() / ("reference_" + name + "_n" + std::to_string(c.reference_n_mc) +
                                     "_s" + std::to_string(c.reference_seed) + ".csv");
  if (fs::exists(path)) return io::read_density(path);
  DensityEstimate ref = reference_density(benchmark(name), c.reference_n_mc, c.reference_seed);
  io::write_density(path, ref.grid, ref.values);
  // Reload so a fresh computation and a cache hit are bit-identical downstream.
  return io::read_density(path);
}

/// Reference density for a stored model: its benchmark if named, else the configured CSV.
inline DensityEstimate reference_for(const ExperimentConfig& c, const json& input_spec) {
  if (input_spec.is_string()) return cached_reference(c, input_spec.get<std::string>());
  require(!c.reference.empty(), ErrorCode::InvalidArgument,
          "no reference density: model has no named benchmark and uq.reference is not set");
  return io::read_density(c.reference);
}

/// Cumulative trapezoid integral of a density on its grid.
inline Vector cdf_from_pdf(const Vector& grid, const Vector& pdf) {
  Vector out(grid.size());
  if (grid.size() == 0) return out;
  out(0) = 0.0;
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    out(i) = out(i - 1) + 0.5 * (pdf(i) + pdf(i - 1)) * (grid(i) - grid(i - 1));
  return out;
}

inline Vector surrogate_outputs(const ExperimentConfig& c, const io::StoredModel& sm) {
  return surrogate_samples([&](const Matrix& x) { return sm.predict(x); }, sm.input_dim(), c.n_mc,
                           c.mc_seed);
}

// ---------------------------------------------------------------------------------------
// Run records

inline json make_record(const std::string& command, const ExperimentConfig& c, json metrics,
                        json artifacts, double seconds) {
  const json cfg = c.to_json();
  return {{"command", command},
          {"version", kVersion},
          {"config", cfg},
          {"config_hash", hex(fnv1a(cfg.dump()))},
          {"metrics", std::move(metrics)},
          {"artifacts", std::move(artifacts)},
          {"wall_clock_s", seconds}};
}

inline void write_record(const fs::path& path, const json& record) {
  io::write_text(path, record.dump(2) + "\n");
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string sample_name(const std::string& model, Eigen::Index n, std::uint64_t seed) {
  return model + "_N" + std::to_string(n) + "_seed" + std::to_string(seed) + ".csv";
}

// ---------------------------------------------------------------------------------------
// Commands. Each writes its artifacts under c.output_dir and returns the run record.

inline json cmd_sample(const ExperimentConfig& c) {
  c.validate();
  require(c.is_benchmark(), ErrorCode::InvalidArgument, "sample needs a named benchmark model");
  Stopwatch clock;
  const BenchModel bench = benchmark(c.model);
  const fs::path dir = c.output_dir;
  json files = json::array();
  for (std::size_t i = 0; i < c.sample_sizes.size(); ++i) {
    const auto seed = data_seed(c, i, 0);
    const fs::path path = dir / sample_name(c.model, c.sample_sizes[i], seed);
    io::write_dataset(path, sample_dataset(bench, c.sample_sizes[i], seed));
    files.push_back(path.string());
  }
  const fs::path test = dir / ("test_" + sample_name(c.model, c.test_size, test_seed(c)));
  io::write_dataset(test, sample_dataset(bench, c.test_size, test_seed(c)));
  json record = make_record("sample", c, {{"datasets", files.size()}},
                            {{"datasets", files}, {"test", test.string()}}, clock.seconds());
  write_record(dir / "sample_record.json", record);
  return record;
}

/// Fit on `data_path`, or on a freshly sampled benchmark set of the first configured size.
inline json cmd_fit(const ExperimentConfig& c, const std::string& data_path = {}) {
  c.validate();
  Stopwatch clock;
  const fs::path dir = c.output_dir;
  Dataset data;
  std::uint64_t dseed = c.base_seed;
  std::string source = data_path.empty() ? c.dataset : data_path;
  if (!source.empty()) {
    data = io::read_dataset(source);
  } else {
    require(c.is_benchmark(), ErrorCode::InvalidArgument, "fit needs --data or model.dataset");
    const BenchModel bench = benchmark(c.model);
    require(bench.dim() >= 1, ErrorCode::InvalidArgument, "benchmark has no inputs");
    dseed = data_seed(c, 0, 0);
    data = sample_dataset(bench, c.sample_sizes.front(), dseed);
    source = (dir / sample_name(c.model, c.sample_sizes.front(), dseed)).string();
    io::write_dataset(source, data);
  }
  if (c.is_benchmark()) {
    require(data.dim() == benchmark(c.model).dim(), ErrorCode::DimensionMismatch,
            "dataset has " + std::to_string(data.dim()) + " inputs, benchmark '" + c.model +
                "' has " + std::to_string(benchmark(c.model).dim()));
  }
  FitOutcome fit = fit_method(c, data, c.base_seed, dseed);
  json metrics = fit.metrics;
  if (c.is_benchmark()) {
    const Dataset test = sample_dataset(benchmark(c.model), c.test_size, test_seed(c));
    metrics["test_relative_l2"] = relative_l2(fit.stored.predict(test.inputs), test.outputs);
    metrics["test_seed"] = test_seed(c);
  }
  const fs::path model_path = dir / ("model_" + c.method + ".json");
  io::save_model(model_path, fit.stored);
  json record = make_record("fit", c, metrics, {{"model", model_path.string()}, {"data", source}},
                            clock.seconds());
  write_record(dir / ("fit_" + c.method + "_record.json"), record);
  return record;
}

/// Surrogate, reference and (optionally) raw-data PDF/CDF grids with relative l2 errors.
inline json cmd_uq(const ExperimentConfig& c, const std::string& model_path,
                   const std::string& data_path = {}) {
  c.validate();
  Stopwatch clock;
  const fs::path dir = c.output_dir;
  const io::StoredModel sm = io::load_model(model_path);
  const DensityEstimate ref = reference_for(c, sm.input_spec);
  const Vector ys = surrogate_outputs(c, sm);
  const DensityEstimate sur = kde(ys, ref.grid);
  const Vector ref_cdf = cdf_from_pdf(ref.grid, ref.values);
  const Vector sur_cdf = empirical_cdf(ys, ref.grid);

  json metrics = {{"pdf_relative_l2", relative_l2(sur.values, ref.values)},
                  {"cdf_relative_l2", relative_l2(sur_cdf, ref_cdf)},
                  {"n_mc", c.n_mc},
                  {"mc_seed", c.mc_seed}};
  json artifacts;
  const auto emit = [&](const std::string& key, const Vector& values) {
    const fs::path path = dir / (key + ".csv");
    io::write_density(path, ref.grid, values);
    artifacts[key] = path.string();
  };
  emit("surrogate_pdf", sur.values);
  emit("surrogate_cdf", sur_cdf);
  emit("reference_pdf", ref.values);
  emit("reference_cdf", ref_cdf);
  if (!data_path.empty()) {
    const Dataset data = io::read_dataset(data_path);
    const DensityEstimate dk = kde(data.outputs, ref.grid);
    emit("data_pdf", dk.values);
    metrics["data_pdf_relative_l2"] = relative_l2(dk.values, ref.values);
  }
  json record = make_record("uq", c, metrics, artifacts, clock.seconds());
  write_record(dir / "uq_record.json", record);
  return record;
}

struct StudyRun {
  Eigen::Index n = 0;
  int repeat = 0;
  std::uint64_t seed = 0;
  int r = 0;  // converged dimension, or PPR stage count
  double pdf_error = 0.0;
  double test_error = 0.0;
  Vector pdf;  // surrogate density on the reference grid
};

/// One benchmark replicate: sample, fit, and score against the reference and test set.
inline StudyRun run_replicate(const ExperimentConfig& c, const BenchModel& bench,
                              const DensityEstimate& ref, const Dataset& test, Eigen::Index n,
                              int repeat, std::uint64_t seed) {
  const Dataset data = sample_dataset(bench, n, seed);
  const FitOutcome fit = fit_method(c, data, seed, seed);
  StudyRun run;
  run.n = n;
  run.repeat = repeat;
  run.seed = seed;
  run.r = fit.metrics.contains("r") ? fit.metrics["r"].get<int>() : fit.metrics["stages"].get<int>();
  run.pdf = kde(surrogate_outputs(c, fit.stored), ref.grid).values;
  run.pdf_error = relative_l2(run.pdf, ref.values);
  run.test_error = relative_l2(fit.stored.predict(test.inputs), test.outputs);
  return run;
}

inline double median(std::vector<double> v) {
  require(!v.empty(), ErrorCode::InvalidArgument, "median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline json summarize(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
  return {{"mean", mean},
          {"std", sd},
          {"median", median(v)},
          {"min", *std::min_element(v.begin(), v.end())},
          {"max", *std::max_element(v.begin(), v.end())}};
}

/// PDF error against sample size: n_repeats fresh datasets per size.
inline json cmd_convergence(const ExperimentConfig& c) {
  c.validate();
  require(c.is_benchmark(), ErrorCode::InvalidArgument, "convergence needs a named benchmark model");
  Stopwatch clock;
  const fs::path dir = c.output_dir;
  const BenchModel bench = benchmark(c.model);
  const DensityEstimate ref = cached_reference(c, c.model);
  const Dataset test = sample_dataset(bench, c.test_size, test_seed(c));

  Matrix rows(static_cast<Eigen::Index>(c.sample_sizes.size()) * c.n_repeats, 6);
  Matrix summary(static_cast<Eigen::Index>(c.sample_sizes.size()), 5);
  json per_size = json::array();
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < c.sample_sizes.size(); ++i) {
    std::vector<double> errs, tests;
    for (int rep = 0; rep < c.n_repeats; ++rep) {
      const StudyRun run = run_replicate(c, bench, ref, test, c.sample_sizes[i], rep, data_seed(c, i, rep));
      rows.row(k++) << static_cast<double>(run.n), rep, static_cast<double>(run.seed), run.r,
          run.pdf_error, run.test_error;
      errs.push_back(run.pdf_error);
      tests.push_back(run.test_error);
    }
    json s = summarize(errs);
    summary.row(static_cast<Eigen::Index>(i)) << static_cast<double>(c.sample_sizes[i]),
        s["median"].get<double>(), s["mean"].get<double>(), s["min"].get<double>(), s["max"].get<double>();
    per_size.push_back({{"n", c.sample_sizes[i]}, {"pdf_error", s}, {"test_error", summarize(tests)}});
  }
  const fs::path table = dir / "convergence.csv";
  const fs::path table_summary = dir / "convergence_summary.csv";
  io::write_csv(table, {"n", "repeat", "seed", "r", "pdf_error", "test_error"}, rows);
  io::write_csv(table_summary, {"n", "median", "mean", "min", "max"}, summary);
  json record = make_record("convergence", c, {{"sizes", per_size}},
                            {{"table", table.string()}, {"summary", table_summary.string()}},
                            clock.seconds());
  write_record(dir / "convergence_record.json", record);
  return record;
}

/// Independent fits on n_repeats datasets of robustness_size samples (seed = base + index).
inline json cmd_robustness(const ExperimentConfig& c) {
  c.validate();
  require(c.is_benchmark(), ErrorCode::InvalidArgument, "robustness needs a named benchmark model");
  require(c.n_repeats >= 2, ErrorCode::InvalidArgument, "robustness needs n_repeats >= 2");
  Stopwatch clock;
  const fs::path dir = c.output_dir;
  const BenchModel bench = benchmark(c.model);
  const DensityEstimate ref = cached_reference(c, c.model);
  const Dataset test = sample_dataset(bench, c.test_size, test_seed(c));

  Matrix rows(c.n_repeats, 5);
  Matrix pdfs(ref.grid.size(), c.n_repeats + 2);
  pdfs.col(0) = ref.grid;
  pdfs.col(1) = ref.values;
  std::vector<std::string> pdf_header{"grid", "reference"};
  std::vector<double> errs, tests;
  json dims = json::array();
  for (int rep = 0; rep < c.n_repeats; ++rep) {
    const std::uint64_t seed = c.base_seed + static_cast<std::uint64_t>(rep);
    const StudyRun run = run_replicate(c, bench, ref, test, c.robustness_size, rep, seed);
    rows.row(rep) << rep, static_cast<double>(seed), run.r, run.pdf_error, run.test_error;
    pdfs.col(rep + 2) = run.pdf;
    pdf_header.push_back("repeat_" + std::to_string(rep));
    errs.push_back(run.pdf_error);
    tests.push_back(run.test_error);
    dims.push_back(run.r);
  }
  const fs::path table = dir / "robustness.csv";
  const fs::path overlay = dir / "robustness_pdfs.csv";
  io::write_csv(table, {"repeat", "seed", "r", "pdf_error", "test_error"}, rows);
  io::write_csv(overlay, pdf_header, pdfs);
  json record = make_record("robustness", c,
                            {{"n", c.robustness_size},
                             {"pdf_error", summarize(errs)},
                             {"test_error", summarize(tests)},
                             {"r", dims}},
                            {{"table", table.string()}, {"pdfs", overlay.string()}}, clock.seconds());
  write_record(dir / "robustness_record.json", record);
  return record;
}

inline json cmd_predict(const ExperimentConfig& c, const std::string& model_path,
                        const std::string& test_path) {
  Stopwatch clock;
  const fs::path dir = c.output_dir;
  const io::StoredModel sm = io::load_model(model_path);
  const io::PointTable pts = io::read_points(test_path);
  require(pts.inputs.cols() == sm.input_dim(), ErrorCode::DimensionMismatch,
          test_path + ": " + std::to_string(pts.inputs.cols()) + " input columns, model expects " +
              std::to_string(sm.input_dim()));
  const Vector pred = sm.predict(pts.inputs);
  json metrics = {{"n", pred.size()}};
  const fs::path out = dir / "predictions.csv";
  if (pts.outputs) {
    Matrix m(pred.size(), 2);
    m.col(0) = *pts.outputs;
    m.col(1) = pred;
    io::write_csv(out, {"y", "prediction"}, m);
    metrics["relative_l2"] = relative_l2(pred, *pts.outputs);
  } else {
    io::write_csv(out, {"prediction"}, Matrix(pred));
  }
  json record = make_record("predict", c, metrics, {{"predictions", out.string()}}, clock.seconds());
  write_record(dir / "predict_record.json", record);
  return record;
}

struct IngestOptions {
  std::string csv;
  std::vector<std::string> inputs;  // empty: every column not listed in qoi
  std::vector<std::string> qoi;     // empty: every column not listed in inputs
  std::string input_spec;           // JSON marginal list; empty means inputs are Gaussian already
};

/// Split an external table into one `xi_1..xi_d,y` dataset per QoI column.
inline json cmd_ingest(const ExperimentConfig& c, const IngestOptions& opts) {
  Stopwatch clock;
  const fs::path dir = c.output_dir;
  const io::CsvTable t = io::read_csv(opts.csv);
  require(t.values.rows() >= 1, ErrorCode::Parse, opts.csv + ": no data rows");
  require(!opts.inputs.empty() || !opts.qoi.empty(), ErrorCode::InvalidArgument,
          "ingest needs input or QoI columns");
  std::vector<std::string> inputs = opts.inputs, qoi = opts.qoi;
  for (const auto& name : opts.inputs) t.require_column(name);
  for (const auto& name : opts.qoi) t.require_column(name);
  const auto listed = [](const std::vector<std::string>& v, const std::string& h) {
    return std::find(v.begin(), v.end(), h) != v.end();
  };
  for (const auto& h : t.header) {
    if (opts.inputs.empty() && !listed(opts.qoi, h)) inputs.push_back(h);
    if (opts.qoi.empty() && !listed(opts.inputs, h)) qoi.push_back(h);
  }
  require(!inputs.empty() && !qoi.empty(), ErrorCode::InvalidArgument,
          "ingest needs at least one input and one QoI column");

  Matrix x(t.values.rows(), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t j = 0; j < inputs.size(); ++j)
    x.col(static_cast<Eigen::Index>(j)) = t.values.col(t.require_column(inputs[j]));
  json spec_json = nullptr;
  if (!opts.input_spec.empty()) {
    spec_json = json::parse(io::read_text(opts.input_spec));
    const InputSpec spec = io::input_spec_from_json(spec_json);
    require(spec.dim() == static_cast<int>(inputs.size()), ErrorCode::DimensionMismatch,
            "input spec has " + std::to_string(spec.dim()) + " marginals for " +
                std::to_string(inputs.size()) + " input columns");
    x = to_gaussian_rows(spec, x);
  } else {
    spec_json = io::to_json(InputSpec::standard_normal(static_cast<int>(inputs.size())));
  }

  const std::string stem = fs::path(opts.csv).stem().string();
  json files;
  for (const auto& q : qoi) {
    const Dataset data(x, t.values.col(t.require_column(q)));
    const fs::path path = dir / (stem + "_" + q + ".csv");
    io::write_dataset(path, data);
    files[q] = path.string();
  }
  const fs::path spec_path = dir / (stem + "_input_spec.json");
  io::write_text(spec_path, json{{"inputs", inputs}, {"marginals", spec_json}}.dump(2) + "\n");
  json record = make_record("ingest", c,
                            {{"rows", t.values.rows()}, {"inputs", inputs}, {"qoi", qoi}},
                            {{"datasets", files}, {"input_spec", spec_path.string()}}, clock.seconds());
  write_record(dir / (stem + "_ingest_record.json"), record);
  return record;
}

}  // namespace ppa::harness
