// Command-line front end for the PCE / projection pursuit pipeline.
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppa/harness.hpp"

namespace h = ppa::harness;

namespace {

void print_summary(const h::json& record) {
  std::cout << record.at("command").get<std::string>() << ": " << record.at("metrics").dump() << "\n";
  for (const auto& [key, value] : record.at("artifacts").items())
    std::cout << "  " << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate fitting and density estimation for PCE models (ppa, ppr, adaptation)"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "INI experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Base seed (overrides seeds.base_seed)");
  app.add_option("--out", out_dir, "Output directory (overrides output.dir)");

  auto* sample = app.add_subcommand("sample", "Write seeded benchmark datasets for each sample size");

  std::string data_path, method;
  auto* fit = app.add_subcommand("fit", "Fit a surrogate and write the model file and run record");
  fit->add_option("--data", data_path, "Dataset CSV (xi_1..xi_d,y); default samples the benchmark");
  fit->add_option("--method", method, "ppa, ppr or adaptation (overrides method.kind)");

  std::string model_path, uq_data;
  std::optional<long long> n_mc;
  auto* uq = app.add_subcommand("uq", "Surrogate, reference and data densities with relative l2 errors");
  uq->add_option("--model", model_path, "Model file")->required();
  uq->add_option("--data", uq_data, "Training CSV for the raw-data density");
  uq->add_option("--n-mc", n_mc, "Surrogate Monte Carlo sample count");

  auto* convergence = app.add_subcommand("convergence", "PDF error against training sample size");
  convergence->add_option("--method", method, "ppa, ppr or adaptation");
  auto* robustness = app.add_subcommand("robustness", "Repeated fits on independent datasets");
  robustness->add_option("--method", method, "ppa, ppr or adaptation");

  std::string test_path;
  auto* predict = app.add_subcommand("predict", "Predict at the points of a CSV");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--test", test_path, "CSV with xi_1..xi_d and optional y")->required();

  h::IngestOptions ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "Split an external CSV into one dataset per QoI");
  ingest->add_option("--csv", ingest_opts.csv, "External table")->required();
  ingest->add_option("--inputs", ingest_opts.inputs, "Input columns")->delimiter(',');
  ingest->add_option("--qoi", ingest_opts.qoi, "QoI columns")->delimiter(',');
  ingest->add_option("--input-spec", ingest_opts.input_spec,
                     "JSON marginal list for physical-space inputs");

  CLI11_PARSE(app, argc, argv);

  try {
    h::ExperimentConfig cfg = config_path.empty() ? h::ExperimentConfig{} : h::load_config(config_path);
    if (seed) cfg.base_seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!method.empty()) cfg.method = method;
    if (n_mc) cfg.n_mc = *n_mc;
    cfg.validate();

    h::json record;
    if (*sample) record = h::cmd_sample(cfg);
    else if (*fit) record = h::cmd_fit(cfg, data_path);
    else if (*uq) record = h::cmd_uq(cfg, model_path, uq_data);
    else if (*convergence) record = h::cmd_convergence(cfg);
    else if (*robustness) record = h::cmd_robustness(cfg);
    else if (*predict) record = h::cmd_predict(cfg, model_path, test_path);
    else if (*ingest) record = h::cmd_ingest(cfg, ingest_opts);
    print_summary(record);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
