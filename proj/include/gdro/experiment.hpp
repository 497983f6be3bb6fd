#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdro/data.hpp"
#include "gdro/metrics.hpp"
#include "gdro/trainer.hpp"

namespace gdro {

// Declarative description of a full run: dataset, protocol knobs, method and
// gamma lists, seeds, and evaluation environments. Parsed from JSON with
// strict key checking (unknown keys are rejected, naming the offending path).
struct ExperimentConfig {
  std::string dataset;
  double train_fraction = 0.7;
  int subsample = 0;  // 0 = full training split
  std::vector<std::uint64_t> seeds;
  std::vector<Method> methods = {Method::kErm, Method::kDro, Method::kGdro,
                                 Method::kOurs};
  std::vector<double> gammas = {1e-4};
  std::vector<EnvironmentSpec> environments;  // empty = one natural environment
  double eta_theta = 0.1;
  double eta_q = 0.1;
  double eta_z = 0.05;
  int t_outer = 200;
  int t_rob = 100;
  std::string output_dir = "results";
  SchemaConfig schema;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string serialize_experiment_config(const ExperimentConfig& cfg);

// Flat JSON for a single training run (used by the C API): keys method,
// gamma, eta_theta, eta_q, eta_z, t_outer, t_rob, seed. Same strictness.
TrainConfig parse_train_config(const std::string& json_text);

// Pipeline JSON: keys train_fraction, seed, subsample, columns. An empty
// string yields the defaults.
PipelineConfig parse_pipeline_config(const std::string& json_text);

// A single environment object, or a JSON array of them. Same key set as the
// entries of the experiment config's "environments" list.
EnvironmentSpec parse_environment_spec(const std::string& json_text);
std::vector<EnvironmentSpec> parse_environment_list(const std::string& json_text);

// Writes the per-iteration history table (same layout run_experiment uses).
void write_history_csv(const std::string& path, const TrainHistory& history);

// Lossless decimal rendering (17 significant digits), used for every numeric
// CSV field so reruns are byte-identical.
std::string format_double(double v);

// One results.csv row. gamma_label is the %.17g value, or "na" for methods
// that ignore gamma (erm, gdro).
struct RunRecord {
  std::string method;
  std::string gamma_label;
  std::uint64_t seed = 0;
  std::string environment;
  MetricsReport metrics;
};

// Runs the full grid: for each seed the dataset is re-split, every method is
// trained (methods without a gamma run once per seed), and every trained
// model is evaluated on every environment. Emits, under output_dir:
//   config.json   the parsed config, re-serialized
//   results.csv   one row per (method, gamma, seed, environment), flushed as
//                 produced
//   summary.csv   per (method, gamma, environment): mean and sample std over
//                 seeds of the three aggregate metrics
//   history/<run>.csv   per-iteration group losses, weights, duality gap and
//                       gradient norm
// Reruns with the same config write byte-identical files.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

// Education-marginal histograms (counts and proportions per category) for the
// uniformized training split, the natural test pool, and each environment.
void write_environment_histograms(const PreparedData& prepared,
                                  const std::vector<EnvironmentSpec>& environments,
                                  std::uint64_t run_seed, const std::string& out_path);

}  // namespace gdro
