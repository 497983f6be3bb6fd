// Command-line front end. Everything goes through the C API in gdro/gdro.h;
// this file never touches the C++ core directly.
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gdro/gdro.h"

namespace {

using nlohmann::json;

struct DatasetCloser {
  void operator()(gdro_dataset* p) const { gdro_dataset_close(p); }
};
struct ModelCloser {
  void operator()(gdro_model* p) const { gdro_model_close(p); }
};
struct HistoryCloser {
  void operator()(gdro_history* p) const { gdro_history_close(p); }
};
struct StringFreer {
  void operator()(char* p) const { gdro_string_free(p); }
};

using DatasetPtr = std::unique_ptr<gdro_dataset, DatasetCloser>;
using ModelPtr = std::unique_ptr<gdro_model, ModelCloser>;
using HistoryPtr = std::unique_ptr<gdro_history, HistoryCloser>;
using StringPtr = std::unique_ptr<char, StringFreer>;

// Prints the library error and returns the status as the exit code (0 = ok).
int check(gdro_status status) {
  if (status != GDRO_OK) {
    std::cerr << "error: " << gdro_last_error() << "\n";
  }
  return static_cast<int>(status);
}

// JSON arguments may be given inline or as a path to a file holding the text.
std::string resolve_json_arg(const std::string& arg, int* rc) {
  *rc = 0;
  const std::size_t first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
    return arg;
  }
  std::ifstream in(arg);
  if (!in) {
    std::cerr << "error: cannot open JSON file: " << arg << "\n";
    *rc = static_cast<int>(GDRO_ERR_IO);
    return {};
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct PipelineOptions {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
  int subsample = 0;
};

void add_pipeline_options(CLI::App* cmd, PipelineOptions* o) {
  cmd->add_option("--train-fraction", o->train_fraction,
                  "Training fraction of the natural split")
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "Split / resample / init seed")
      ->capture_default_str();
  cmd->add_option("--subsample", o->subsample,
                  "Group-stratified cap on training rows (0 = all)")
      ->capture_default_str();
}

DatasetPtr open_dataset(const std::string& path, const PipelineOptions& o,
                        int* rc) {
  json pipeline;
  pipeline["train_fraction"] = o.train_fraction;
  pipeline["seed"] = o.seed;
  pipeline["subsample"] = o.subsample;
  gdro_dataset* raw = nullptr;
  *rc = check(gdro_dataset_open(path.c_str(), pipeline.dump().c_str(), &raw));
  return DatasetPtr(raw);
}

struct TrainOptions {
  std::string data;
  PipelineOptions pipeline;
  std::string method = "ours";
  double gamma = 1e-4;
  double eta_theta = 0.1;
  double eta_q = 0.1;
  double eta_z = 0.05;
  int t_outer = 200;
  int t_rob = 100;
  std::string model_out;
  std::string history_out;
};

int run_train(const TrainOptions& o) {
  int rc = 0;
  DatasetPtr data = open_dataset(o.data, o.pipeline, &rc);
  if (rc != 0) return rc;

  json train_json;
  train_json["method"] = o.method;
  train_json["gamma"] = o.gamma;
  train_json["eta_theta"] = o.eta_theta;
  train_json["eta_q"] = o.eta_q;
  train_json["eta_z"] = o.eta_z;
  train_json["t_outer"] = o.t_outer;
  train_json["t_rob"] = o.t_rob;
  train_json["seed"] = o.pipeline.seed;

  gdro_model* model_raw = nullptr;
  gdro_history* history_raw = nullptr;
  rc = check(gdro_train(data.get(), train_json.dump().c_str(), &model_raw,
                        &history_raw));
  if (rc != 0) return rc;
  ModelPtr model(model_raw);
  HistoryPtr history(history_raw);

  if (!o.model_out.empty()) {
    rc = check(gdro_model_save(model.get(), o.model_out.c_str()));
    if (rc != 0) return rc;
  }
  if (!o.history_out.empty()) {
    rc = check(gdro_history_save_csv(history.get(), o.history_out.c_str()));
    if (rc != 0) return rc;
  }

  char* metrics_raw = nullptr;
  rc = check(gdro_evaluate(model.get(), data.get(), "test_pool", nullptr,
                           &metrics_raw));
  if (rc != 0) return rc;
  StringPtr metrics(metrics_raw);
  std::cout << metrics.get() << "\n";
  return 0;
}

struct EvaluateOptions {
  std::string data;
  PipelineOptions pipeline;
  std::string model;
  std::string split = "test_pool";
  std::string environment;  // inline JSON or a file path; empty = whole split
};

int run_evaluate(const EvaluateOptions& o) {
  int rc = 0;
  DatasetPtr data = open_dataset(o.data, o.pipeline, &rc);
  if (rc != 0) return rc;

  gdro_model* model_raw = nullptr;
  rc = check(gdro_model_open(o.model.c_str(), &model_raw));
  if (rc != 0) return rc;
  ModelPtr model(model_raw);

  std::string env_text;
  if (!o.environment.empty()) {
    env_text = resolve_json_arg(o.environment, &rc);
    if (rc != 0) return rc;
  }

  char* metrics_raw = nullptr;
  rc = check(gdro_evaluate(model.get(), data.get(), o.split.c_str(),
                           env_text.empty() ? nullptr : env_text.c_str(),
                           &metrics_raw));
  if (rc != 0) return rc;
  StringPtr metrics(metrics_raw);
  std::cout << metrics.get() << "\n";
  return 0;
}

struct SweepOptions {
  std::string config;
  std::string output_dir;  // overrides config and GDRO_OUTPUT_DIR when set
};

int run_sweep(const SweepOptions& o) {
  int rc = 0;
  const std::string config_text = resolve_json_arg(o.config, &rc);
  if (rc != 0) return rc;

  std::string override_dir = o.output_dir;
  if (override_dir.empty()) {
    if (const char* env = std::getenv("GDRO_OUTPUT_DIR")) override_dir = env;
  }
  return check(gdro_experiment_run(
      config_text.c_str(), override_dir.empty() ? nullptr : override_dir.c_str()));
}

struct EnvsOptions {
  std::string data;
  PipelineOptions pipeline;
  std::string environments;  // inline JSON array or a file path
  std::string out;
};

int run_envs(const EnvsOptions& o) {
  int rc = 0;
  DatasetPtr data = open_dataset(o.data, o.pipeline, &rc);
  if (rc != 0) return rc;

  std::string env_text;
  if (!o.environments.empty()) {
    env_text = resolve_json_arg(o.environments, &rc);
    if (rc != 0) return rc;
  }
  rc = check(gdro_environment_histogram_csv(
      data.get(), env_text.empty() ? nullptr : env_text.c_str(), o.pipeline.seed,
      o.out.c_str()));
  if (rc == 0) std::cout << "wrote " << o.out << "\n";
  return rc;
}

int run_verify(std::uint64_t seed) {
  char* report_raw = nullptr;
  int all_pass = 0;
  const int rc = check(gdro_verify(seed, &report_raw, &all_pass));
  if (rc != 0) return rc;
  StringPtr report(report_raw);
  std::cout << report.get();
  return all_pass != 0 ? 0 : 1;
}

struct SynthOptions {
  std::string out;
  std::uint64_t seed = 7;
  double scale = 1.0;
  int missing_rows = 400;
};

int run_synth(const SynthOptions& o) {
  const int rc = check(
      gdro_synthetic_dataset_write(o.out.c_str(), o.seed, o.scale, o.missing_rows));
  if (rc == 0) std::cout << "wrote " << o.out << "\n";
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-robust training with per-sample Wasserstein perturbations"};
  app.set_version_flag("--version", std::string(gdro_version()));
  app.require_subcommand(1);

  int exit_code = 0;

  TrainOptions train_opts;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train one model and report test-pool metrics");
  train_cmd->add_option("--data", train_opts.data, "Adult-schema CSV")->required();
  add_pipeline_options(train_cmd, &train_opts.pipeline);
  train_cmd->add_option("--method", train_opts.method, "erm | dro | gdro | ours")
      ->capture_default_str();
  train_cmd->add_option("--gamma", train_opts.gamma, "Transport penalty weight")
      ->capture_default_str();
  train_cmd->add_option("--eta-theta", train_opts.eta_theta, "Descent step size")
      ->capture_default_str();
  train_cmd->add_option("--eta-q", train_opts.eta_q, "Mirror ascent step size")
      ->capture_default_str();
  train_cmd->add_option("--eta-z", train_opts.eta_z, "Perturbation step size")
      ->capture_default_str();
  train_cmd->add_option("--t-outer", train_opts.t_outer, "Outer iterations")
      ->capture_default_str();
  train_cmd->add_option("--t-rob", train_opts.t_rob, "Inner ascent iterations")
      ->capture_default_str();
  train_cmd->add_option("--model-out", train_opts.model_out,
                        "Write the trained model (JSON) here");
  train_cmd->add_option("--history-out", train_opts.history_out,
                        "Write the per-iteration history (CSV) here");
  train_cmd->callback([&] { exit_code = run_train(train_opts); });

  EvaluateOptions eval_opts;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "Evaluate a saved model on a data split");
  eval_cmd->add_option("--data", eval_opts.data, "Adult-schema CSV")->required();
  add_pipeline_options(eval_cmd, &eval_opts.pipeline);
  eval_cmd->add_option("--model", eval_opts.model, "Model JSON written by train")
      ->required();
  eval_cmd->add_option("--split", eval_opts.split, "train | test_pool")
      ->capture_default_str();
  eval_cmd->add_option("--env", eval_opts.environment,
                       "Environment spec (inline JSON or a file)");
  eval_cmd->callback([&] { exit_code = run_evaluate(eval_opts); });

  SweepOptions sweep_opts;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Run the full method/gamma/seed/environment grid from a config");
  sweep_cmd->add_option("--config", sweep_opts.config,
                        "Experiment config (JSON file or inline)")
      ->required();
  sweep_cmd->add_option("--output-dir", sweep_opts.output_dir,
                        "Overrides the config's output_dir (and GDRO_OUTPUT_DIR)");
  sweep_cmd->callback([&] { exit_code = run_sweep(sweep_opts); });

  EnvsOptions envs_opts;
  CLI::App* envs_cmd = app.add_subcommand(
      "envs", "Write education histograms for the splits and environments");
  envs_cmd->add_option("--data", envs_opts.data, "Adult-schema CSV")->required();
  add_pipeline_options(envs_cmd, &envs_opts.pipeline);
  envs_cmd->add_option("--environments", envs_opts.environments,
                       "Environment list (inline JSON array or a file)");
  envs_cmd->add_option("--out", envs_opts.out, "Output CSV path")->required();
  envs_cmd->callback([&] { exit_code = run_envs(envs_opts); });

  std::uint64_t verify_seed = 42;
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "Run the numerical verification suite (exit 0 iff all pass)");
  verify_cmd->add_option("--seed", verify_seed, "Suite seed")
      ->capture_default_str();
  verify_cmd->callback([&] { exit_code = run_verify(verify_seed); });

  SynthOptions synth_opts;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Write the bundled synthetic Adult-schema dataset");
  synth_cmd->add_option("--out", synth_opts.out, "Output CSV path")->required();
  synth_cmd->add_option("--seed", synth_opts.seed, "Generator seed")
      ->capture_default_str();
  synth_cmd->add_option("--scale", synth_opts.scale, "Block count multiplier")
      ->capture_default_str();
  synth_cmd->add_option("--missing-rows", synth_opts.missing_rows,
                        "Rows with a '?' field (dropped by the pipeline)")
      ->capture_default_str();
  synth_cmd->callback([&] { exit_code = run_synth(synth_opts); });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
