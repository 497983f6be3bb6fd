#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "gdro/error.hpp"
#include "gdro/experiment.hpp"
#include "gdro/synth.hpp"

using namespace gdro;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

// A small synthetic dataset shared by the end-to-end cases.
const std::string& tiny_dataset() {
  static const std::string path = [] {
    SynthConfig cfg;
    cfg.scale = 0.06;
    cfg.missing_rows = 10;
    write_synthetic_adult_csv("experiment_tiny.csv", cfg);
    return std::string("experiment_tiny.csv");
  }();
  return path;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("format_double is a lossless decimal rendering") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-2.5) == "-2.5");
  for (double v : {1e-4, 3.14159, 0.7310585786300049, 123456.789}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("minimal config gets the documented defaults") {
  const ExperimentConfig cfg =
      parse_experiment_config(R"({"dataset": "d.csv", "seeds": [42]})");
  CHECK(cfg.dataset == "d.csv");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{42});
  CHECK(cfg.methods == std::vector<Method>{Method::kErm, Method::kDro,
                                           Method::kGdro, Method::kOurs});
  CHECK(cfg.gammas == std::vector<double>{1e-4});
  CHECK(cfg.train_fraction == 0.7);
  CHECK(cfg.eta_theta == 0.1);
  CHECK(cfg.eta_q == 0.1);
  CHECK(cfg.eta_z == 0.05);
  CHECK(cfg.t_outer == 200);
  CHECK(cfg.t_rob == 100);
  CHECK(cfg.environments.empty());
  CHECK(cfg.output_dir == "results");
}

TEST_CASE("unknown keys are rejected with their path") {
  try {
    parse_experiment_config(R"({"dataset": "d.csv", "seeds": [1], "gama": []})");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("gama") != std::string::npos);
  }

  try {
    parse_experiment_config(
        R"({"dataset": "d.csv", "seeds": [1],
            "environments": [{"p_high": 0.9}, {"p_hi": 0.5}]})");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("environments[1].p_hi") != std::string::npos);
  }
}

TEST_CASE("validation names the offending key") {
  auto expect_mentions = [](const std::string& json, const std::string& key) {
    try {
      parse_experiment_config(json);
      CHECK(false);
    } catch (const Error& e) {
      CHECK_MESSAGE(std::string(e.what()).find(key) != std::string::npos, e.what());
    }
  };
  expect_mentions(R"({"dataset": "d.csv", "seeds": []})", "seeds");
  expect_mentions(R"({"seeds": [1]})", "dataset");
  expect_mentions(R"({"dataset": "d", "seeds": [1], "eta_theta": -0.1})",
                  "eta_theta");
  expect_mentions(R"({"dataset": "d", "seeds": [1], "train_fraction": 1.5})",
                  "train_fraction");
  expect_mentions(R"({"dataset": "d", "seeds": [1], "gammas": [-1]})", "gammas");
  expect_mentions(R"({"dataset": "d", "seeds": [1], "t_outer": -3})", "t_outer");
}

TEST_CASE("gamma lists survive a parse, serialize, parse round trip") {
  const std::string json = R"({
    "dataset": "d.csv", "seeds": [42, 18],
    "gammas": [1e-4, 1e-3, 1e-2, 1e-1, 1, 2, 3, 4, 5, 6, 7, 8],
    "environments": [{"natural": true}, {"p_high": 0.9, "size": 500}]
  })";
  const ExperimentConfig a = parse_experiment_config(json);
  const ExperimentConfig b = parse_experiment_config(serialize_experiment_config(a));
  CHECK(a.gammas == b.gammas);
  CHECK(a.seeds == b.seeds);
  CHECK(a.methods == b.methods);
  CHECK(a.train_fraction == b.train_fraction);
  REQUIRE(b.environments.size() == 2);
  CHECK(b.environments[0].natural);
  CHECK(b.environments[1].p_high == 0.9);
  CHECK(b.environments[1].size == 500);
  // A second round trip is bit-stable.
  CHECK(serialize_experiment_config(a) ==
        serialize_experiment_config(b));
}

TEST_CASE("train config parsing covers every key and rejects strays") {
  const TrainConfig cfg = parse_train_config(R"({
    "method": "dro", "gamma": 0.25, "eta_theta": 0.2, "eta_q": 0.3,
    "eta_z": 0.01, "t_outer": 7, "t_rob": 9, "seed": 5
  })");
  CHECK(cfg.method == Method::kDro);
  CHECK(cfg.robust.gamma == 0.25);
  CHECK(cfg.eta_theta == 0.2);
  CHECK(cfg.eta_q == 0.3);
  CHECK(cfg.robust.eta_z == 0.01);
  CHECK(cfg.t_outer == 7);
  CHECK(cfg.robust.t_rob == 9);
  CHECK(cfg.seed == 5);

  CHECK_THROWS_AS(parse_train_config(R"({"metod": "erm"})"), Error);
  CHECK_THROWS_AS(parse_train_config(R"({"method": "sgd"})"), Error);
  CHECK_THROWS_AS(parse_train_config("not json"), Error);
}

TEST_CASE("pipeline config parsing") {
  const PipelineConfig defaults = parse_pipeline_config("");
  CHECK(defaults.train_fraction == 0.7);
  CHECK(defaults.seed == 42);
  CHECK(defaults.subsample == 0);

  const PipelineConfig cfg = parse_pipeline_config(
      R"({"train_fraction": 0.6, "seed": 9, "subsample": 100,
          "columns": {"label": "y", "race": "r", "education": "e"}})");
  CHECK(cfg.train_fraction == 0.6);
  CHECK(cfg.seed == 9);
  CHECK(cfg.subsample == 100);
  CHECK(cfg.schema.label_column == "y");
  CHECK(cfg.schema.education_column == "e");

  CHECK_THROWS_AS(parse_pipeline_config(R"({"subsample": -1})"), Error);
  CHECK_THROWS_AS(parse_pipeline_config(R"({"fraction": 0.5})"), Error);
}

TEST_CASE("environment list parsing names the failing entry") {
  const std::vector<EnvironmentSpec> specs = parse_environment_list(
      R"([{"natural": true}, {"p_high": 0.1, "size": 50, "seed": 3}])");
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].natural);
  CHECK(specs[1].p_high == 0.1);
  CHECK(specs[1].seed == 3);

  try {
    parse_environment_list(R"([{"natural": true}, {"sice": 10}])");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("[1].sice") != std::string::npos);
  }
}

TEST_CASE("run_experiment writes the documented files deterministically") {
  namespace fs = std::filesystem;
  const std::string out = "experiment_out";
  fs::remove_all(out);

  ExperimentConfig cfg;
  cfg.dataset = tiny_dataset();
  cfg.seeds = {1, 2};
  cfg.gammas = {0.001};
  cfg.subsample = 120;
  cfg.t_outer = 3;
  cfg.t_rob = 2;
  cfg.output_dir = out;
  {
    EnvironmentSpec natural;
    natural.natural = true;
    EnvironmentSpec shifted;
    shifted.p_high = 0.5;
    shifted.size = 400;
    cfg.environments = {natural, shifted};
  }

  const std::vector<RunRecord> records = run_experiment(cfg);
  // 4 methods x 2 seeds x 2 environments, one gamma.
  CHECK(records.size() == 16);
  CHECK(records[0].method == "erm");
  CHECK(records[0].gamma_label == "na");
  CHECK(records[0].environment == "natural");
  CHECK(records[1].environment == "phigh0.5");

  const std::string results = slurp(fs::path(out) / "results.csv");
  CHECK(count_lines(results) == 17);  // header + 16 rows
  CHECK(results.rfind("method,gamma,seed,environment,avg_acc,worst_acc,"
                      "range_acc,acc_g0",
                      0) == 0);

  const std::string summary = slurp(fs::path(out) / "summary.csv");
  CHECK(count_lines(summary) == 9);  // header + 4 methods x 2 environments

  // History files: one per (method, gamma, seed).
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(fs::path(out) / "history")) {
    names.insert(entry.path().filename().string());
  }
  CHECK(names.size() == 8);
  CHECK(names.count("erm_seed1.csv") == 1);
  CHECK(names.count("ours_gamma0.001_seed2.csv") == 1);

  // The echoed config reparses to the same settings.
  const ExperimentConfig echoed =
      parse_experiment_config(slurp(fs::path(out) / "config.json"));
  CHECK(echoed.seeds == cfg.seeds);
  CHECK(echoed.gammas == cfg.gammas);
  CHECK(echoed.subsample == cfg.subsample);

  // Rerunning the identical config rewrites byte-identical outputs.
  const std::string summary_before = summary;
  const std::string history_before =
      slurp(fs::path(out) / "history" / "ours_gamma0.001_seed2.csv");
  run_experiment(cfg);
  CHECK(slurp(fs::path(out) / "results.csv") == results);
  CHECK(slurp(fs::path(out) / "summary.csv") == summary_before);
  CHECK(slurp(fs::path(out) / "history" / "ours_gamma0.001_seed2.csv") ==
        history_before);
}

TEST_CASE("run errors carry the run id") {
  ExperimentConfig cfg;
  cfg.dataset = "missing_file.csv";
  cfg.seeds = {1};
  cfg.output_dir = "experiment_err";
  CHECK_THROWS_AS(run_experiment(cfg), Error);
}

TEST_CASE("environment histograms cover every split with unit proportions") {
  namespace fs = std::filesystem;
  const RawTable raw = load_csv(tiny_dataset());
  PipelineConfig pipe;
  pipe.seed = 3;
  const PreparedData prepared = prepare(raw, pipe);

  EnvironmentSpec shifted;
  shifted.p_high = 0.9;
  shifted.size = 60;
  write_environment_histograms(prepared, {shifted}, 3, "experiment_hist.csv");

  const std::string text = slurp("experiment_hist.csv");
  CHECK(text.rfind("split,category_code,category,count,proportion", 0) == 0);
  CHECK(text.find("\ntrain,") != std::string::npos);
  CHECK(text.find("\ntest_pool,") != std::string::npos);
  CHECK(text.find("\nphigh0.9,") != std::string::npos);

  // The uniformized training split has one shared count for all categories.
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  std::set<std::string> train_counts;
  while (std::getline(lines, line)) {
    if (line.rfind("train,", 0) != 0) continue;
    std::size_t from = 0;
    std::vector<std::string> cells;
    while (true) {
      const std::size_t comma = line.find(',', from);
      cells.push_back(line.substr(from, comma - from));
      if (comma == std::string::npos) break;
      from = comma + 1;
    }
    REQUIRE(cells.size() == 5);
    train_counts.insert(cells[3]);
  }
  CHECK(train_counts.size() == 1);
}

}  // TEST_SUITE("experiment")
