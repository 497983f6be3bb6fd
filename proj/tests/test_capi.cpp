// Exercises the shared-library C API end to end. This binary deliberately
// includes only gdro/gdro.h from the project, so it doubles as a check that
// the C surface is usable without any C++ headers.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gdro/gdro.h"

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// One small synthetic CSV shared by every test case in this binary. The
// scale leaves every (race, income) group with enough test-pool rows for the
// environment evaluations below.
const char* dataset_path() {
  static const std::string path = [] {
    const std::string p = "capi_dataset.csv";
    REQUIRE(gdro_synthetic_dataset_write(p.c_str(), 7, 0.1, 10) == GDRO_OK);
    return p;
  }();
  return path.c_str();
}

struct DatasetGuard {
  gdro_dataset* handle = nullptr;
  ~DatasetGuard() { gdro_dataset_close(handle); }
};

struct ModelGuard {
  gdro_model* handle = nullptr;
  ~ModelGuard() { gdro_model_close(handle); }
};

struct HistoryGuard {
  gdro_history* handle = nullptr;
  ~HistoryGuard() { gdro_history_close(handle); }
};

struct StringGuard {
  char* value = nullptr;
  ~StringGuard() { gdro_string_free(value); }
};

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version string") {
  CHECK(std::string(gdro_version()) == "1.0.0");
}

TEST_CASE("null arguments are rejected with a message") {
  CHECK(gdro_dataset_open(nullptr, nullptr, nullptr) ==
        GDRO_ERR_INVALID_ARGUMENT);
  gdro_dataset* data = nullptr;
  CHECK(gdro_dataset_open(nullptr, nullptr, &data) ==
        GDRO_ERR_INVALID_ARGUMENT);
  CHECK(data == nullptr);
  CHECK(std::string(gdro_last_error()).find("csv_path") != std::string::npos);

  CHECK(gdro_dataset_info(nullptr, nullptr) == GDRO_ERR_INVALID_ARGUMENT);
  CHECK(gdro_model_open(nullptr, nullptr) == GDRO_ERR_INVALID_ARGUMENT);
  CHECK(gdro_experiment_run(nullptr, nullptr) == GDRO_ERR_INVALID_ARGUMENT);

  // Closing NULL handles is a no-op, not a crash.
  gdro_dataset_close(nullptr);
  gdro_model_close(nullptr);
  gdro_history_close(nullptr);
  gdro_string_free(nullptr);
}

TEST_CASE("dataset open reports pipeline and group structure") {
  DatasetGuard data;
  REQUIRE(gdro_dataset_open(dataset_path(),
                            R"({"seed": 11, "train_fraction": 0.7})",
                            &data.handle) == GDRO_OK);
  REQUIRE(data.handle != nullptr);

  StringGuard info;
  REQUIRE(gdro_dataset_info(data.handle, &info.value) == GDRO_OK);
  const json j = json::parse(info.value);
  CHECK(j.at("d_in").get<int>() == 14);
  CHECK(j.at("n_train").get<int>() > 0);
  CHECK(j.at("n_test_pool").get<int>() > 0);
  CHECK(j.at("train_group_counts").size() == 6);
  CHECK(j.at("test_pool_group_counts").size() == 6);
  CHECK(j.at("feature_names").size() == 14);
  for (const auto& count : j.at("train_group_counts")) {
    CHECK(count.get<int>() > 0);
  }
}

TEST_CASE("dataset open rejects malformed pipeline JSON") {
  gdro_dataset* data = nullptr;
  CHECK(gdro_dataset_open(dataset_path(), R"({"train_fraktion": 0.7})",
                          &data) == GDRO_ERR_PARSE);
  CHECK(data == nullptr);
  CHECK(std::string(gdro_last_error()).find("train_fraktion") !=
        std::string::npos);

  CHECK(gdro_dataset_open("no_such_file.csv", nullptr, &data) == GDRO_ERR_IO);
}

TEST_CASE("train, save, reload and evaluate round trip") {
  DatasetGuard data;
  REQUIRE(gdro_dataset_open(dataset_path(), R"({"seed": 3, "subsample": 120})",
                            &data.handle) == GDRO_OK);

  ModelGuard model;
  HistoryGuard history;
  REQUIRE(gdro_train(data.handle,
                     R"({"method": "gdro", "t_outer": 3, "seed": 3})",
                     &model.handle, &history.handle) == GDRO_OK);
  REQUIRE(model.handle != nullptr);
  REQUIRE(history.handle != nullptr);

  REQUIRE(gdro_history_save_csv(history.handle, "capi_history.csv") == GDRO_OK);
  const std::string csv = slurp("capi_history.csv");
  CHECK(csv.rfind("iteration,duality_gap,grad_norm", 0) == 0);
  CHECK(csv.find("\n3,") != std::string::npos);

  StringGuard before;
  REQUIRE(gdro_evaluate(model.handle, data.handle, "test_pool", nullptr,
                        &before.value) == GDRO_OK);
  const json metrics = json::parse(before.value);
  CHECK(metrics.at("environment") == "test_pool");
  CHECK(metrics.at("per_group_acc").size() == 6);
  CHECK(metrics.at("group_counts").size() == 6);
  CHECK(metrics.at("avg_acc").get<double>() >= 0.0);
  CHECK(metrics.at("avg_acc").get<double>() <= 1.0);

  REQUIRE(gdro_model_save(model.handle, "capi_model.json") == GDRO_OK);
  ModelGuard reloaded;
  REQUIRE(gdro_model_open("capi_model.json", &reloaded.handle) == GDRO_OK);

  StringGuard after;
  REQUIRE(gdro_evaluate(reloaded.handle, data.handle, "test_pool", nullptr,
                        &after.value) == GDRO_OK);
  CHECK(std::string(before.value) == std::string(after.value));

  StringGuard train_split;
  REQUIRE(gdro_evaluate(model.handle, data.handle, "train", nullptr,
                        &train_split.value) == GDRO_OK);
  CHECK(json::parse(train_split.value).at("environment") == "train");
}

TEST_CASE("evaluate with an environment and with bad splits") {
  DatasetGuard data;
  REQUIRE(gdro_dataset_open(dataset_path(), R"({"seed": 5, "subsample": 120})",
                            &data.handle) == GDRO_OK);
  ModelGuard model;
  REQUIRE(gdro_train(data.handle, R"({"method": "erm", "t_outer": 2})",
                     &model.handle, nullptr) == GDRO_OK);

  StringGuard out;
  REQUIRE(gdro_evaluate(model.handle, data.handle, "test_pool",
                        R"({"p_high": 0.3, "size": 500, "seed": 9})",
                        &out.value) == GDRO_OK);
  const json metrics = json::parse(out.value);
  CHECK(metrics.at("environment") == "phigh0.3");
  int total = 0;
  for (const auto& c : metrics.at("group_counts")) total += c.get<int>();
  CHECK(total > 0);
  CHECK(total <= 500);  // a thin bloc may shrink the draw

  StringGuard bad;
  CHECK(gdro_evaluate(model.handle, data.handle, "validation", nullptr,
                      &bad.value) == GDRO_ERR_INVALID_ARGUMENT);
  CHECK(gdro_evaluate(model.handle, data.handle, "train",
                      R"({"p_high": 0.3, "size": 500})",
                      &bad.value) == GDRO_ERR_INVALID_ARGUMENT);
}

TEST_CASE("model open validates the file") {
  {
    std::ofstream out("capi_bad_model.json");
    out << "{\"kind\": \"two_hidden\", \"d_in\": 3, \"values\": [1, 2]}\n";
  }
  gdro_model* model = nullptr;
  CHECK(gdro_model_open("capi_bad_model.json", &model) == GDRO_ERR_PARSE);
  CHECK(model == nullptr);
  CHECK(std::string(gdro_last_error()).find("expected") != std::string::npos);
  CHECK(gdro_model_open("no_such_model.json", &model) == GDRO_ERR_IO);
}

TEST_CASE("training diverges with a numeric status") {
  DatasetGuard data;
  REQUIRE(gdro_dataset_open(dataset_path(), R"({"seed": 5, "subsample": 120})",
                            &data.handle) == GDRO_OK);
  ModelGuard model;
  const gdro_status status = gdro_train(
      data.handle,
      R"({"method": "ours", "gamma": 1e6, "eta_z": 1.0, "t_rob": 30, "t_outer": 1})",
      &model.handle, nullptr);
  CHECK(status == GDRO_ERR_NUMERIC);
  CHECK(model.handle == nullptr);
  CHECK(std::string(gdro_last_error()).find("iteration") != std::string::npos);
}

TEST_CASE("environment histograms through the C API") {
  DatasetGuard data;
  REQUIRE(gdro_dataset_open(dataset_path(), R"({"seed": 5})", &data.handle) ==
          GDRO_OK);
  REQUIRE(gdro_environment_histogram_csv(
              data.handle, R"([{"p_high": 0.7, "size": 50}])", 42,
              "capi_hist.csv") == GDRO_OK);
  const std::string csv = slurp("capi_hist.csv");
  CHECK(csv.rfind("split,category_code,category,count,proportion", 0) == 0);
  CHECK(csv.find("train,") != std::string::npos);
  CHECK(csv.find("test_pool,") != std::string::npos);
  CHECK(csv.find("phigh0.7,") != std::string::npos);
}

TEST_CASE("experiment run from a config string") {
  json config;
  config["dataset"] = dataset_path();
  config["seeds"] = {7};
  config["methods"] = {"erm"};
  config["subsample"] = 100;
  config["t_outer"] = 1;
  config["t_rob"] = 1;
  config["output_dir"] = "capi_experiment";
  REQUIRE(gdro_experiment_run(config.dump().c_str(), nullptr) == GDRO_OK);
  const std::string results = slurp("capi_experiment/results.csv");
  CHECK(results.find("erm,na,7,natural,") != std::string::npos);

  // The override redirects output without editing the config.
  REQUIRE(gdro_experiment_run(config.dump().c_str(), "capi_experiment_b") ==
          GDRO_OK);
  CHECK(slurp("capi_experiment_b/results.csv") == results);

  config["dataset"] = "missing.csv";
  CHECK(gdro_experiment_run(config.dump().c_str(), nullptr) == GDRO_ERR_IO);
  CHECK(gdro_experiment_run("{not json", nullptr) == GDRO_ERR_PARSE);
}

TEST_CASE("verification suite through the C API") {
  StringGuard report;
  int all_pass = 0;
  REQUIRE(gdro_verify(42, &report.value, &all_pass) == GDRO_OK);
  CHECK(all_pass == 1);
  const std::string text = report.value;
  CHECK(text.find("[PASS]") != std::string::npos);
  CHECK(text.find("[FAIL]") == std::string::npos);
  CHECK(text.find("12/12 checks passed") != std::string::npos);

  // Both outputs are optional.
  REQUIRE(gdro_verify(42, nullptr, nullptr) == GDRO_OK);
}

}  // TEST_SUITE
