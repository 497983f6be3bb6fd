#include "gdro/gdro.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gdro/data.hpp"
#include "gdro/error.hpp"
#include "gdro/experiment.hpp"
#include "gdro/metrics.hpp"
#include "gdro/model.hpp"
#include "gdro/synth.hpp"
#include "gdro/trainer.hpp"
#include "gdro/verify.hpp"

struct gdro_dataset {
  gdro::PreparedData prepared;
};

struct gdro_model {
  gdro::ModelParams params;
};

struct gdro_history {
  gdro::TrainHistory history;
};

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

thread_local std::string t_last_error;

gdro_status status_from(gdro::ErrorCode code) {
  switch (code) {
    case gdro::ErrorCode::kInvalidArgument:
    case gdro::ErrorCode::kInvalidDimension:
      return GDRO_ERR_INVALID_ARGUMENT;
    case gdro::ErrorCode::kIo:
      return GDRO_ERR_IO;
    case gdro::ErrorCode::kParse:
      return GDRO_ERR_PARSE;
    case gdro::ErrorCode::kNumericDivergence:
      return GDRO_ERR_NUMERIC;
    case gdro::ErrorCode::kEmptyGroup:
      return GDRO_ERR_EMPTY_GROUP;
  }
  return GDRO_ERR_INTERNAL;
}

template <typename Fn>
gdro_status guarded(Fn&& fn) {
  try {
    fn();
    return GDRO_OK;
  } catch (const gdro::Error& e) {
    t_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return GDRO_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return GDRO_ERR_INTERNAL;
  }
}

gdro_status invalid(const char* message) {
  t_last_error = message;
  return GDRO_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string kind_to_string(gdro::ModelKind kind) {
  return kind == gdro::ModelKind::kLinear ? "linear" : "two_hidden";
}

gdro::ModelKind kind_from_string(const std::string& name) {
  if (name == "linear") return gdro::ModelKind::kLinear;
  if (name == "two_hidden") return gdro::ModelKind::kTwoHidden;
  gdro::fail(gdro::ErrorCode::kParse, "unknown model kind: " + name);
}

std::vector<int> group_counts(const gdro::GroupedDataset& data) {
  std::vector<int> counts;
  counts.reserve(data.group_index.size());
  for (const auto& rows : data.group_index) {
    counts.push_back(static_cast<int>(rows.size()));
  }
  return counts;
}

ordered_json metrics_to_json(const std::string& environment,
                             const gdro::MetricsReport& metrics) {
  ordered_json j;
  j["environment"] = environment;
  j["avg_acc"] = metrics.average_acc;
  j["worst_acc"] = metrics.worst_acc;
  j["range_acc"] = metrics.range_acc;
  j["per_group_acc"] = metrics.per_group_acc;
  j["group_counts"] = metrics.group_counts;
  return j;
}

}  // namespace

extern "C" {

const char* gdro_version(void) { return "1.0.0"; }

const char* gdro_last_error(void) { return t_last_error.c_str(); }

void gdro_string_free(char* s) { std::free(s); }

gdro_status gdro_dataset_open(const char* csv_path, const char* pipeline_json,
                              gdro_dataset** out) {
  if (out == nullptr) return invalid("gdro_dataset_open: out is NULL");
  *out = nullptr;
  if (csv_path == nullptr) return invalid("gdro_dataset_open: csv_path is NULL");
  return guarded([&] {
    const gdro::PipelineConfig cfg = gdro::parse_pipeline_config(
        pipeline_json == nullptr ? std::string() : std::string(pipeline_json));
    auto handle = std::make_unique<gdro_dataset>();
    handle->prepared = gdro::prepare_csv(csv_path, cfg);
    *out = handle.release();
  });
}

gdro_status gdro_dataset_info(const gdro_dataset* data, char** json_out) {
  if (json_out == nullptr) return invalid("gdro_dataset_info: json_out is NULL");
  *json_out = nullptr;
  if (data == nullptr) return invalid("gdro_dataset_info: data is NULL");
  return guarded([&] {
    ordered_json j;
    j["d_in"] = data->prepared.train.d_in;
    j["n_train"] = data->prepared.train.n();
    j["n_test_pool"] = data->prepared.test_pool.n();
    j["train_group_counts"] = group_counts(data->prepared.train);
    j["test_pool_group_counts"] = group_counts(data->prepared.test_pool);
    j["feature_names"] = data->prepared.train.feature_names;
    *json_out = dup_string(j.dump(2));
  });
}

void gdro_dataset_close(gdro_dataset* data) { delete data; }

gdro_status gdro_train(const gdro_dataset* data, const char* train_json,
                       gdro_model** model_out, gdro_history** history_out) {
  if (model_out == nullptr) return invalid("gdro_train: model_out is NULL");
  *model_out = nullptr;
  if (history_out != nullptr) *history_out = nullptr;
  if (data == nullptr) return invalid("gdro_train: data is NULL");
  return guarded([&] {
    const gdro::TrainConfig cfg = gdro::parse_train_config(
        train_json == nullptr || *train_json == '\0' ? "{}" : train_json);
    gdro::TrainResult result = gdro::train(data->prepared.train, cfg);
    auto model = std::make_unique<gdro_model>();
    model->params = std::move(result.params);
    if (history_out != nullptr) {
      auto history = std::make_unique<gdro_history>();
      history->history = std::move(result.history);
      *history_out = history.release();
    }
    *model_out = model.release();
  });
}

gdro_status gdro_model_save(const gdro_model* model, const char* path) {
  if (model == nullptr) return invalid("gdro_model_save: model is NULL");
  if (path == nullptr) return invalid("gdro_model_save: path is NULL");
  return guarded([&] {
    ordered_json j;
    j["kind"] = kind_to_string(model->params.kind);
    j["d_in"] = model->params.d_in;
    j["values"] = model->params.values;
    std::ofstream out(path);
    if (!out) gdro::fail(gdro::ErrorCode::kIo, std::string("cannot open: ") + path);
    out << j.dump(2) << "\n";
    if (!out) {
      gdro::fail(gdro::ErrorCode::kIo, std::string("failed while writing: ") + path);
    }
  });
}

gdro_status gdro_model_open(const char* path, gdro_model** out) {
  if (out == nullptr) return invalid("gdro_model_open: out is NULL");
  *out = nullptr;
  if (path == nullptr) return invalid("gdro_model_open: path is NULL");
  return guarded([&] {
    std::ifstream in(path);
    if (!in) gdro::fail(gdro::ErrorCode::kIo, std::string("cannot open: ") + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    json j;
    try {
      j = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
      gdro::fail(gdro::ErrorCode::kParse,
                 std::string("model file is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("kind") || !j.contains("d_in") ||
        !j.contains("values")) {
      gdro::fail(gdro::ErrorCode::kParse,
                 "model file must contain kind, d_in and values");
    }
    gdro::ModelParams params;
    params.kind = kind_from_string(j["kind"].get<std::string>());
    params.d_in = j["d_in"].get<int>();
    params.values = j["values"].get<std::vector<double>>();
    const std::size_t expected = gdro::param_count(params.kind, params.d_in);
    if (params.values.size() != expected) {
      gdro::fail(gdro::ErrorCode::kParse,
                 "model file has " + std::to_string(params.values.size()) +
                     " values, expected " + std::to_string(expected));
    }
    auto handle = std::make_unique<gdro_model>();
    handle->params = std::move(params);
    *out = handle.release();
  });
}

void gdro_model_close(gdro_model* model) { delete model; }

gdro_status gdro_evaluate(const gdro_model* model, const gdro_dataset* data,
                          const char* split, const char* environment_json,
                          char** json_out) {
  if (json_out == nullptr) return invalid("gdro_evaluate: json_out is NULL");
  *json_out = nullptr;
  if (model == nullptr) return invalid("gdro_evaluate: model is NULL");
  if (data == nullptr) return invalid("gdro_evaluate: data is NULL");
  const std::string split_name = split == nullptr ? "test_pool" : split;
  const bool has_env = environment_json != nullptr && *environment_json != '\0';
  if (split_name != "train" && split_name != "test_pool") {
    return invalid("gdro_evaluate: split must be \"train\" or \"test_pool\"");
  }
  if (split_name == "train" && has_env) {
    return invalid("gdro_evaluate: environments only apply to the test_pool split");
  }
  return guarded([&] {
    const gdro::GroupedDataset& base = split_name == "train"
                                           ? data->prepared.train
                                           : data->prepared.test_pool;
    std::string env_name = split_name;
    gdro::MetricsReport metrics;
    if (has_env) {
      const gdro::EnvironmentSpec spec =
          gdro::parse_environment_spec(environment_json);
      const auto rows = gdro::make_education_environment(base, spec);
      metrics = gdro::evaluate(model->params, gdro::subset(base, rows));
      env_name = gdro::environment_name(spec);
    } else {
      metrics = gdro::evaluate(model->params, base);
    }
    *json_out = dup_string(metrics_to_json(env_name, metrics).dump(2));
  });
}

gdro_status gdro_history_save_csv(const gdro_history* history, const char* path) {
  if (history == nullptr) return invalid("gdro_history_save_csv: history is NULL");
  if (path == nullptr) return invalid("gdro_history_save_csv: path is NULL");
  return guarded([&] { gdro::write_history_csv(path, history->history); });
}

void gdro_history_close(gdro_history* history) { delete history; }

gdro_status gdro_environment_histogram_csv(const gdro_dataset* data,
                                           const char* environments_json,
                                           uint64_t run_seed,
                                           const char* out_path) {
  if (data == nullptr) return invalid("gdro_environment_histogram_csv: data is NULL");
  if (out_path == nullptr) {
    return invalid("gdro_environment_histogram_csv: out_path is NULL");
  }
  return guarded([&] {
    std::vector<gdro::EnvironmentSpec> specs;
    if (environments_json != nullptr && *environments_json != '\0') {
      specs = gdro::parse_environment_list(environments_json);
    }
    gdro::write_environment_histograms(data->prepared, specs, run_seed, out_path);
  });
}

gdro_status gdro_experiment_run(const char* config_json,
                                const char* output_dir_override) {
  if (config_json == nullptr) {
    return invalid("gdro_experiment_run: config_json is NULL");
  }
  return guarded([&] {
    gdro::ExperimentConfig cfg = gdro::parse_experiment_config(config_json);
    if (output_dir_override != nullptr && *output_dir_override != '\0') {
      cfg.output_dir = output_dir_override;
    }
    gdro::run_experiment(cfg);
  });
}

gdro_status gdro_verify(uint64_t seed, char** report_out, int* all_pass) {
  if (report_out != nullptr) *report_out = nullptr;
  if (all_pass != nullptr) *all_pass = 0;
  return guarded([&] {
    const std::vector<gdro::OracleReport> reports =
        gdro::run_verification_suite(seed);
    int passed = 0;
    std::string text;
    for (const gdro::OracleReport& report : reports) {
      if (report.pass) ++passed;
      text += gdro::format_report_line(report);
      text += "\n";
    }
    text += "verification: " + std::to_string(passed) + "/" +
            std::to_string(reports.size()) + " checks passed\n";
    if (all_pass != nullptr) {
      *all_pass = passed == static_cast<int>(reports.size()) ? 1 : 0;
    }
    if (report_out != nullptr) *report_out = dup_string(text);
  });
}

gdro_status gdro_synthetic_dataset_write(const char* path, uint64_t seed,
                                         double scale, int missing_rows) {
  if (path == nullptr) return invalid("gdro_synthetic_dataset_write: path is NULL");
  return guarded([&] {
    gdro::SynthConfig cfg;
    cfg.seed = seed;
    cfg.scale = scale;
    cfg.missing_rows = missing_rows;
    gdro::write_synthetic_adult_csv(path, cfg);
  });
}

}  // extern "C"
