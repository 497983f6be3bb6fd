#include "gdro/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <tuple>

#include "json.hpp"

#include "gdro/error.hpp"

namespace gdro {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& msg) {
  fail(ErrorCode::kParse, msg);
}

double need_number(const json& v, const std::string& path) {
  if (!v.is_number()) parse_fail("config key '" + path + "' must be a number");
  return v.get<double>();
}

int need_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) {
    parse_fail("config key '" + path + "' must be an integer");
  }
  return v.get<int>();
}

std::uint64_t need_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  parse_fail("config key '" + path + "' must be a nonnegative integer");
}

std::string need_string(const json& v, const std::string& path) {
  if (!v.is_string()) parse_fail("config key '" + path + "' must be a string");
  return v.get<std::string>();
}

bool need_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) parse_fail("config key '" + path + "' must be a boolean");
  return v.get<bool>();
}

EnvironmentSpec parse_environment(const json& j, const std::string& path) {
  if (!j.is_object()) parse_fail("config key '" + path + "' must be an object");
  EnvironmentSpec spec;
  for (const auto& [key, value] : j.items()) {
    const std::string p = path + "." + key;
    if (key == "name") {
      spec.name = need_string(value, p);
    } else if (key == "natural") {
      spec.natural = need_bool(value, p);
    } else if (key == "p_high") {
      spec.p_high = need_number(value, p);
    } else if (key == "size") {
      spec.size = need_int(value, p);
    } else if (key == "threshold") {
      spec.threshold = need_number(value, p);
    } else if (key == "seed") {
      spec.seed = need_seed(value, p);
    } else {
      parse_fail("unknown config key '" + p + "'");
    }
  }
  validate(spec);
  return spec;
}

SchemaConfig parse_schema(const json& j, const std::string& path) {
  if (!j.is_object()) parse_fail("config key '" + path + "' must be an object");
  SchemaConfig schema;
  for (const auto& [key, value] : j.items()) {
    const std::string p = path + "." + key;
    if (key == "label") {
      schema.label_column = need_string(value, p);
    } else if (key == "race") {
      schema.race_column = need_string(value, p);
    } else if (key == "education") {
      schema.education_column = need_string(value, p);
    } else {
      parse_fail("unknown config key '" + p + "'");
    }
  }
  return schema;
}

void validate_experiment(const ExperimentConfig& cfg) {
  if (cfg.dataset.empty()) parse_fail("config key 'dataset' is required");
  if (cfg.seeds.empty()) parse_fail("config key 'seeds' must be a nonempty list");
  if (cfg.methods.empty()) parse_fail("config key 'methods' must be nonempty");
  if (cfg.gammas.empty()) parse_fail("config key 'gammas' must be nonempty");
  for (double g : cfg.gammas) {
    if (!(g >= 0.0)) parse_fail("config key 'gammas' entries must be >= 0");
  }
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    parse_fail("config key 'train_fraction' must lie strictly between 0 and 1");
  }
  if (cfg.subsample < 0) parse_fail("config key 'subsample' must be >= 0");
  if (!(cfg.eta_theta > 0.0)) parse_fail("config key 'eta_theta' must be > 0");
  if (!(cfg.eta_q > 0.0)) parse_fail("config key 'eta_q' must be > 0");
  if (!(cfg.eta_z > 0.0)) parse_fail("config key 'eta_z' must be > 0");
  if (cfg.t_outer < 0) parse_fail("config key 't_outer' must be >= 0");
  if (cfg.t_rob < 0) parse_fail("config key 't_rob' must be >= 0");
  if (cfg.output_dir.empty()) parse_fail("config key 'output_dir' must be nonempty");
}

std::string short_number(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

json parse_json_or_fail(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail(std::string(what) + " is not valid JSON: " + e.what());
  }
}

std::uint64_t environment_draw_seed(const EnvironmentSpec& spec,
                                    std::uint64_t run_seed, std::size_t index) {
  // Shared by every method within a run seed, distinct across environments.
  return spec.seed + run_seed * 1000003ull + index;
}

void write_summary_csv(const std::string& path,
                       const std::vector<RunRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open summary file: " + path);
  out << "method,gamma,environment,seeds,avg_mean,avg_std,worst_mean,worst_std,"
         "range_mean,range_std\n";

  using Key = std::tuple<std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const RunRecord*>> by_key;
  for (const auto& rec : records) {
    Key key{rec.method, rec.gamma_label, rec.environment};
    auto [it, inserted] = by_key.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&rec);
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    if (v.size() > 1) {
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(v.size() - 1);  // sample variance
    }
    return std::pair<double, double>{mean, std::sqrt(var)};
  };

  for (const Key& key : order) {
    const auto& group = by_key[key];
    std::vector<double> avg, worst, range;
    for (const RunRecord* r : group) {
      avg.push_back(r->metrics.average_acc);
      worst.push_back(r->metrics.worst_acc);
      range.push_back(r->metrics.range_acc);
    }
    const auto [am, as] = mean_std(avg);
    const auto [wm, ws] = mean_std(worst);
    const auto [rm, rs] = mean_std(range);
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key)
        << ',' << group.size() << ',' << format_double(am) << ','
        << format_double(as) << ',' << format_double(wm) << ','
        << format_double(ws) << ',' << format_double(rm) << ','
        << format_double(rs) << "\n";
  }
  if (!out) fail(ErrorCode::kIo, "failed while writing: " + path);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open history file: " + path);
  const std::size_t n_groups = history.initial_weights.size();
  out << "iteration,duality_gap,grad_norm";
  for (std::size_t g = 0; g < n_groups; ++g) out << ",loss_g" << g;
  for (std::size_t g = 0; g < n_groups; ++g) out << ",q_g" << g;
  out << "\n";
  for (std::size_t t = 0; t < history.records.size(); ++t) {
    const IterationRecord& rec = history.records[t];
    out << (t + 1) << ',' << format_double(rec.duality_gap) << ','
        << format_double(rec.grad_norm);
    for (double l : rec.group_losses) out << ',' << format_double(l);
    for (double w : rec.weights) out << ',' << format_double(w);
    out << "\n";
  }
  if (!out) fail(ErrorCode::kIo, "failed while writing: " + path);
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  const json j = parse_json_or_fail(json_text, "config");
  if (!j.is_object()) parse_fail("config root must be a JSON object");

  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "dataset") {
      cfg.dataset = need_string(value, key);
    } else if (key == "train_fraction") {
      cfg.train_fraction = need_number(value, key);
    } else if (key == "subsample") {
      cfg.subsample = need_int(value, key);
    } else if (key == "seeds") {
      if (!value.is_array()) parse_fail("config key 'seeds' must be an array");
      cfg.seeds.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        cfg.seeds.push_back(
            need_seed(value[i], "seeds[" + std::to_string(i) + "]"));
      }
    } else if (key == "methods") {
      if (!value.is_array()) parse_fail("config key 'methods' must be an array");
      cfg.methods.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        cfg.methods.push_back(method_from_string(
            need_string(value[i], "methods[" + std::to_string(i) + "]")));
      }
    } else if (key == "gammas") {
      if (!value.is_array()) parse_fail("config key 'gammas' must be an array");
      cfg.gammas.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        cfg.gammas.push_back(
            need_number(value[i], "gammas[" + std::to_string(i) + "]"));
      }
    } else if (key == "environments") {
      if (!value.is_array()) {
        parse_fail("config key 'environments' must be an array");
      }
      cfg.environments.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        cfg.environments.push_back(parse_environment(
            value[i], "environments[" + std::to_string(i) + "]"));
      }
    } else if (key == "eta_theta") {
      cfg.eta_theta = need_number(value, key);
    } else if (key == "eta_q") {
      cfg.eta_q = need_number(value, key);
    } else if (key == "eta_z") {
      cfg.eta_z = need_number(value, key);
    } else if (key == "t_outer") {
      cfg.t_outer = need_int(value, key);
    } else if (key == "t_rob") {
      cfg.t_rob = need_int(value, key);
    } else if (key == "output_dir") {
      cfg.output_dir = need_string(value, key);
    } else if (key == "columns") {
      cfg.schema = parse_schema(value, key);
    } else {
      parse_fail("unknown config key '" + key + "'");
    }
  }
  validate_experiment(cfg);
  return cfg;
}

std::string serialize_experiment_config(const ExperimentConfig& cfg) {
  ordered_json j;
  j["dataset"] = cfg.dataset;
  j["train_fraction"] = cfg.train_fraction;
  j["subsample"] = cfg.subsample;
  j["seeds"] = cfg.seeds;
  {
    std::vector<std::string> names;
    for (Method m : cfg.methods) names.push_back(to_string(m));
    j["methods"] = names;
  }
  j["gammas"] = cfg.gammas;
  {
    ordered_json envs = ordered_json::array();
    for (const EnvironmentSpec& spec : cfg.environments) {
      ordered_json e;
      if (!spec.name.empty()) e["name"] = spec.name;
      e["natural"] = spec.natural;
      if (!spec.natural) {
        e["p_high"] = spec.p_high;
        e["size"] = spec.size;
        e["threshold"] = spec.threshold;
        e["seed"] = spec.seed;
      }
      envs.push_back(std::move(e));
    }
    j["environments"] = std::move(envs);
  }
  j["eta_theta"] = cfg.eta_theta;
  j["eta_q"] = cfg.eta_q;
  j["eta_z"] = cfg.eta_z;
  j["t_outer"] = cfg.t_outer;
  j["t_rob"] = cfg.t_rob;
  j["output_dir"] = cfg.output_dir;
  j["columns"] = {{"label", cfg.schema.label_column},
                  {"race", cfg.schema.race_column},
                  {"education", cfg.schema.education_column}};
  return j.dump(2);
}

TrainConfig parse_train_config(const std::string& json_text) {
  const json j = parse_json_or_fail(json_text, "train config");
  if (!j.is_object()) parse_fail("train config root must be a JSON object");

  TrainConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "method") {
      cfg.method = method_from_string(need_string(value, key));
    } else if (key == "gamma") {
      cfg.robust.gamma = need_number(value, key);
    } else if (key == "eta_theta") {
      cfg.eta_theta = need_number(value, key);
    } else if (key == "eta_q") {
      cfg.eta_q = need_number(value, key);
    } else if (key == "eta_z") {
      cfg.robust.eta_z = need_number(value, key);
    } else if (key == "t_outer") {
      cfg.t_outer = need_int(value, key);
    } else if (key == "t_rob") {
      cfg.robust.t_rob = need_int(value, key);
    } else if (key == "seed") {
      cfg.seed = need_seed(value, key);
    } else {
      parse_fail("unknown train config key '" + key + "'");
    }
  }
  validate(cfg);
  return cfg;
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  PipelineConfig cfg;
  if (json_text.empty()) return cfg;
  const json j = parse_json_or_fail(json_text, "pipeline config");
  if (!j.is_object()) parse_fail("pipeline config root must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "train_fraction") {
      cfg.train_fraction = need_number(value, key);
    } else if (key == "seed") {
      cfg.seed = need_seed(value, key);
    } else if (key == "subsample") {
      cfg.subsample = need_int(value, key);
    } else if (key == "columns") {
      cfg.schema = parse_schema(value, key);
    } else {
      parse_fail("unknown pipeline config key '" + key + "'");
    }
  }
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    parse_fail("pipeline key 'train_fraction' must lie strictly between 0 and 1");
  }
  if (cfg.subsample < 0) parse_fail("pipeline key 'subsample' must be >= 0");
  return cfg;
}

EnvironmentSpec parse_environment_spec(const std::string& json_text) {
  const json j = parse_json_or_fail(json_text, "environment");
  return parse_environment(j, "environment");
}

std::vector<EnvironmentSpec> parse_environment_list(const std::string& json_text) {
  const json j = parse_json_or_fail(json_text, "environment list");
  if (!j.is_array()) parse_fail("environment list must be a JSON array");
  std::vector<EnvironmentSpec> specs;
  for (std::size_t i = 0; i < j.size(); ++i) {
    specs.push_back(parse_environment(j[i], "[" + std::to_string(i) + "]"));
  }
  return specs;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  validate_experiment(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(cfg.output_dir) / "history");

  {
    std::ofstream out(fs::path(cfg.output_dir) / "config.json");
    if (!out) fail(ErrorCode::kIo, "cannot write config echo in " + cfg.output_dir);
    out << serialize_experiment_config(cfg) << "\n";
  }

  const RawTable raw = load_csv(cfg.dataset);

  std::vector<EnvironmentSpec> envs = cfg.environments;
  if (envs.empty()) {
    EnvironmentSpec natural;
    natural.natural = true;
    envs.push_back(natural);
  }

  std::ofstream results(fs::path(cfg.output_dir) / "results.csv");
  if (!results) fail(ErrorCode::kIo, "cannot open results.csv in " + cfg.output_dir);
  results << "method,gamma,seed,environment,avg_acc,worst_acc,range_acc";
  for (int g = 0; g < kGroupCount; ++g) results << ",acc_g" << g;
  for (int g = 0; g < kGroupCount; ++g) results << ",count_g" << g;
  results << "\n" << std::flush;

  std::vector<RunRecord> records;

  for (std::uint64_t seed : cfg.seeds) {
    PipelineConfig pipeline;
    pipeline.train_fraction = cfg.train_fraction;
    pipeline.seed = seed;
    pipeline.subsample = cfg.subsample;
    pipeline.schema = cfg.schema;
    const PreparedData prepared = prepare(raw, pipeline);

    // Environments are fixed per seed so every method sees the same rows.
    std::vector<std::pair<std::string, GroupedDataset>> env_data;
    for (std::size_t i = 0; i < envs.size(); ++i) {
      EnvironmentSpec spec = envs[i];
      spec.seed = environment_draw_seed(envs[i], seed, i);
      const auto rows = make_education_environment(prepared.test_pool, spec);
      if (!spec.natural && static_cast<int>(rows.size()) < envs[i].size) {
        std::cerr << "note: environment " << environment_name(envs[i])
                  << " shrunk to " << rows.size() << " rows (seed " << seed
                  << ")\n";
      }
      env_data.emplace_back(environment_name(envs[i]),
                            subset(prepared.test_pool, rows));
    }

    for (Method method : cfg.methods) {
      const bool uses_gamma = method_uses_perturbation(method);
      const std::vector<double> gamma_list =
          uses_gamma ? cfg.gammas : std::vector<double>{0.0};
      for (double gamma : gamma_list) {
        TrainConfig tc;
        tc.method = method;
        tc.t_outer = cfg.t_outer;
        tc.eta_theta = cfg.eta_theta;
        tc.eta_q = cfg.eta_q;
        tc.robust = RobustConfig{gamma, cfg.eta_z, cfg.t_rob};
        tc.seed = seed;

        std::string run_id = to_string(method);
        if (uses_gamma) run_id += "_gamma" + short_number(gamma);
        run_id += "_seed" + std::to_string(seed);

        TrainResult trained;
        try {
          trained = train(prepared.train, tc);
        } catch (const Error& e) {
          fail(e.code(), "run " + run_id + ": " + e.what());
        }
        write_history_csv(
            (fs::path(cfg.output_dir) / "history" / (run_id + ".csv")).string(),
            trained.history);

        const std::string gamma_label = uses_gamma ? format_double(gamma) : "na";
        for (const auto& [env_name, data] : env_data) {
          MetricsReport metrics;
          try {
            metrics = evaluate(trained.params, data);
          } catch (const Error& e) {
            fail(e.code(),
                 "run " + run_id + ", environment " + env_name + ": " + e.what());
          }
          results << to_string(method) << ',' << gamma_label << ',' << seed << ','
                  << env_name << ',' << format_double(metrics.average_acc) << ','
                  << format_double(metrics.worst_acc) << ','
                  << format_double(metrics.range_acc);
          for (double a : metrics.per_group_acc) results << ',' << format_double(a);
          for (int c : metrics.group_counts) results << ',' << c;
          results << "\n" << std::flush;

          records.push_back({to_string(method), gamma_label, seed, env_name,
                             std::move(metrics)});
        }
      }
    }
  }
  if (!results) fail(ErrorCode::kIo, "failed while writing results.csv");

  write_summary_csv((fs::path(cfg.output_dir) / "summary.csv").string(), records);
  return records;
}

void write_environment_histograms(const PreparedData& prepared,
                                  const std::vector<EnvironmentSpec>& environments,
                                  std::uint64_t run_seed,
                                  const std::string& out_path) {
  const int edu = prepared.encoded.education_column;
  if (edu < 0) {
    fail(ErrorCode::kInvalidArgument,
         "dataset has no education column; no histograms to write");
  }

  std::ofstream out(out_path);
  if (!out) fail(ErrorCode::kIo, "cannot open histogram file: " + out_path);
  out << "split,category_code,category,count,proportion\n";

  auto decode = [&](int code) -> std::string {
    const auto& cats = prepared.encoded.categories[edu];
    if (cats.empty()) return short_number(code);  // numeric education column
    if (code < 0 || code >= static_cast<int>(cats.size())) {
      return "code" + std::to_string(code);
    }
    return cats[code];
  };

  auto emit = [&](const std::string& split, const std::vector<int>& encoded_rows) {
    std::map<int, int> counts;
    for (int r : encoded_rows) {
      ++counts[static_cast<int>(std::llround(prepared.encoded.value(r, edu)))];
    }
    const double total = static_cast<double>(encoded_rows.size());
    for (const auto& [code, count] : counts) {
      out << split << ',' << code << ',' << decode(code) << ',' << count << ','
          << format_double(count / total) << "\n";
    }
  };

  emit("train", prepared.split.train_rows);
  emit("test_pool", prepared.split.test_pool_rows);

  for (std::size_t i = 0; i < environments.size(); ++i) {
    EnvironmentSpec spec = environments[i];
    spec.seed = environment_draw_seed(environments[i], run_seed, i);
    const auto pool_rows = make_education_environment(prepared.test_pool, spec);
    std::vector<int> encoded_rows;
    encoded_rows.reserve(pool_rows.size());
    for (int p : pool_rows) {
      encoded_rows.push_back(prepared.split.test_pool_rows[p]);
    }
    emit(environment_name(environments[i]), encoded_rows);
  }
  if (!out) fail(ErrorCode::kIo, "failed while writing: " + out_path);
}

}  // namespace gdro
