#include "gdro/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>

#include "gdro/error.hpp"
#include "gdro/rng.hpp"

namespace gdro {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return false;
  *out = v;
  return true;
}

// Income strings may carry a trailing period (the original test-file split
// uses ">50K." / "<=50K.").
int binarize_label(const std::string& raw) {
  std::string s = raw;
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == ">50K") return 1;
  if (s == "<=50K") return 0;
  fail(ErrorCode::kParse, "label value '" + raw + "' is not >50K or <=50K");
}

int require_column(const RawTable& table, const std::string& name) {
  const int idx = table.column_index(name);
  if (idx < 0) {
    fail(ErrorCode::kParse, "required column '" + name + "' not found in table");
  }
  return idx;
}

}  // namespace

int RawTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

RawTable load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open CSV file: " + path);

  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (table.columns.empty()) {
      table.columns = std::move(cells);
      continue;
    }
    if (cells.size() != table.columns.size()) {
      fail(ErrorCode::kParse,
           "CSV row at line " + std::to_string(line_no) + " has " +
               std::to_string(cells.size()) + " cells, header has " +
               std::to_string(table.columns.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.columns.empty()) {
    fail(ErrorCode::kParse, "CSV file has no header row: " + path);
  }
  return table;
}

RawTable drop_missing_rows(const RawTable& table, const std::string& marker) {
  RawTable out;
  out.columns = table.columns;
  for (const auto& row : table.rows) {
    bool missing = false;
    for (const auto& cell : row) {
      if (cell == marker) {
        missing = true;
        break;
      }
    }
    if (!missing) out.rows.push_back(row);
  }
  return out;
}

std::vector<int> assign_groups(const RawTable& table, const SchemaConfig& schema) {
  const int race_col = require_column(table, schema.race_column);
  const int label_col = require_column(table, schema.label_column);

  std::vector<int> groups;
  groups.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const std::string& race = row[race_col];
    int race_idx = 2;  // Other
    if (race == "White") race_idx = 0;
    else if (race == "Black") race_idx = 1;
    const int y = binarize_label(row[label_col]);
    groups.push_back(race_idx * 2 + (1 - y));
  }
  return groups;
}

EncodedTable encode_table(const RawTable& table, const SchemaConfig& schema) {
  const int label_col = require_column(table, schema.label_column);
  const int n = static_cast<int>(table.rows.size());
  const int n_cols = static_cast<int>(table.columns.size());

  EncodedTable out;
  out.n = n;
  std::vector<int> feature_cols;
  for (int c = 0; c < n_cols; ++c) {
    if (c == label_col) continue;
    feature_cols.push_back(c);
    out.feature_names.push_back(table.columns[c]);
  }
  out.d = static_cast<int>(feature_cols.size());
  out.categories.resize(out.d);
  out.x.assign(static_cast<std::size_t>(n) * out.d, 0.0);
  out.y.resize(n);

  for (int r = 0; r < n; ++r) out.y[r] = binarize_label(table.rows[r][label_col]);

  for (int f = 0; f < out.d; ++f) {
    const int c = feature_cols[f];
    bool numeric = true;
    double parsed = 0.0;
    for (int r = 0; r < n; ++r) {
      if (!parse_number(table.rows[r][c], &parsed)) {
        numeric = false;
        break;
      }
    }
    if (numeric) {
      for (int r = 0; r < n; ++r) {
        parse_number(table.rows[r][c], &parsed);
        out.x[static_cast<std::size_t>(r) * out.d + f] = parsed;
      }
    } else {
      std::map<std::string, int> code_of;
      for (int r = 0; r < n; ++r) {
        const std::string& cell = table.rows[r][c];
        auto it = code_of.find(cell);
        int code;
        if (it == code_of.end()) {
          code = static_cast<int>(out.categories[f].size());
          code_of.emplace(cell, code);
          out.categories[f].push_back(cell);
        } else {
          code = it->second;
        }
        out.x[static_cast<std::size_t>(r) * out.d + f] = static_cast<double>(code);
      }
    }
    if (table.columns[c] == schema.education_column) out.education_column = f;
  }
  return out;
}

FeatureScaler fit_scaler(const EncodedTable& table, std::span<const int> rows) {
  if (rows.empty()) {
    fail(ErrorCode::kInvalidArgument, "fit_scaler needs at least one row");
  }
  FeatureScaler scaler;
  scaler.mean.assign(table.d, 0.0);
  scaler.stddev.assign(table.d, 0.0);
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (int f = 0; f < table.d; ++f) {
    double mean = 0.0;
    for (int r : rows) mean += table.value(r, f);
    mean *= inv_n;
    double var = 0.0;
    for (int r : rows) {
      const double d = table.value(r, f) - mean;
      var += d * d;
    }
    var *= inv_n;
    scaler.mean[f] = mean;
    scaler.stddev[f] = std::sqrt(var);
  }
  return scaler;
}

UniformEducationSplit make_uniform_education_split(const EncodedTable& table,
                                                   double train_fraction,
                                                   std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument,
         "train_fraction must lie strictly between 0 and 1");
  }
  if (table.education_column < 0) {
    fail(ErrorCode::kInvalidArgument,
         "education column is missing; cannot uniformize the training split");
  }
  const int n = table.n;
  const auto n_train =
      static_cast<int>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n) {
    fail(ErrorCode::kInvalidArgument,
         "split leaves an empty train or test side (n=" + std::to_string(n) + ")");
  }

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);

  UniformEducationSplit split;
  split.natural_train_rows.assign(perm.begin(), perm.begin() + n_train);
  split.test_pool_rows.assign(perm.begin() + n_train, perm.end());
  std::sort(split.natural_train_rows.begin(), split.natural_train_rows.end());
  std::sort(split.test_pool_rows.begin(), split.test_pool_rows.end());

  // Category codes are small consecutive integers stored as doubles.
  std::map<int, std::vector<int>> candidate_rows_by_category;
  std::map<int, bool> category_present;
  for (int r = 0; r < n; ++r) {
    const int code =
        static_cast<int>(std::llround(table.value(r, table.education_column)));
    category_present[code] = true;
  }
  for (int r : split.natural_train_rows) {
    const int code =
        static_cast<int>(std::llround(table.value(r, table.education_column)));
    candidate_rows_by_category[code].push_back(r);
  }
  for (const auto& [code, present] : category_present) {
    (void)present;
    if (candidate_rows_by_category.find(code) == candidate_rows_by_category.end()) {
      fail(ErrorCode::kInvalidArgument,
           "education category code " + std::to_string(code) +
               " has no candidate training rows; cannot uniformize");
    }
  }

  const auto n_categories = static_cast<int>(category_present.size());
  const auto target = std::max<std::int64_t>(
      1, std::llround(static_cast<double>(n_train) / n_categories));

  for (const auto& [code, rows] : candidate_rows_by_category) {
    for (std::int64_t k = 0; k < target; ++k) {
      split.train_rows.push_back(
          rows[static_cast<std::size_t>(rng.below(rows.size()))]);
    }
  }
  return split;
}

void GroupedDataset::rebuild_group_index() {
  group_index.assign(group_count, {});
  for (int i = 0; i < n(); ++i) {
    if (group[i] < 0 || group[i] >= group_count) {
      fail(ErrorCode::kInvalidArgument,
           "row " + std::to_string(i) + " has group id " +
               std::to_string(group[i]) + " outside [0, " +
               std::to_string(group_count) + ")");
    }
    group_index[group[i]].push_back(i);
  }
}

GroupedDataset gather(const EncodedTable& table, const FeatureScaler& scaler,
                      std::span<const int> groups_all, std::span<const int> rows,
                      int group_count) {
  if (static_cast<int>(groups_all.size()) != table.n) {
    fail(ErrorCode::kInvalidDimension,
         "group assignment size does not match table row count");
  }
  if (static_cast<int>(scaler.mean.size()) != table.d) {
    fail(ErrorCode::kInvalidDimension, "scaler dimension does not match table");
  }
  GroupedDataset data;
  data.d_in = table.d;
  data.group_count = group_count;
  data.scaler = scaler;
  data.education_column = table.education_column;
  data.feature_names = table.feature_names;
  data.x.reserve(rows.size() * static_cast<std::size_t>(table.d));
  data.y.reserve(rows.size());
  data.group.reserve(rows.size());
  for (int r : rows) {
    for (int f = 0; f < table.d; ++f) {
      const double sd = scaler.stddev[f];
      const double v = table.value(r, f);
      data.x.push_back(sd > 0.0 ? (v - scaler.mean[f]) / sd : 0.0);
    }
    data.y.push_back(table.y[r]);
    data.group.push_back(groups_all[r]);
  }
  data.rebuild_group_index();
  return data;
}

GroupedDataset subset(const GroupedDataset& src, std::span<const int> rows) {
  GroupedDataset data;
  data.d_in = src.d_in;
  data.group_count = src.group_count;
  data.scaler = src.scaler;
  data.education_column = src.education_column;
  data.feature_names = src.feature_names;
  data.x.reserve(rows.size() * static_cast<std::size_t>(src.d_in));
  data.y.reserve(rows.size());
  data.group.reserve(rows.size());
  for (int r : rows) {
    if (r < 0 || r >= src.n()) {
      fail(ErrorCode::kInvalidArgument,
           "subset row index " + std::to_string(r) + " out of range");
    }
    auto row = src.row(r);
    data.x.insert(data.x.end(), row.begin(), row.end());
    data.y.push_back(src.y[r]);
    data.group.push_back(src.group[r]);
  }
  data.rebuild_group_index();
  return data;
}

void validate(const EnvironmentSpec& spec) {
  if (spec.natural) return;
  if (!(spec.p_high >= 0.0 && spec.p_high <= 1.0)) {
    fail(ErrorCode::kInvalidArgument,
         "environment '" + environment_name(spec) + "': p_high must be in [0, 1]");
  }
  if (spec.size < 1) {
    fail(ErrorCode::kInvalidArgument,
         "environment '" + environment_name(spec) + "': size must be >= 1");
  }
}

std::string environment_name(const EnvironmentSpec& spec) {
  if (!spec.name.empty()) return spec.name;
  if (spec.natural) return "natural";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "phigh%g", spec.p_high);
  return buf;
}

std::vector<int> make_education_environment(const GroupedDataset& pool,
                                            const EnvironmentSpec& spec) {
  validate(spec);
  if (spec.natural) {
    std::vector<int> all(pool.n());
    for (int i = 0; i < pool.n(); ++i) all[i] = i;
    return all;
  }
  if (pool.education_column < 0) {
    fail(ErrorCode::kInvalidArgument,
         "test pool has no education column; cannot build environments");
  }

  std::vector<int> high, low;
  for (int i = 0; i < pool.n(); ++i) {
    const double v = pool.row(i)[pool.education_column];
    (v > spec.threshold ? high : low).push_back(i);
  }
  if (high.empty() || low.empty()) {
    fail(ErrorCode::kEmptyGroup,
         "environment '" + environment_name(spec) +
             "': one education bloc of the test pool is empty");
  }

  auto n_high = static_cast<std::int64_t>(std::llround(spec.p_high * spec.size));
  auto n_low = static_cast<std::int64_t>(spec.size) - n_high;
  // Shrink proportionally when a bloc cannot cover its quota.
  double shrink = 1.0;
  if (n_high > static_cast<std::int64_t>(high.size())) {
    shrink = std::min(shrink, static_cast<double>(high.size()) / n_high);
  }
  if (n_low > static_cast<std::int64_t>(low.size())) {
    shrink = std::min(shrink, static_cast<double>(low.size()) / n_low);
  }
  if (shrink < 1.0) {
    n_high = static_cast<std::int64_t>(n_high * shrink);
    n_low = static_cast<std::int64_t>(n_low * shrink);
  }
  if (n_high + n_low < 1) {
    fail(ErrorCode::kInvalidArgument,
         "environment '" + environment_name(spec) + "' shrank to zero rows");
  }

  Rng rng(spec.seed);
  std::vector<int> rows =
      rng.sample_without_replacement(high, static_cast<std::size_t>(n_high));
  std::vector<int> low_rows =
      rng.sample_without_replacement(low, static_cast<std::size_t>(n_low));
  rows.insert(rows.end(), low_rows.begin(), low_rows.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<int> stratified_subsample_rows(const GroupedDataset& data, int target,
                                           std::uint64_t seed) {
  if (target < 1) {
    fail(ErrorCode::kInvalidArgument, "subsample target must be >= 1");
  }
  Rng rng(seed);
  std::vector<int> rows;
  for (int g = 0; g < data.group_count; ++g) {
    const auto& members = data.group_index[g];
    if (members.empty()) continue;
    auto quota = static_cast<std::int64_t>(std::llround(
        static_cast<double>(target) * members.size() / data.n()));
    quota = std::max<std::int64_t>(1, quota);
    quota = std::min<std::int64_t>(quota, static_cast<std::int64_t>(members.size()));
    auto picked =
        rng.sample_without_replacement(members, static_cast<std::size_t>(quota));
    rows.insert(rows.end(), picked.begin(), picked.end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

PreparedData prepare(const RawTable& raw, const PipelineConfig& cfg) {
  PreparedData out;
  const RawTable clean = drop_missing_rows(raw);
  if (clean.rows.empty()) {
    fail(ErrorCode::kInvalidArgument, "no rows remain after dropping missing values");
  }
  out.groups = assign_groups(clean, cfg.schema);
  out.encoded = encode_table(clean, cfg.schema);
  out.split = make_uniform_education_split(out.encoded, cfg.train_fraction, cfg.seed);
  out.scaler = fit_scaler(out.encoded, out.split.natural_train_rows);
  out.train = gather(out.encoded, out.scaler, out.groups, out.split.train_rows);
  out.test_pool = gather(out.encoded, out.scaler, out.groups, out.split.test_pool_rows);
  if (cfg.subsample > 0) {
    const auto rows =
        stratified_subsample_rows(out.train, cfg.subsample, cfg.seed ^ 0x5u);
    out.train = subset(out.train, rows);
  }
  return out;
}

PreparedData prepare_csv(const std::string& path, const PipelineConfig& cfg) {
  return prepare(load_csv(path), cfg);
}

}  // namespace gdro
