#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gdro {

// Raw CSV contents: a header row plus string cells, whitespace-trimmed.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 if absent
};

// Reads a comma-separated file with a mandatory header row. Cells are trimmed
// of surrounding spaces/tabs, blank lines are skipped, and a row whose cell
// count differs from the header raises a parse error naming the line number.
// Quoting is not supported (the census schema does not use it).
RawTable load_csv(const std::string& path);

// Removes every row containing the missing-value marker in any cell.
RawTable drop_missing_rows(const RawTable& table, const std::string& marker = "?");

// Column-name bindings for the tabular protocol; defaults match the Adult
// census schema. Only that schema is validated end to end.
struct SchemaConfig {
  std::string label_column = "income";
  std::string race_column = "race";
  std::string education_column = "education";
};

// Group ids 0..5 from the race x income crossing:
//   0 White/>50K   1 White/<=50K   2 Black/>50K
//   3 Black/<=50K  4 Other/>50K    5 Other/<=50K
// Race strings other than White/Black fall into the Other bloc. Labels accept
// an optional trailing period (the UCI test file convention).
inline constexpr int kGroupCount = 6;
std::vector<int> assign_groups(const RawTable& table, const SchemaConfig& schema = {});

// Feature matrix before standardization. Categorical columns (any column with
// a cell that does not parse as a number) are label-encoded by first
// appearance, scanning rows top to bottom; numeric columns are parsed as-is.
// The label column is binarized (>50K -> 1) and excluded from the features.
struct EncodedTable {
  std::vector<std::string> feature_names;
  // One entry per feature: the category strings in code order for categorical
  // columns, empty for numeric columns. decode(column, code) is injective by
  // construction.
  std::vector<std::vector<std::string>> categories;
  std::vector<double> x;  // row-major n x d
  std::vector<int> y;
  int n = 0;
  int d = 0;
  int education_column = -1;  // index into features, -1 if the column is absent

  double value(int row, int col) const {
    return x[static_cast<std::size_t>(row) * d + col];
  }
};

EncodedTable encode_table(const RawTable& table, const SchemaConfig& schema = {});

// Per-feature mean and population standard deviation (divide by N).
// Applying the scaler maps v to (v - mean) / stddev, or to 0 where the fitted
// standard deviation is zero.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> stddev;
};

FeatureScaler fit_scaler(const EncodedTable& table, std::span<const int> rows);

// Seeded holdout plus training-marginal uniformization.
//
// Rows are split train_fraction / (1 - train_fraction) uniformly at random.
// The training side is then resampled with replacement, per education
// category, to a common per-category target of round(|candidates| / C), so
// its education histogram is exactly uniform over all C categories of the
// table. The test pool is left untouched. Errors if any education category
// has no candidate training row.
struct UniformEducationSplit {
  std::vector<int> train_rows;          // resampled; uniform education marginal
  std::vector<int> natural_train_rows;  // pre-resampling candidates (scaler fit set)
  std::vector<int> test_pool_rows;
};

UniformEducationSplit make_uniform_education_split(const EncodedTable& table,
                                                   double train_fraction,
                                                   std::uint64_t seed);

// Standardized, group-annotated slice of an encoded table. This is the object
// the trainer and metrics consume.
struct GroupedDataset {
  int d_in = 0;
  int group_count = 0;
  std::vector<double> x;  // row-major n x d_in, standardized
  std::vector<int> y;
  std::vector<int> group;
  std::vector<std::vector<int>> group_index;  // rows per group id
  FeatureScaler scaler;
  int education_column = -1;
  std::vector<std::string> feature_names;

  int n() const { return static_cast<int>(y.size()); }
  std::span<const double> row(int i) const {
    return {x.data() + static_cast<std::size_t>(i) * d_in,
            static_cast<std::size_t>(d_in)};
  }
  void rebuild_group_index();
};

// Materializes the given rows, standardizing with the supplied scaler. The
// scaler travels with the result so any further subset sees the same affine
// map (never a refit).
GroupedDataset gather(const EncodedTable& table, const FeatureScaler& scaler,
                      std::span<const int> groups_all, std::span<const int> rows,
                      int group_count = kGroupCount);

// Row subset of an existing dataset (group ids and scaler preserved).
GroupedDataset subset(const GroupedDataset& data, std::span<const int> rows);

// A covariate-shifted test environment over the standardized education value.
// Rows with value > threshold form the high bloc; a fraction p_high of the
// environment is drawn from it (without replacement), the rest from the low
// bloc. If a bloc cannot supply its quota the whole environment is shrunk
// proportionally; an empty bloc is an error.
struct EnvironmentSpec {
  std::string name;        // defaults to "natural" or "phigh<value>"
  bool natural = false;    // true: the whole test pool, no resampling
  double p_high = 0.5;     // in [0, 1]
  int size = 2000;         // >= 1
  double threshold = 0.5;  // on the standardized education value
  std::uint64_t seed = 0;
};

void validate(const EnvironmentSpec& spec);
std::string environment_name(const EnvironmentSpec& spec);

// Returns row indices into `pool`. Deterministic for a fixed (pool, spec).
std::vector<int> make_education_environment(const GroupedDataset& pool,
                                            const EnvironmentSpec& spec);

// Stratified-by-group subsample of approximately `target` rows (per-group
// quota round(target * |g| / n), at least 1, capped at the group size; drawn
// without replacement). Every group stays represented.
std::vector<int> stratified_subsample_rows(const GroupedDataset& data, int target,
                                           std::uint64_t seed);

// End-to-end pipeline: drop missing rows, encode, split + uniformize, fit the
// scaler on the natural training rows, standardize, and optionally subsample
// the training split.
struct PipelineConfig {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
  int subsample = 0;  // 0 = disabled
  SchemaConfig schema;
};

struct PreparedData {
  GroupedDataset train;
  GroupedDataset test_pool;
  EncodedTable encoded;      // post-drop table, for histograms/diagnostics
  std::vector<int> groups;   // group id per encoded row
  UniformEducationSplit split;
  FeatureScaler scaler;
};

PreparedData prepare(const RawTable& raw, const PipelineConfig& cfg);
PreparedData prepare_csv(const std::string& path, const PipelineConfig& cfg);

}  // namespace gdro
