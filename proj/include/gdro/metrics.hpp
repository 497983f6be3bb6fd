#pragma once

#include "gdro/data.hpp"
#include "gdro/model.hpp"

namespace gdro {

// Per-group accuracy of the thresholded logit (predict 1 iff logit >= 0).
// average_acc is the unweighted mean over groups, so small groups count as
// much as large ones; worst_acc is the minimum; range_acc is max - min.
struct MetricsReport {
  std::vector<double> per_group_acc;
  std::vector<int> group_counts;
  double average_acc = 0.0;
  double worst_acc = 0.0;
  double range_acc = 0.0;
};

// Errors if any group of `data` is empty, naming the group id.
MetricsReport evaluate(const ModelParams& params, const GroupedDataset& data);

}  // namespace gdro
