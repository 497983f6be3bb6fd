#include "gdro/metrics.hpp"

#include <algorithm>
#include <string>

#include "gdro/error.hpp"

namespace gdro {

MetricsReport evaluate(const ModelParams& params, const GroupedDataset& data) {
  MetricsReport report;
  report.per_group_acc.assign(data.group_count, 0.0);
  report.group_counts.assign(data.group_count, 0);

  for (int g = 0; g < data.group_count; ++g) {
    const auto& members = data.group_index[g];
    if (members.empty()) {
      fail(ErrorCode::kEmptyGroup,
           "evaluation set has no rows for group " + std::to_string(g));
    }
    int correct = 0;
    for (int i : members) {
      const int predicted = forward(params, data.row(i)) >= 0.0 ? 1 : 0;
      if (predicted == data.y[i]) ++correct;
    }
    report.group_counts[g] = static_cast<int>(members.size());
    report.per_group_acc[g] =
        static_cast<double>(correct) / static_cast<double>(members.size());
  }

  double sum = 0.0;
  double lo = 1.0, hi = 0.0;
  for (double a : report.per_group_acc) {
    sum += a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  report.average_acc = sum / data.group_count;
  report.worst_acc = lo;
  report.range_acc = hi - lo;
  return report;
}

}  // namespace gdro
