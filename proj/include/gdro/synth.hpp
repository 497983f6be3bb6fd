#pragma once

#include <cstdint>
#include <string>

#include "gdro/data.hpp"

namespace gdro {

// Deterministic census-style demo dataset with the Adult column set.
//
// At scale 1.0 the six race-by-income groups have exactly the row counts of
// the reference protocol (White 10485/30301, Black 555/3980, Other 501/1799,
// 47621 rows total after dropping the extra rows that carry '?' markers).
// Features are drawn from income-conditional distributions, so the learning
// problem shows the same structure the protocol depends on: heavy group
// imbalance, an informative education signal, and a natural education
// marginal that differs from the uniformized training one.
//
// The first 16 rows cover the education categories in ascending level order,
// which pins the first-appearance label encoding to the natural ordering.
struct SynthConfig {
  std::uint64_t seed = 7;
  double scale = 1.0;     // multiplies every block count
  int missing_rows = 400; // extra '?'-carrying rows (also scaled)
};

RawTable synthetic_adult_table(const SynthConfig& cfg = {});
void write_synthetic_adult_csv(const std::string& path, const SynthConfig& cfg = {});

}  // namespace gdro
