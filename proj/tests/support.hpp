#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gdro/data.hpp"
#include "gdro/rng.hpp"

namespace testsupport {

// Two-group binary problem in the plane. Both groups are separated by the
// same direction u = (1, 0.5)/|(1, 0.5)|, but group 1 has a quarter of
// group 0's margin and sits shifted off-axis, so a pooled fit favors group 0
// and the group-weighted trainers have something to rebalance.
inline gdro::GroupedDataset two_group_toy(int per_class = 15,
                                          std::uint64_t seed = 5,
                                          double noise = 0.3) {
  gdro::GroupedDataset data;
  data.d_in = 2;
  data.group_count = 2;
  gdro::Rng rng(seed);
  const double norm = std::sqrt(1.25);
  const double ux = 1.0 / norm;
  const double uy = 0.5 / norm;
  auto push = [&](double margin, double off_x, double off_y, int y, int g) {
    const double sign = y == 1 ? 1.0 : -1.0;
    data.x.push_back(sign * margin * ux + off_x + noise * rng.normal());
    data.x.push_back(sign * margin * uy + off_y + noise * rng.normal());
    data.y.push_back(y);
    data.group.push_back(g);
  };
  for (int i = 0; i < per_class; ++i) {
    push(1.5, 0.0, 0.0, 1, 0);
    push(1.5, 0.0, 0.0, 0, 0);
    push(0.4, -1.0, 2.0, 1, 1);
    push(0.4, -1.0, 2.0, 0, 1);
  }
  data.rebuild_group_index();
  return data;
}

// Noise-free variant: points sit exactly on their margin lines, spread along
// the boundary, so both groups are linearly separable and training accuracy
// 1.0 is attainable.
inline gdro::GroupedDataset separable_toy(int per_class = 12) {
  gdro::GroupedDataset data;
  data.d_in = 2;
  data.group_count = 2;
  const double norm = std::sqrt(1.25);
  const double ux = 1.0 / norm;
  const double uy = 0.5 / norm;
  // Perpendicular direction, used to spread points along the boundary.
  const double px = -uy;
  const double py = ux;
  auto push = [&](double margin, double slide, int y, int g) {
    const double sign = y == 1 ? 1.0 : -1.0;
    data.x.push_back(sign * margin * ux + slide * px);
    data.x.push_back(sign * margin * uy + slide * py);
    data.y.push_back(y);
    data.group.push_back(g);
  };
  for (int i = 0; i < per_class; ++i) {
    const double slide = 0.35 * (i - per_class / 2);
    push(1.5, slide, 1, 0);
    push(1.5, slide, 0, 0);
    push(0.5, slide + 0.6, 1, 1);
    push(0.5, slide + 0.6, 0, 1);
  }
  data.rebuild_group_index();
  return data;
}

inline std::string write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  return path;
}

// Minimal census-style table: numeric age, categorical education/race, label
// with one trailing-period variant, one '?' row, one row per group bloc.
inline std::string small_adult_csv() {
  return "age,education,race,income\n"
         "25,Bachelors,White,>50K\n"
         "38,HS-grad,White,<=50K\n"
         "28,Bachelors,Black,>50K.\n"
         "44,Masters,Black,<=50K\n"
         "35,HS-grad,Asian-Pac-Islander,>50K\n"
         "52,Masters,Other,<=50K\n"
         "?,Bachelors,White,<=50K\n"
         "29,Doctorate,Amer-Indian-Eskimo,<=50K\n";
}

}  // namespace testsupport
