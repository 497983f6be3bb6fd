#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gdro/error.hpp"

namespace gdro {

// Deterministic random source used everywhere the library needs randomness
// (parameter init, splits, resampling, environment draws, synthetic data).
//
// Built on std::mt19937_64, whose output sequence is fixed by the C++
// standard, with explicit value transforms instead of std::*_distribution
// (those are implementation-defined). Identical seeds therefore give
// identical draws on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. The second variate is discarded to keep
  // the generator stateless between calls.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) fail(ErrorCode::kInvalidArgument, "Rng::below requires n > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  // Draw k distinct elements from v (k <= v.size()) via partial shuffle.
  template <typename T>
  std::vector<T> sample_without_replacement(std::vector<T> v, std::size_t k) {
    if (k > v.size()) {
      fail(ErrorCode::kInvalidArgument,
           "sample_without_replacement: k exceeds population size");
    }
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(v.size() - i));
      std::swap(v[i], v[j]);
    }
    v.resize(k);
    return v;
  }

  // Index draw from an unnormalized weight vector.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) {
      fail(ErrorCode::kInvalidArgument, "categorical: weights must sum > 0");
    }
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gdro
