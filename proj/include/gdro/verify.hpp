#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gdro/model.hpp"
#include "gdro/robust.hpp"
#include "gdro/trainer.hpp"

namespace gdro {

// Outcome of one oracle check. max_error is the largest observed deviation
// in the check's own metric; pass == (max_error <= tolerance).
struct OracleReport {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  int samples = 0;
};

OracleReport make_report(std::string name, double max_error, double tolerance,
                         int samples);
std::string format_report_line(const OracleReport& report);

// Compares grad_params and grad_input against central finite differences with
// step h on every coordinate. The per-coordinate error is
// |analytic - numeric| / max(|analytic|, |numeric|, floor) where
// floor = max(1e-6, 1e-3 * max_coord(|numeric|)); the floor keeps coordinates
// whose true gradient is ~0 (where central differences measure only rounding
// noise) from dominating the relative metric.
OracleReport finite_diff_check(const ModelParams& params,
                               std::span<const double> x, double y, double h,
                               double tolerance = 1e-5);

// Analytic maximizer of w.z - gamma * 0.5 * ||z - x||^2:
// z* = x + w / gamma, phi* = w.x + ||w||^2 / (2 * gamma). Requires gamma > 0.
struct LinearOracle {
  std::vector<double> z_star;
  double phi_star = 0.0;
};
LinearOracle closed_form_linear_oracle(std::span<const double> w,
                                       std::span<const double> x, double gamma);

// Brute-force supremum of the penalized objective over the axis-aligned grid
// of the given radius and resolution centered at x. Only dimensions <= 3 are
// accepted; finer resolutions that divide a coarser one evaluate a superset
// of its points, so the value is nondecreasing under refinement.
double grid_robust_oracle(const ModelParams& params, std::span<const double> x,
                          double y, double gamma, double box_radius,
                          double resolution);

// sum_i p_i * ln(p_i / q_i), with 0 * ln 0 = 0. Errors if either argument is
// off the simplex (tolerance 1e-9) or if some q_i = 0 where p_i > 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Checks D_KL(p || q) <= ln(1/delta) given min_i q_i >= delta > 0.
OracleReport kl_interior_bound_check(std::span<const double> p,
                                     std::span<const double> q, double delta);

// Replays a training history: realized delta = min over recorded iterates of
// min_g q_g, and every consecutive pair of weight vectors (in both directions)
// must satisfy the interior KL bound with that delta.
OracleReport training_kl_audit(const TrainHistory& history);

// The full seeded check battery behind the `verify` command.
std::vector<OracleReport> run_verification_suite(std::uint64_t seed);

}  // namespace gdro
