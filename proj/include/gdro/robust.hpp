#pragma once

#include <span>
#include <vector>

#include "gdro/model.hpp"

namespace gdro {

// Inner-maximization settings. The penalized objective for a sample anchored
// at x is phi(z) = loss(params, z, y) - gamma * c(x, z) with transport cost
// c(x, z) = 0.5 * ||z - x||^2. Larger gamma pins z closer to the anchor;
// t_rob = 0 disables perturbation entirely (z = x, phi = plain loss).
struct RobustConfig {
  double gamma = 1e-4;  // transport penalty weight, >= 0
  double eta_z = 0.05;  // ascent step size, > 0
  int t_rob = 100;      // ascent iterations, >= 0
};

void validate(const RobustConfig& cfg);

struct PerturbationResult {
  std::vector<double> z;
  double penalized_loss = 0.0;  // phi at the returned z
  double transport_cost = 0.0;  // c(anchor, z)
};

// 0.5 * squared Euclidean distance. Strongly convex in z, zero iff z == anchor.
double transport_cost(std::span<const double> anchor, std::span<const double> z);

double penalized_loss(const ModelParams& params, std::span<const double> anchor_x,
                      double y, std::span<const double> z, double gamma);

// Fixed-step gradient ascent on phi starting from z = x (no line search, no
// early stopping). Returns the final iterate. If phi_trace is non-null it
// receives phi at the start plus after every step (t_rob + 1 entries); in
// linear mode with eta_z <= 1/gamma the trace is nondecreasing, while the MLP
// carries no such guarantee. A NaN in z or phi raises a numeric-divergence
// error naming the iteration.
PerturbationResult worst_case_perturbation(const ModelParams& params,
                                           std::span<const double> x, double y,
                                           const RobustConfig& cfg,
                                           std::vector<double>* phi_trace = nullptr);

// One sample as seen by the group-level routines.
struct SampleView {
  std::span<const double> x;
  double y = 0.0;
};

struct GroupRobustLoss {
  double loss = 0.0;          // mean penalized loss over the group
  std::vector<double> grad;   // mean d(phi)/d(theta), perturbations held fixed
};

// Runs worst_case_perturbation per sample and averages. The gradient treats
// each returned z as a constant (envelope/Danskin rule), so it is the mean of
// grad_params evaluated at the perturbed points. Errors on an empty group;
// divergence errors are re-raised with the offending sample index.
GroupRobustLoss robust_group_loss(const ModelParams& params,
                                  std::span<const SampleView> group,
                                  const RobustConfig& cfg);

}  // namespace gdro
