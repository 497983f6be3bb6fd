#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gdro/data.hpp"
#include "gdro/model.hpp"
#include "gdro/robust.hpp"

namespace gdro {

// Weight vector over groups; a point on the probability simplex.
using GroupWeights = std::vector<double>;

void validate_simplex(const GroupWeights& q, double tol = 1e-9);

// The four training modes. All run the same outer loop; they differ only in
// whether samples are grouped and whether the inner perturbation is active:
//   kOurs  grouped,   perturbed
//   kGdro  grouped,   plain (z = x)
//   kDro   one group, perturbed
//   kErm   one group, plain
enum class Method { kOurs, kGdro, kDro, kErm };

Method method_from_string(const std::string& name);
std::string to_string(Method method);
bool method_uses_groups(Method method);
bool method_uses_perturbation(Method method);

struct TrainConfig {
  Method method = Method::kOurs;
  int t_outer = 200;
  double eta_theta = 0.1;
  double eta_q = 0.1;
  RobustConfig robust;
  std::uint64_t seed = 42;
};

void validate(const TrainConfig& cfg);

// Snapshot of one outer iteration. Losses are evaluated at the parameters
// entering the iteration; weights are the simplex point after that
// iteration's multiplicative update; duality_gap pairs the losses with the
// pre-update weights (max-group loss minus the weighted mean); grad_norm is
// the L2 norm of the applied descent direction.
struct IterationRecord {
  std::vector<double> group_losses;
  GroupWeights weights;
  double duality_gap = 0.0;
  double grad_norm = 0.0;
};

struct TrainHistory {
  GroupWeights initial_weights;
  std::vector<IterationRecord> records;
};

// Multiplicative-weights ascent: q'_g proportional to q_g * exp(eta_q * l_g),
// computed with the max-shift stabilization so large losses cannot overflow.
// Errors on a non-finite loss, naming the group.
GroupWeights mirror_ascent_step(const GroupWeights& q,
                                std::span<const double> losses, double eta_q);

// theta' = theta - eta_theta * sum_g q_g * grad_g, summed in group order.
ModelParams descent_step(const ModelParams& params, const GroupWeights& q,
                         const std::vector<std::vector<double>>& group_grads,
                         double eta_theta);

// max_g losses_g - sum_g q_g * losses_g. Nonnegative for q on the simplex.
double duality_gap(std::span<const double> losses, const GroupWeights& q);

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// Full-batch descent with mirror ascent over group weights. Ungrouped methods
// pool every sample into one pseudo-group, which makes the weight update a
// no-op; unperturbed methods run with t_rob = 0, which reduces the penalized
// loss to the plain loss exactly. Grouped methods require every group of
// `data` to be nonempty.
TrainResult train(const GroupedDataset& data, const TrainConfig& cfg);

}  // namespace gdro
