#include "gdro/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gdro/error.hpp"

namespace gdro {

void validate_simplex(const GroupWeights& q, double tol) {
  if (q.empty()) fail(ErrorCode::kInvalidArgument, "weight vector is empty");
  double sum = 0.0;
  for (std::size_t g = 0; g < q.size(); ++g) {
    if (!(q[g] >= 0.0) || !std::isfinite(q[g])) {
      fail(ErrorCode::kInvalidArgument,
           "weight for group " + std::to_string(g) + " is negative or non-finite");
    }
    sum += q[g];
  }
  if (std::abs(sum - 1.0) > tol) {
    fail(ErrorCode::kInvalidArgument,
         "weights sum to " + std::to_string(sum) + ", not 1");
  }
}

Method method_from_string(const std::string& name) {
  if (name == "ours") return Method::kOurs;
  if (name == "gdro") return Method::kGdro;
  if (name == "dro") return Method::kDro;
  if (name == "erm") return Method::kErm;
  fail(ErrorCode::kInvalidArgument,
       "unknown method '" + name + "' (expected ours, gdro, dro or erm)");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::kOurs: return "ours";
    case Method::kGdro: return "gdro";
    case Method::kDro: return "dro";
    case Method::kErm: return "erm";
  }
  fail(ErrorCode::kInvalidArgument, "invalid method enum value");
}

bool method_uses_groups(Method method) {
  return method == Method::kOurs || method == Method::kGdro;
}

bool method_uses_perturbation(Method method) {
  return method == Method::kOurs || method == Method::kDro;
}

void validate(const TrainConfig& cfg) {
  if (cfg.t_outer < 0) {
    fail(ErrorCode::kInvalidArgument, "t_outer must be >= 0");
  }
  if (!(cfg.eta_theta > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "eta_theta must be > 0");
  }
  if (!(cfg.eta_q > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "eta_q must be > 0");
  }
  if (method_uses_perturbation(cfg.method)) validate(cfg.robust);
}

GroupWeights mirror_ascent_step(const GroupWeights& q,
                                std::span<const double> losses, double eta_q) {
  if (q.size() != losses.size()) {
    fail(ErrorCode::kInvalidDimension,
         "mirror_ascent_step: weights and losses differ in length");
  }
  validate_simplex(q);
  for (std::size_t g = 0; g < losses.size(); ++g) {
    if (!std::isfinite(losses[g])) {
      fail(ErrorCode::kNumericDivergence,
           "non-finite loss for group " + std::to_string(g));
    }
  }

  // Shift by the max exponent so exp never overflows; the shift cancels in
  // the normalization.
  double max_arg = -HUGE_VAL;
  for (double l : losses) max_arg = std::max(max_arg, eta_q * l);

  GroupWeights next(q.size());
  double total = 0.0;
  for (std::size_t g = 0; g < q.size(); ++g) {
    next[g] = q[g] * std::exp(eta_q * losses[g] - max_arg);
    total += next[g];
  }
  if (!(total > 0.0)) {
    fail(ErrorCode::kNumericDivergence,
         "mirror ascent underflowed: all weights collapsed to zero");
  }
  for (double& w : next) w /= total;
  return next;
}

ModelParams descent_step(const ModelParams& params, const GroupWeights& q,
                         const std::vector<std::vector<double>>& group_grads,
                         double eta_theta) {
  if (q.size() != group_grads.size()) {
    fail(ErrorCode::kInvalidDimension,
         "descent_step: weights and gradients differ in length");
  }
  ModelParams next = params;
  for (std::size_t g = 0; g < q.size(); ++g) {
    if (group_grads[g].size() != params.values.size()) {
      fail(ErrorCode::kInvalidDimension,
           "descent_step: gradient for group " + std::to_string(g) +
               " has the wrong length");
    }
    const double w = eta_theta * q[g];
    for (std::size_t k = 0; k < next.values.size(); ++k) {
      next.values[k] -= w * group_grads[g][k];
    }
  }
  return next;
}

double duality_gap(std::span<const double> losses, const GroupWeights& q) {
  if (q.size() != losses.size()) {
    fail(ErrorCode::kInvalidDimension,
         "duality_gap: weights and losses differ in length");
  }
  validate_simplex(q);
  double max_loss = -HUGE_VAL;
  double mean = 0.0;
  for (std::size_t g = 0; g < losses.size(); ++g) {
    max_loss = std::max(max_loss, losses[g]);
    mean += q[g] * losses[g];
  }
  return max_loss - mean;
}

namespace {

std::vector<std::vector<SampleView>> build_groups(const GroupedDataset& data,
                                                  bool grouped) {
  std::vector<std::vector<SampleView>> groups;
  if (!grouped) {
    groups.resize(1);
    groups[0].reserve(data.n());
    for (int i = 0; i < data.n(); ++i) {
      groups[0].push_back({data.row(i), static_cast<double>(data.y[i])});
    }
    return groups;
  }
  groups.resize(data.group_count);
  for (int g = 0; g < data.group_count; ++g) {
    const auto& members = data.group_index[g];
    if (members.empty()) {
      fail(ErrorCode::kEmptyGroup,
           "group " + std::to_string(g) + " has no training rows");
    }
    groups[g].reserve(members.size());
    for (int i : members) {
      groups[g].push_back({data.row(i), static_cast<double>(data.y[i])});
    }
  }
  return groups;
}

}  // namespace

TrainResult train(const GroupedDataset& data, const TrainConfig& cfg) {
  validate(cfg);
  if (data.n() == 0) {
    fail(ErrorCode::kEmptyGroup, "training dataset has no rows");
  }

  const bool grouped = method_uses_groups(cfg.method);
  const auto groups = build_groups(data, grouped);
  const auto n_groups = groups.size();

  // Unperturbed methods run the same loop with zero ascent iterations, which
  // collapses phi to the plain loss at z = x.
  RobustConfig robust = cfg.robust;
  if (!method_uses_perturbation(cfg.method)) {
    robust = RobustConfig{0.0, 1.0, 0};
  }

  TrainResult result;
  result.params = init_params(cfg.seed, data.d_in);
  result.history.initial_weights.assign(n_groups, 0.0);
  for (std::size_t g = 0; g < n_groups; ++g) {
    result.history.initial_weights[g] =
        static_cast<double>(groups[g].size()) / data.n();
  }

  GroupWeights q = result.history.initial_weights;
  std::vector<double> losses(n_groups);
  std::vector<std::vector<double>> grads(n_groups);

  for (int t = 1; t <= cfg.t_outer; ++t) {
    for (std::size_t g = 0; g < n_groups; ++g) {
      try {
        GroupRobustLoss gl = robust_group_loss(result.params, groups[g], robust);
        if (!std::isfinite(gl.loss)) {
          fail(ErrorCode::kNumericDivergence, "non-finite loss");
        }
        losses[g] = gl.loss;
        grads[g] = std::move(gl.grad);
      } catch (const Error& e) {
        fail(e.code(), "iteration " + std::to_string(t) + ", group " +
                           std::to_string(g) + ": " + e.what());
      }
    }

    IterationRecord record;
    record.group_losses = losses;
    record.duality_gap = duality_gap(losses, q);

    q = mirror_ascent_step(q, losses, cfg.eta_q);
    record.weights = q;

    // Descent uses the just-updated weights.
    double norm_sq = 0.0;
    {
      std::vector<double> direction(result.params.values.size(), 0.0);
      for (std::size_t g = 0; g < n_groups; ++g) {
        for (std::size_t k = 0; k < direction.size(); ++k) {
          direction[k] += q[g] * grads[g][k];
        }
      }
      for (std::size_t k = 0; k < direction.size(); ++k) {
        norm_sq += direction[k] * direction[k];
        result.params.values[k] -= cfg.eta_theta * direction[k];
      }
    }
    record.grad_norm = std::sqrt(norm_sq);

    for (double v : result.params.values) {
      if (!std::isfinite(v)) {
        fail(ErrorCode::kNumericDivergence,
             "non-finite parameter after iteration " + std::to_string(t));
      }
    }
    result.history.records.push_back(std::move(record));
  }
  return result;
}

}  // namespace gdro
