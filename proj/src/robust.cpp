#include "gdro/robust.hpp"

#include <cmath>
#include <string>

#include "gdro/error.hpp"

namespace gdro {

void validate(const RobustConfig& cfg) {
  if (!(cfg.gamma >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "robust config: gamma must be >= 0");
  }
  if (!(cfg.eta_z > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "robust config: eta_z must be > 0");
  }
  if (cfg.t_rob < 0) {
    fail(ErrorCode::kInvalidArgument, "robust config: t_rob must be >= 0");
  }
}

double transport_cost(std::span<const double> anchor, std::span<const double> z) {
  if (anchor.size() != z.size()) {
    fail(ErrorCode::kInvalidDimension,
         "transport_cost: anchor and z have different dimensions");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double d = z[j] - anchor[j];
    acc += d * d;
  }
  return 0.5 * acc;
}

double penalized_loss(const ModelParams& params, std::span<const double> anchor_x,
                      double y, std::span<const double> z, double gamma) {
  return loss(params, z, y) - gamma * transport_cost(anchor_x, z);
}

PerturbationResult worst_case_perturbation(const ModelParams& params,
                                           std::span<const double> x, double y,
                                           const RobustConfig& cfg,
                                           std::vector<double>* phi_trace) {
  validate(cfg);

  ModelWorkspace ws;
  std::vector<double> z(x.begin(), x.end());
  std::vector<double> loss_grad;

  auto phi_at = [&](const std::vector<double>& point) {
    return loss_with(params, point, y, ws) - cfg.gamma * transport_cost(x, point);
  };

  double phi = phi_at(z);
  if (phi_trace) {
    phi_trace->clear();
    phi_trace->push_back(phi);
  }

  for (int t = 1; t <= cfg.t_rob; ++t) {
    grad_input_into(params, z, y, ws, loss_grad);
    for (std::size_t j = 0; j < z.size(); ++j) {
      // grad of phi: d(loss)/dz - gamma * (z - x)
      z[j] += cfg.eta_z * (loss_grad[j] - cfg.gamma * (z[j] - x[j]));
    }
    phi = phi_at(z);
    bool bad = std::isnan(phi);
    for (std::size_t j = 0; !bad && j < z.size(); ++j) {
      bad = std::isnan(z[j]);
    }
    if (bad) {
      fail(ErrorCode::kNumericDivergence,
           "inner ascent diverged (NaN) at iteration " + std::to_string(t));
    }
    if (phi_trace) phi_trace->push_back(phi);
  }

  PerturbationResult result;
  result.transport_cost = transport_cost(x, z);
  result.penalized_loss = phi;
  result.z = std::move(z);
  return result;
}

GroupRobustLoss robust_group_loss(const ModelParams& params,
                                  std::span<const SampleView> group,
                                  const RobustConfig& cfg) {
  validate(cfg);
  if (group.empty()) {
    fail(ErrorCode::kEmptyGroup, "robust_group_loss called on an empty group");
  }

  GroupRobustLoss out;
  out.grad.assign(params.values.size(), 0.0);

  ModelWorkspace ws;
  std::vector<double> sample_grad;
  const double inv_n = 1.0 / static_cast<double>(group.size());

  for (std::size_t i = 0; i < group.size(); ++i) {
    PerturbationResult pert;
    try {
      pert = worst_case_perturbation(params, group[i].x, group[i].y, cfg);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNumericDivergence) {
        fail(ErrorCode::kNumericDivergence,
             "sample " + std::to_string(i) + ": " + e.what());
      }
      throw;
    }
    out.loss += pert.penalized_loss;
    grad_params_into(params, pert.z, group[i].y, ws, sample_grad);
    for (std::size_t k = 0; k < sample_grad.size(); ++k) {
      out.grad[k] += sample_grad[k];
    }
  }

  out.loss *= inv_n;
  for (double& g : out.grad) g *= inv_n;
  return out;
}

}  // namespace gdro
