#include "gdro/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "gdro/error.hpp"
#include "gdro/rng.hpp"

namespace gdro {

namespace {

double relative_error(double analytic, double numeric, double floor_scale) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), floor_scale});
  return std::abs(analytic - numeric) / denom;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double t : v) m = std::max(m, std::abs(t));
  return m;
}

double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double t : v) acc += t * t;
  return std::sqrt(acc);
}

void check_simplex_arg(std::span<const double> p, const char* who) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::kInvalidArgument,
           std::string(who) + ": entries must be finite and nonnegative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidArgument,
         std::string(who) + ": vector is off the simplex (sum " +
             std::to_string(sum) + ")");
  }
}

}  // namespace

OracleReport make_report(std::string name, double max_error, double tolerance,
                         int samples) {
  OracleReport report;
  report.name = std::move(name);
  report.max_error = max_error;
  report.tolerance = tolerance;
  report.pass = max_error <= tolerance;
  report.samples = samples;
  return report;
}

std::string format_report_line(const OracleReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-28s max_error=%.3e tolerance=%.1e n=%-5d %s",
                report.name.c_str(), report.max_error, report.tolerance,
                report.samples, report.pass ? "[PASS]" : "[FAIL]");
  return buf;
}

OracleReport finite_diff_check(const ModelParams& params,
                               std::span<const double> x, double y, double h,
                               double tolerance) {
  if (!(h > 0.0)) fail(ErrorCode::kInvalidArgument, "finite difference step must be > 0");

  double worst = 0.0;
  int samples = 0;

  {  // parameter gradient
    const std::vector<double> analytic = grad_params(params, x, y);
    std::vector<double> numeric(analytic.size());
    ModelParams probe = params;
    for (std::size_t k = 0; k < probe.values.size(); ++k) {
      const double saved = probe.values[k];
      probe.values[k] = saved + h;
      const double up = loss(probe, x, y);
      probe.values[k] = saved - h;
      const double down = loss(probe, x, y);
      probe.values[k] = saved;
      numeric[k] = (up - down) / (2.0 * h);
    }
    const double floor_scale = std::max(1e-6, 1e-3 * max_abs(numeric));
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      worst = std::max(worst, relative_error(analytic[k], numeric[k], floor_scale));
      ++samples;
    }
  }

  {  // input gradient
    const std::vector<double> analytic = grad_input(params, x, y);
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> numeric(probe.size());
    for (std::size_t j = 0; j < probe.size(); ++j) {
      const double saved = probe[j];
      probe[j] = saved + h;
      const double up = loss(params, probe, y);
      probe[j] = saved - h;
      const double down = loss(params, probe, y);
      probe[j] = saved;
      numeric[j] = (up - down) / (2.0 * h);
    }
    const double floor_scale = std::max(1e-6, 1e-3 * max_abs(numeric));
    for (std::size_t j = 0; j < numeric.size(); ++j) {
      worst = std::max(worst, relative_error(analytic[j], numeric[j], floor_scale));
      ++samples;
    }
  }

  return make_report("gradient_finite_diff", worst, tolerance, samples);
}

LinearOracle closed_form_linear_oracle(std::span<const double> w,
                                       std::span<const double> x, double gamma) {
  if (!(gamma > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "closed-form oracle requires gamma > 0");
  }
  if (w.size() != x.size()) {
    fail(ErrorCode::kInvalidDimension, "oracle: w and x dimensions differ");
  }
  LinearOracle oracle;
  oracle.z_star.resize(x.size());
  double wx = 0.0, ww = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    oracle.z_star[j] = x[j] + w[j] / gamma;
    wx += w[j] * x[j];
    ww += w[j] * w[j];
  }
  oracle.phi_star = wx + ww / (2.0 * gamma);
  return oracle;
}

double grid_robust_oracle(const ModelParams& params, std::span<const double> x,
                          double y, double gamma, double box_radius,
                          double resolution) {
  const int d = static_cast<int>(x.size());
  if (d < 1 || d > 3) {
    fail(ErrorCode::kInvalidDimension,
         "grid oracle supports 1 to 3 dimensions, got " + std::to_string(d));
  }
  if (!(box_radius > 0.0) || !(resolution > 0.0) || resolution > box_radius) {
    fail(ErrorCode::kInvalidArgument,
         "grid oracle requires 0 < resolution <= box_radius");
  }

  const auto steps = static_cast<int>(std::llround(box_radius / resolution));
  ModelWorkspace ws;
  std::vector<double> z(x.begin(), x.end());
  double best = -HUGE_VAL;

  const int lo = -steps, hi = steps;
  for (int k0 = lo; k0 <= hi; ++k0) {
    z[0] = x[0] + k0 * resolution;
    const int lo1 = d > 1 ? lo : 0, hi1 = d > 1 ? hi : 0;
    for (int k1 = lo1; k1 <= hi1; ++k1) {
      if (d > 1) z[1] = x[1] + k1 * resolution;
      const int lo2 = d > 2 ? lo : 0, hi2 = d > 2 ? hi : 0;
      for (int k2 = lo2; k2 <= hi2; ++k2) {
        if (d > 2) z[2] = x[2] + k2 * resolution;
        const double phi =
            loss_with(params, z, y, ws) - gamma * transport_cost(x, z);
        best = std::max(best, phi);
      }
    }
  }
  return best;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    fail(ErrorCode::kInvalidDimension, "kl_divergence: dimension mismatch");
  }
  check_simplex_arg(p, "kl_divergence p");
  check_simplex_arg(q, "kl_divergence q");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      fail(ErrorCode::kInvalidArgument,
           "kl_divergence: q has a zero where p is positive");
    }
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

OracleReport kl_interior_bound_check(std::span<const double> p,
                                     std::span<const double> q, double delta) {
  if (!(delta > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "interior bound requires delta > 0");
  }
  for (double v : q) {
    if (v < delta) {
      fail(ErrorCode::kInvalidArgument,
           "q is not delta-interior: an entry is below delta");
    }
  }
  const double kl = kl_divergence(p, q);
  const double bound = std::log(1.0 / delta);
  return make_report("kl_interior_bound", kl - bound, 1e-12,
                     static_cast<int>(p.size()));
}

OracleReport training_kl_audit(const TrainHistory& history) {
  std::vector<const GroupWeights*> iterates;
  iterates.push_back(&history.initial_weights);
  for (const auto& rec : history.records) iterates.push_back(&rec.weights);

  double delta = HUGE_VAL;
  for (const auto* q : iterates) {
    for (double v : *q) delta = std::min(delta, v);
  }
  if (!(delta > 0.0)) {
    return make_report("training_kl_audit", HUGE_VAL, 1e-12,
                       static_cast<int>(iterates.size()));
  }

  const double bound = std::log(1.0 / delta);
  double worst = -HUGE_VAL;
  int pairs = 0;
  for (std::size_t t = 0; t + 1 < iterates.size(); ++t) {
    worst = std::max(worst, kl_divergence(*iterates[t], *iterates[t + 1]) - bound);
    worst = std::max(worst, kl_divergence(*iterates[t + 1], *iterates[t]) - bound);
    ++pairs;
  }
  if (pairs == 0) worst = 0.0;
  return make_report("training_kl_audit", worst, 1e-12, pairs);
}

namespace {

// Two overlapping Gaussian blobs per group, group 1 noisier. Enough signal
// for the weights to move without either group's loss running away.
GroupedDataset verification_toy(std::uint64_t seed) {
  Rng rng(seed);
  GroupedDataset data;
  data.d_in = 2;
  data.group_count = 2;
  data.scaler.mean = {0.0, 0.0};
  data.scaler.stddev = {1.0, 1.0};
  for (int g = 0; g < 2; ++g) {
    const double margin = g == 0 ? 1.5 : 0.8;
    const double lift = g == 0 ? 0.0 : 3.0;
    for (int i = 0; i < 60; ++i) {
      const int y = i % 2;
      const double cx = (y == 1 ? margin : -margin) + rng.normal(0.0, 0.5);
      const double cy = lift + rng.normal(0.0, 0.5);
      data.x.push_back(cx);
      data.x.push_back(cy);
      data.y.push_back(y);
      data.group.push_back(g);
    }
  }
  data.rebuild_group_index();
  return data;
}

OracleReport check_gradients(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  int samples = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d_in = 2 + static_cast<int>(rng.below(7));
    ModelParams params = init_params(seed * 977 + trial, d_in);
    std::vector<double> x(d_in);
    for (double& v : x) v = rng.normal();
    const double y = trial % 2 ? 1.0 : 0.0;
    const OracleReport r = finite_diff_check(params, x, y, 1e-5);
    worst = std::max(worst, r.max_error);
    samples += r.samples;
  }
  return make_report("gradient_finite_diff", worst, 1e-5, samples);
}

OracleReport check_linear_ascent(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + static_cast<int>(rng.below(7));
    ModelParams lin;
    lin.kind = ModelKind::kLinear;
    lin.d_in = d;
    lin.values.assign(d + 1, 0.0);
    std::vector<double> x(d);
    for (int j = 0; j < d; ++j) {
      lin.values[j] = rng.uniform(-2.0, 2.0);
      x[j] = rng.uniform(-3.0, 3.0);
    }
    const double gamma = rng.uniform(0.5, 10.0);
    const LinearOracle oracle =
        closed_form_linear_oracle({lin.values.data(), static_cast<std::size_t>(d)},
                                  x, gamma);

    RobustConfig cfg{gamma, 0.5 / gamma, 200};
    const PerturbationResult res = worst_case_perturbation(lin, x, 0.0, cfg);
    double dist_sq = 0.0;
    for (int j = 0; j < d; ++j) {
      const double dj = res.z[j] - oracle.z_star[j];
      dist_sq += dj * dj;
    }
    worst = std::max(worst, std::sqrt(dist_sq));
    worst = std::max(worst, std::abs(res.penalized_loss - oracle.phi_star));
  }
  return make_report("inner_ascent_linear_oracle", worst, 1e-6, 100);
}

OracleReport check_grid_ascent(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams params = init_params(seed * 131 + trial, 2);
    std::vector<double> x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double y = trial % 2 ? 1.0 : 0.0;
    const double gamma = rng.uniform(2.0, 5.0);
    RobustConfig cfg{gamma, 0.05, 200};
    const PerturbationResult res = worst_case_perturbation(params, x, y, cfg);
    const double grid = grid_robust_oracle(params, x, y, gamma, 1.0, 0.01);
    worst = std::max(worst, grid - res.penalized_loss);
  }
  return make_report("inner_ascent_grid_2d", worst, 1e-3, 20);
}

OracleReport check_gamma_pin(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 4;
    ModelParams params = init_params(seed * 313 + trial, d);
    std::vector<double> x(d);
    for (double& v : x) v = rng.normal();
    const double gamma = 1e9;
    RobustConfig cfg{gamma, 0.5 / gamma, 100};
    const PerturbationResult res =
        worst_case_perturbation(params, x, trial % 2 ? 1.0 : 0.0, cfg);
    for (int j = 0; j < d; ++j) {
      worst = std::max(worst, std::abs(res.z[j] - x[j]));
    }
  }
  return make_report("gamma_pin_to_anchor", worst, 1e-6, 20);
}

OracleReport check_kl_random(std::uint64_t seed) {
  Rng rng(seed);
  double worst = -HUGE_VAL;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t g = 2 + rng.below(7);
    std::vector<double> p(g), q(g);
    double ps = 0.0, qs = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      p[i] = 0.05 + rng.uniform();
      q[i] = 0.05 + rng.uniform();
      ps += p[i];
      qs += q[i];
    }
    double delta = HUGE_VAL;
    for (std::size_t i = 0; i < g; ++i) {
      p[i] /= ps;
      q[i] /= qs;
      delta = std::min(delta, q[i]);
    }
    worst = std::max(worst, kl_divergence(p, q) - std::log(1.0 / delta));
  }
  return make_report("kl_interior_bound", worst, 1e-12, 1000);
}

OracleReport check_training_audit(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.method = Method::kGdro;
  cfg.t_outer = 60;
  cfg.seed = seed;
  const TrainResult result = train(verification_toy(seed), cfg);
  OracleReport r = training_kl_audit(result.history);
  r.name = "training_kl_audit";
  return r;
}

OracleReport check_mirror_simplex(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t g = 2 + rng.below(7);
    GroupWeights q(g);
    std::vector<double> losses(g);
    double qs = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      q[i] = 0.01 + rng.uniform();
      qs += q[i];
      losses[i] = rng.uniform(-5.0, 5.0);
    }
    for (double& v : q) v /= qs;

    const GroupWeights next = mirror_ascent_step(q, losses, 0.1);
    double sum = 0.0, mn = HUGE_VAL;
    for (double v : next) {
      sum += v;
      mn = std::min(mn, v);
    }
    worst = std::max(worst, std::abs(sum - 1.0));
    if (mn <= 0.0) worst = std::max(worst, 1.0);

    // Shifting every loss by a constant must not move the update.
    std::vector<double> shifted = losses;
    for (double& l : shifted) l += 3.25;
    const GroupWeights next_shifted = mirror_ascent_step(q, shifted, 0.1);
    for (std::size_t i = 0; i < g; ++i) {
      worst = std::max(worst, std::abs(next[i] - next_shifted[i]));
    }
  }
  return make_report("mirror_simplex_invariance", worst, 1e-12, 200);
}

OracleReport check_envelope_dominance(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 3;
    ModelParams params = init_params(seed * 499 + trial, d);
    std::vector<double> x(d);
    for (double& v : x) v = rng.normal();
    const double y = trial % 2 ? 1.0 : 0.0;
    const double gamma = trial % 3 == 0 ? 0.5 : 2.0;
    RobustConfig cfg{gamma, 0.01, 100};
    const double plain = loss(params, x, y);
    const PerturbationResult res = worst_case_perturbation(params, x, y, cfg);
    worst = std::max(worst, plain - res.penalized_loss);
  }
  return make_report("envelope_dominance", worst, 1e-12, 30);
}

OracleReport check_ascent_monotone_linear(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 3;
    ModelParams lin;
    lin.kind = ModelKind::kLinear;
    lin.d_in = d;
    lin.values.assign(d + 1, 0.0);
    std::vector<double> x(d);
    for (int j = 0; j < d; ++j) {
      lin.values[j] = rng.uniform(-2.0, 2.0);
      x[j] = rng.uniform(-2.0, 2.0);
    }
    const double gamma = rng.uniform(0.5, 10.0);
    RobustConfig cfg{gamma, rng.uniform(0.1, 1.0) / gamma, 100};
    std::vector<double> trace;
    worst_case_perturbation(lin, x, 0.0, cfg, &trace);
    for (std::size_t t = 1; t < trace.size(); ++t) {
      worst = std::max(worst, trace[t - 1] - trace[t]);
    }
  }
  return make_report("ascent_monotone_linear", worst, 1e-9, 50);
}

OracleReport check_lipschitz_linear(std::uint64_t seed) {
  Rng rng(seed);
  const int d = 5, n = 20;
  std::vector<std::vector<double>> xs(n, std::vector<double>(d));
  std::vector<double> x_mean(d, 0.0);
  for (auto& x : xs) {
    for (int j = 0; j < d; ++j) {
      x[j] = rng.uniform(-2.0, 2.0);
      x_mean[j] += x[j] / n;
    }
  }
  const double gamma = 1.5;
  // Exact robust surrogate of the linear loss: mean_i w.x_i + ||w||^2/(2 gamma).
  auto surrogate = [&](const std::vector<double>& w) {
    double acc = 0.0;
    for (const auto& x : xs) {
      for (int j = 0; j < d; ++j) acc += w[j] * x[j];
    }
    acc /= n;
    double ww = 0.0;
    for (int j = 0; j < d; ++j) ww += w[j] * w[j];
    return acc + ww / (2.0 * gamma);
  };

  double worst = -HUGE_VAL;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(d), b(d);
    for (int j = 0; j < d; ++j) {
      a[j] = rng.uniform(-3.0, 3.0);
      b[j] = rng.uniform(-3.0, 3.0);
    }
    std::vector<double> diff(d);
    for (int j = 0; j < d; ++j) diff[j] = a[j] - b[j];
    const double k_bound =
        norm2(x_mean) + std::max(norm2(a), norm2(b)) / gamma;
    const double lhs = std::abs(surrogate(a) - surrogate(b));
    worst = std::max(worst, lhs - k_bound * norm2(diff));
  }
  return make_report("robust_lipschitz_linear", worst, 1e-9, 100);
}

OracleReport check_gap_nonnegative(std::uint64_t seed) {
  Rng rng(seed);
  double worst = -HUGE_VAL;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t g = 2 + rng.below(7);
    GroupWeights q(g);
    std::vector<double> losses(g);
    double qs = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      q[i] = 0.01 + rng.uniform();
      qs += q[i];
      losses[i] = rng.uniform(-4.0, 4.0);
    }
    for (double& v : q) v /= qs;
    worst = std::max(worst, -duality_gap(losses, q));
  }
  return make_report("duality_gap_nonnegative", worst, 1e-12, 500);
}

OracleReport check_grid_refinement(std::uint64_t seed) {
  Rng rng(seed);
  double worst = -HUGE_VAL;
  for (int trial = 0; trial < 5; ++trial) {
    ModelParams params = init_params(seed * 59 + trial, 2);
    std::vector<double> x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double gamma = rng.uniform(2.0, 5.0);
    const double coarse = grid_robust_oracle(params, x, 1.0, gamma, 1.0, 0.05);
    const double fine = grid_robust_oracle(params, x, 1.0, gamma, 1.0, 0.01);
    worst = std::max(worst, coarse - fine);
  }
  return make_report("grid_refinement_monotone", worst, 1e-9, 5);
}

}  // namespace

std::vector<OracleReport> run_verification_suite(std::uint64_t seed) {
  std::vector<OracleReport> reports;
  reports.push_back(check_gradients(seed));
  reports.push_back(check_linear_ascent(seed + 1));
  reports.push_back(check_grid_ascent(seed + 2));
  reports.push_back(check_gamma_pin(seed + 3));
  reports.push_back(check_kl_random(seed + 4));
  reports.push_back(check_training_audit(seed + 5));
  reports.push_back(check_mirror_simplex(seed + 6));
  reports.push_back(check_envelope_dominance(seed + 7));
  reports.push_back(check_ascent_monotone_linear(seed + 8));
  reports.push_back(check_lipschitz_linear(seed + 9));
  reports.push_back(check_gap_nonnegative(seed + 10));
  reports.push_back(check_grid_refinement(seed + 11));
  return reports;
}

}  // namespace gdro
