#include "gdro/model.hpp"

#include <cmath>
#include <string>

#include "gdro/error.hpp"
#include "gdro/rng.hpp"

namespace gdro {

namespace {

// Offsets of each block inside ModelParams::values.
struct Layout {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0, total = 0;
};

Layout layout_for(ModelKind kind, int d_in) {
  Layout l;
  const std::size_t d = static_cast<std::size_t>(d_in);
  if (kind == ModelKind::kLinear) {
    l.w3 = 0;
    l.b3 = d;
    l.total = d + 1;
    return l;
  }
  l.w1 = 0;
  l.b1 = l.w1 + static_cast<std::size_t>(kHidden1) * d;
  l.w2 = l.b1 + kHidden1;
  l.b2 = l.w2 + static_cast<std::size_t>(kHidden2) * kHidden1;
  l.w3 = l.b2 + kHidden2;
  l.b3 = l.w3 + kHidden2;
  l.total = l.b3 + 1;
  return l;
}

void check_dims(const ModelParams& params, std::span<const double> x) {
  if (params.d_in <= 0) {
    fail(ErrorCode::kInvalidDimension, "model has non-positive input dimension");
  }
  if (static_cast<int>(x.size()) != params.d_in) {
    fail(ErrorCode::kInvalidDimension,
         "input has " + std::to_string(x.size()) + " coordinates, model expects " +
             std::to_string(params.d_in));
  }
  const std::size_t want = layout_for(params.kind, params.d_in).total;
  if (params.values.size() != want) {
    fail(ErrorCode::kInvalidDimension,
         "parameter vector has " + std::to_string(params.values.size()) +
             " entries, layout expects " + std::to_string(want));
  }
}

void check_label(const ModelParams& params, double y) {
  if (params.kind == ModelKind::kLinear) return;  // label ignored in linear mode
  if (y != 0.0 && y != 1.0) {
    fail(ErrorCode::kInvalidArgument,
         "label must be 0 or 1, got " + std::to_string(y));
  }
}

// Runs the two-hidden-layer forward pass, filling ws.pre1/h1/pre2/h2 and
// returning the logit.
double mlp_forward(const ModelParams& params, std::span<const double> x,
                   ModelWorkspace& ws) {
  const Layout l = layout_for(params.kind, params.d_in);
  const double* v = params.values.data();
  const int d = params.d_in;

  ws.pre1.resize(kHidden1);
  ws.h1.resize(kHidden1);
  for (int i = 0; i < kHidden1; ++i) {
    double acc = v[l.b1 + i];
    const double* row = v + l.w1 + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) acc += row[j] * x[j];
    ws.pre1[i] = acc;
    ws.h1[i] = elu(acc);
  }

  ws.pre2.resize(kHidden2);
  ws.h2.resize(kHidden2);
  for (int i = 0; i < kHidden2; ++i) {
    double acc = v[l.b2 + i];
    const double* row = v + l.w2 + static_cast<std::size_t>(i) * kHidden1;
    for (int j = 0; j < kHidden1; ++j) acc += row[j] * ws.h1[j];
    ws.pre2[i] = acc;
    ws.h2[i] = elu(acc);
  }

  double logit = v[l.b3];
  for (int j = 0; j < kHidden2; ++j) logit += v[l.w3 + j] * ws.h2[j];
  return logit;
}

double linear_forward(const ModelParams& params, std::span<const double> x) {
  const Layout l = layout_for(params.kind, params.d_in);
  double acc = params.values[l.b3];
  for (int j = 0; j < params.d_in; ++j) acc += params.values[l.w3 + j] * x[j];
  return acc;
}

}  // namespace

double stable_sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double stable_softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double elu(double v) { return v > 0.0 ? v : std::expm1(v); }

double elu_derivative(double v) { return v > 0.0 ? 1.0 : std::exp(v); }

std::size_t param_count(ModelKind kind, int d_in) {
  if (d_in <= 0) {
    fail(ErrorCode::kInvalidDimension,
         "param_count requires a positive input dimension");
  }
  return layout_for(kind, d_in).total;
}

ModelParams init_params(std::uint64_t seed, int d_in, ModelKind kind) {
  if (d_in <= 0) {
    fail(ErrorCode::kInvalidDimension,
         "init_params requires a positive input dimension, got " +
             std::to_string(d_in));
  }
  ModelParams params;
  params.kind = kind;
  params.d_in = d_in;
  params.values.assign(layout_for(kind, d_in).total, 0.0);

  Rng rng(seed);
  const Layout l = layout_for(kind, d_in);
  auto fill_weight_block = [&](std::size_t offset, int rows, int fan_in) {
    const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
    const std::size_t count = static_cast<std::size_t>(rows) * fan_in;
    for (std::size_t k = 0; k < count; ++k) {
      params.values[offset + k] = rng.uniform(-limit, limit);
    }
  };

  if (kind == ModelKind::kLinear) {
    fill_weight_block(l.w3, 1, d_in);
    return params;  // bias stays zero
  }
  fill_weight_block(l.w1, kHidden1, d_in);
  fill_weight_block(l.w2, kHidden2, kHidden1);
  fill_weight_block(l.w3, 1, kHidden2);
  return params;
}

double forward(const ModelParams& params, std::span<const double> x) {
  check_dims(params, x);
  if (params.kind == ModelKind::kLinear) return linear_forward(params, x);
  ModelWorkspace ws;
  return mlp_forward(params, x, ws);
}

double loss_with(const ModelParams& params, std::span<const double> x,
                 double y, ModelWorkspace& ws) {
  check_dims(params, x);
  check_label(params, y);
  if (params.kind == ModelKind::kLinear) return linear_forward(params, x);
  const double logit = mlp_forward(params, x, ws);
  return stable_softplus(logit) - y * logit;
}

double loss(const ModelParams& params, std::span<const double> x, double y) {
  ModelWorkspace ws;
  return loss_with(params, x, y, ws);
}

void grad_params_into(const ModelParams& params, std::span<const double> x,
                      double y, ModelWorkspace& ws, std::vector<double>& out) {
  check_dims(params, x);
  check_label(params, y);
  const Layout l = layout_for(params.kind, params.d_in);
  out.assign(l.total, 0.0);

  if (params.kind == ModelKind::kLinear) {
    // loss = w.x + b, so dloss/dw = x and dloss/db = 1.
    for (int j = 0; j < params.d_in; ++j) out[l.w3 + j] = x[j];
    out[l.b3] = 1.0;
    return;
  }

  const double* v = params.values.data();
  const int d = params.d_in;
  const double logit = mlp_forward(params, x, ws);
  const double dlogit = stable_sigmoid(logit) - y;

  out[l.b3] = dlogit;
  for (int j = 0; j < kHidden2; ++j) out[l.w3 + j] = dlogit * ws.h2[j];

  ws.delta2.resize(kHidden2);
  for (int i = 0; i < kHidden2; ++i) {
    ws.delta2[i] = dlogit * v[l.w3 + i] * elu_derivative(ws.pre2[i]);
  }
  for (int i = 0; i < kHidden2; ++i) {
    const double di = ws.delta2[i];
    double* row = out.data() + l.w2 + static_cast<std::size_t>(i) * kHidden1;
    for (int j = 0; j < kHidden1; ++j) row[j] = di * ws.h1[j];
    out[l.b2 + i] = di;
  }

  ws.delta1.resize(kHidden1);
  for (int j = 0; j < kHidden1; ++j) {
    double acc = 0.0;
    for (int i = 0; i < kHidden2; ++i) {
      acc += ws.delta2[i] * v[l.w2 + static_cast<std::size_t>(i) * kHidden1 + j];
    }
    ws.delta1[j] = acc * elu_derivative(ws.pre1[j]);
  }
  for (int i = 0; i < kHidden1; ++i) {
    const double di = ws.delta1[i];
    double* row = out.data() + l.w1 + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) row[j] = di * x[j];
    out[l.b1 + i] = di;
  }
}

std::vector<double> grad_params(const ModelParams& params,
                                std::span<const double> x, double y) {
  ModelWorkspace ws;
  std::vector<double> out;
  grad_params_into(params, x, y, ws, out);
  return out;
}

void grad_input_into(const ModelParams& params, std::span<const double> x,
                     double y, ModelWorkspace& ws, std::vector<double>& out) {
  check_dims(params, x);
  check_label(params, y);
  const Layout l = layout_for(params.kind, params.d_in);
  const int d = params.d_in;
  out.assign(d, 0.0);

  if (params.kind == ModelKind::kLinear) {
    for (int j = 0; j < d; ++j) out[j] = params.values[l.w3 + j];
    return;
  }

  const double* v = params.values.data();
  const double logit = mlp_forward(params, x, ws);
  const double dlogit = stable_sigmoid(logit) - y;

  ws.delta2.resize(kHidden2);
  for (int i = 0; i < kHidden2; ++i) {
    ws.delta2[i] = dlogit * v[l.w3 + i] * elu_derivative(ws.pre2[i]);
  }
  ws.delta1.resize(kHidden1);
  for (int j = 0; j < kHidden1; ++j) {
    double acc = 0.0;
    for (int i = 0; i < kHidden2; ++i) {
      acc += ws.delta2[i] * v[l.w2 + static_cast<std::size_t>(i) * kHidden1 + j];
    }
    ws.delta1[j] = acc * elu_derivative(ws.pre1[j]);
  }
  for (int j = 0; j < d; ++j) {
    double acc = 0.0;
    for (int i = 0; i < kHidden1; ++i) {
      acc += ws.delta1[i] * v[l.w1 + static_cast<std::size_t>(i) * d + j];
    }
    out[j] = acc;
  }
}

std::vector<double> grad_input(const ModelParams& params,
                               std::span<const double> x, double y) {
  ModelWorkspace ws;
  std::vector<double> out;
  grad_input_into(params, x, y, ws, out);
  return out;
}

}  // namespace gdro
