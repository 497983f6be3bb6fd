#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gdro {

// Which network a parameter vector parameterizes.
//
// kTwoHidden is the production model: d_in -> 64 -> 32 -> 1 with ELU
// (alpha = 1) after both hidden layers and a linear scalar output. Its
// training loss is binary cross-entropy on the logit.
//
// kLinear is a verification-only mode: a single linear map d_in -> 1 whose
// "loss" is the raw output itself (the label argument is ignored). The
// worst-case perturbation of a linear loss has a closed form, which the
// oracle suite uses as ground truth.
enum class ModelKind { kTwoHidden, kLinear };

inline constexpr int kHidden1 = 64;
inline constexpr int kHidden2 = 32;

// Flat coefficient vector plus the shape needed to interpret it.
//
// Layout for kTwoHidden, in order: W1 (64 x d_in, row-major), b1 (64),
// W2 (32 x 64), b2 (32), W3 (1 x 32), b3 (1). Weight matrices are stored
// out-by-in so row r holds the fan-in of output unit r.
// Layout for kLinear: W (1 x d_in), b (1).
struct ModelParams {
  ModelKind kind = ModelKind::kTwoHidden;
  int d_in = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

std::size_t param_count(ModelKind kind, int d_in);

// Deterministic initialization: weights uniform on
// [-sqrt(3/fan_in), +sqrt(3/fan_in)] (entry standard deviation 1/sqrt(fan_in)),
// biases zero. Draws come from Rng (mt19937_64) in layout order, so a given
// (seed, d_in, kind) yields bit-identical parameters on every platform.
ModelParams init_params(std::uint64_t seed, int d_in,
                        ModelKind kind = ModelKind::kTwoHidden);

// Scalar logit (kTwoHidden) or linear output (kLinear).
double forward(const ModelParams& params, std::span<const double> x);

// kTwoHidden: binary cross-entropy with logits, log(1 + e^logit) - y*logit,
// evaluated in the stable branch form. Requires y in {0, 1}.
// kLinear: the raw output w.x + b; y is ignored.
double loss(const ModelParams& params, std::span<const double> x, double y);

// Exact gradient of loss() w.r.t. the flat parameter vector (same layout).
std::vector<double> grad_params(const ModelParams& params,
                                std::span<const double> x, double y);

// Exact gradient of loss() w.r.t. the input x.
std::vector<double> grad_input(const ModelParams& params,
                               std::span<const double> x, double y);

// Reusable buffers for the hot inner-ascent loop. The *_into variants avoid
// per-call allocation; they produce the same values as the plain functions.
struct ModelWorkspace {
  std::vector<double> pre1, h1, pre2, h2, delta1, delta2;
};

double loss_with(const ModelParams& params, std::span<const double> x,
                 double y, ModelWorkspace& ws);
void grad_input_into(const ModelParams& params, std::span<const double> x,
                     double y, ModelWorkspace& ws, std::vector<double>& out);
void grad_params_into(const ModelParams& params, std::span<const double> x,
                      double y, ModelWorkspace& ws, std::vector<double>& out);

// Numerically stable scalar pieces, shared with the tests.
double stable_sigmoid(double t);
double stable_softplus(double t);
double elu(double v);
double elu_derivative(double v);

}  // namespace gdro
