#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diffbbo/common.hpp"

namespace diffbbo::nn {

enum class Activation { kRelu, kTanh };

/// Fully connected network. Hidden layers use `activation`, the output layer
/// is linear. Weights are row-major (out x in) per layer.
struct DenseNet {
  std::vector<int> layer_dims;
  std::vector<Vec> weights;
  std::vector<Vec> biases;
  Activation activation = Activation::kRelu;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;
};

/// Seeded init, uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
DenseNet make_dense_net(const std::vector<int>& layer_dims, Activation activation,
                        std::uint64_t seed);

Vec forward(const DenseNet& net, const Vec& input);

/// Parameter-shaped gradient (or moment) storage.
struct Grads {
  std::vector<Vec> weights;
  std::vector<Vec> biases;
};

Grads zero_grads(const DenseNet& net);

struct LossAndGrads {
  double loss = 0.0;
  Grads grads;
};

/// loss = mean over the batch of ||net(x) - target||^2, gradients are exact
/// reverse-mode derivatives with respect to every weight and bias.
LossAndGrads mse_loss_and_grads(const DenseNet& net, const std::vector<Vec>& inputs,
                                const std::vector<Vec>& targets);

/// Forward-only variant of the loss above.
double mse_loss(const DenseNet& net, const std::vector<Vec>& inputs,
                const std::vector<Vec>& targets);

struct AdamState {
  Grads first_moment;
  Grads second_moment;
  std::int64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const DenseNet& net, double lr);

/// Bias-corrected Adam update, in place. Throws numeric_error naming the
/// parameter path if any gradient component is non-finite.
void adam_step(DenseNet& net, AdamState& state, const Grads& grads);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter_index;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked_parameters = 0;
};

struct GradCheckOptions {
  double step = 1e-5;
  // Check every parameter up to this many; beyond it, a seeded random subset
  // of max(100, max_checks) coordinates is audited.
  std::size_t max_checks = 512;
  // Below this magnitude the error is reported absolutely instead of
  // relatively (covers zero-gradient points such as loss minima).
  double absolute_floor = 1e-6;
};

/// Central finite differences of the MSE loss against a caller-supplied
/// gradient; `finite_diff_check` audits the analytic gradients themselves.
GradCheckReport compare_gradients(const DenseNet& net, const std::vector<Vec>& inputs,
                                  const std::vector<Vec>& targets, const Grads& analytic,
                                  const GradCheckOptions& options = {});

GradCheckReport finite_diff_check(const DenseNet& net, const std::vector<Vec>& inputs,
                                  const std::vector<Vec>& targets,
                                  const GradCheckOptions& options = {});

}  // namespace diffbbo::nn
