#include "diffbbo/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace diffbbo::nn {

namespace {

void check_net(const DenseNet& net) {
  check_arg(net.layer_dims.size() >= 2, "DenseNet needs at least 2 layer dims");
  check_arg(net.weights.size() == net.layer_dims.size() - 1 &&
                net.biases.size() == net.weights.size(),
            "DenseNet layer storage inconsistent with layer_dims");
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto in = static_cast<std::size_t>(net.layer_dims[l]);
    const auto out = static_cast<std::size_t>(net.layer_dims[l + 1]);
    check_arg(net.weights[l].size() == in * out && net.biases[l].size() == out,
              "DenseNet weight shape mismatch at layer " + std::to_string(l));
  }
}

double activate(double z, Activation act) {
  return act == Activation::kRelu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// Derivative expressed through the activation value a = act(z).
double activate_deriv(double a, Activation act) {
  return act == Activation::kRelu ? (a > 0.0 ? 1.0 : 0.0) : 1.0 - a * a;
}

// Activations a[0..L], a[0] = input, a[L] = linear output.
std::vector<Vec> forward_trace(const DenseNet& net, const Vec& input) {
  check_arg(static_cast<int>(input.size()) == net.input_dim(),
            "forward: input length " + std::to_string(input.size()) +
                " does not match layer_dims[0] = " + std::to_string(net.input_dim()));
  const std::size_t layers = net.layer_count();
  std::vector<Vec> a(layers + 1);
  a[0] = input;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(net.layer_dims[l]);
    const auto out = static_cast<std::size_t>(net.layer_dims[l + 1]);
    Vec next(out);
    const Vec& w = net.weights[l];
    const Vec& prev = a[l];
    for (std::size_t o = 0; o < out; ++o) {
      double z = net.biases[l][o];
      const double* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * prev[i];
      next[o] = (l + 1 == layers) ? z : activate(z, net.activation);
    }
    a[l + 1] = std::move(next);
  }
  return a;
}

struct FlatIndex {
  std::size_t layer;
  bool is_weight;
  std::size_t offset;  // within the weight or bias block of that layer
};

FlatIndex locate_parameter(const DenseNet& net, std::size_t flat) {
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    if (flat < net.weights[l].size()) return {l, true, flat};
    flat -= net.weights[l].size();
    if (flat < net.biases[l].size()) return {l, false, flat};
    flat -= net.biases[l].size();
  }
  throw std::out_of_range("parameter index out of range");
}

double& parameter_ref(DenseNet& net, const FlatIndex& idx) {
  return idx.is_weight ? net.weights[idx.layer][idx.offset]
                       : net.biases[idx.layer][idx.offset];
}

std::string parameter_path(const DenseNet& net, const FlatIndex& idx) {
  if (!idx.is_weight)
    return "layer" + std::to_string(idx.layer) + ".bias[" + std::to_string(idx.offset) + "]";
  const auto in = static_cast<std::size_t>(net.layer_dims[idx.layer]);
  return "layer" + std::to_string(idx.layer) + ".weight[" +
         std::to_string(idx.offset / in) + "," + std::to_string(idx.offset % in) + "]";
}

void check_batch(const DenseNet& net, const std::vector<Vec>& inputs,
                 const std::vector<Vec>& targets) {
  check_arg(!inputs.empty(), "empty batch");
  check_arg(inputs.size() == targets.size(), "inputs/targets length mismatch");
  for (const auto& t : targets)
    check_arg(static_cast<int>(t.size()) == net.output_dim(),
              "target dimension does not match network output");
}

}  // namespace

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

DenseNet make_dense_net(const std::vector<int>& layer_dims, Activation activation,
                        std::uint64_t seed) {
  check_arg(layer_dims.size() >= 2, "layer_dims needs at least input and output");
  for (int d : layer_dims) check_arg(d > 0, "layer dims must be positive");
  DenseNet net;
  net.layer_dims = layer_dims;
  net.activation = activation;
  std::mt19937_64 engine(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const auto in = static_cast<std::size_t>(layer_dims[l]);
    const auto out = static_cast<std::size_t>(layer_dims[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    Vec w(in * out);
    for (auto& x : w) x = uniform(engine);
    Vec b(out);
    for (auto& x : b) x = uniform(engine);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

Vec forward(const DenseNet& net, const Vec& input) {
  check_net(net);
  return forward_trace(net, input).back();
}

Grads zero_grads(const DenseNet& net) {
  Grads g;
  g.weights.reserve(net.layer_count());
  g.biases.reserve(net.layer_count());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    g.weights.emplace_back(net.weights[l].size(), 0.0);
    g.biases.emplace_back(net.biases[l].size(), 0.0);
  }
  return g;
}

LossAndGrads mse_loss_and_grads(const DenseNet& net, const std::vector<Vec>& inputs,
                                const std::vector<Vec>& targets) {
  check_net(net);
  check_batch(net, inputs, targets);
  const std::size_t layers = net.layer_count();
  const double inv_batch = 1.0 / static_cast<double>(inputs.size());

  LossAndGrads result;
  result.grads = zero_grads(net);

  for (std::size_t item = 0; item < inputs.size(); ++item) {
    const auto a = forward_trace(net, inputs[item]);
    const Vec& out = a[layers];
    const Vec& target = targets[item];

    Vec delta(out.size());
    for (std::size_t o = 0; o < out.size(); ++o) {
      const double err = out[o] - target[o];
      result.loss += err * err * inv_batch;
      delta[o] = 2.0 * err * inv_batch;
    }

    for (std::size_t k = layers; k >= 1; --k) {
      const std::size_t l = k - 1;
      const auto in = static_cast<std::size_t>(net.layer_dims[l]);
      const auto out_dim = static_cast<std::size_t>(net.layer_dims[l + 1]);
      const Vec& prev = a[l];
      Vec& gw = result.grads.weights[l];
      Vec& gb = result.grads.biases[l];
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double d = delta[o];
        double* row = gw.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) row[i] += d * prev[i];
        gb[o] += d;
      }
      if (l == 0) break;
      Vec next_delta(in, 0.0);
      const Vec& w = net.weights[l];
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double d = delta[o];
        const double* row = w.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) next_delta[i] += row[i] * d;
      }
      for (std::size_t i = 0; i < in; ++i)
        next_delta[i] *= activate_deriv(prev[i], net.activation);
      delta = std::move(next_delta);
    }
  }
  return result;
}

double mse_loss(const DenseNet& net, const std::vector<Vec>& inputs,
                const std::vector<Vec>& targets) {
  check_net(net);
  check_batch(net, inputs, targets);
  double loss = 0.0;
  for (std::size_t item = 0; item < inputs.size(); ++item) {
    const Vec out = forward_trace(net, inputs[item]).back();
    loss += squared_distance(out, targets[item]);
  }
  return loss / static_cast<double>(inputs.size());
}

AdamState make_adam_state(const DenseNet& net, double lr) {
  check_arg(lr > 0.0, "learning rate must be positive");
  AdamState state;
  state.first_moment = zero_grads(net);
  state.second_moment = zero_grads(net);
  state.lr = lr;
  return state;
}

void adam_step(DenseNet& net, AdamState& state, const Grads& grads) {
  check_net(net);
  check_arg(grads.weights.size() == net.layer_count() &&
                grads.biases.size() == net.layer_count(),
            "gradient shape does not match network");
  check_arg(state.first_moment.weights.size() == net.layer_count(),
            "Adam state shape does not match network");

  std::size_t flat = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    check_arg(grads.weights[l].size() == net.weights[l].size() &&
                  grads.biases[l].size() == net.biases[l].size(),
              "gradient shape mismatch at layer " + std::to_string(l));
    for (double g : grads.weights[l]) {
      if (!std::isfinite(g))
        throw numeric_error("non-finite gradient at " +
                            parameter_path(net, locate_parameter(net, flat)));
      ++flat;
    }
    for (double g : grads.biases[l]) {
      if (!std::isfinite(g))
        throw numeric_error("non-finite gradient at " +
                            parameter_path(net, locate_parameter(net, flat)));
      ++flat;
    }
  }

  state.step_count += 1;
  const auto t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);

  auto update_block = [&](Vec& params, Vec& m, Vec& v, const Vec& g) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      params[i] -= state.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + state.eps);
    }
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    update_block(net.weights[l], state.first_moment.weights[l],
                 state.second_moment.weights[l], grads.weights[l]);
    update_block(net.biases[l], state.first_moment.biases[l],
                 state.second_moment.biases[l], grads.biases[l]);
  }
}

GradCheckReport compare_gradients(const DenseNet& net, const std::vector<Vec>& inputs,
                                  const std::vector<Vec>& targets, const Grads& analytic,
                                  const GradCheckOptions& options) {
  check_net(net);
  check_batch(net, inputs, targets);

  const std::size_t total = net.parameter_count();
  std::vector<std::size_t> indices(total);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (total > options.max_checks) {
    const std::size_t keep = std::max<std::size_t>(100, options.max_checks);
    std::mt19937_64 engine(splitmix64(0x6772616463686bULL ^ total));
    std::shuffle(indices.begin(), indices.end(), engine);
    indices.resize(keep);
  }

  DenseNet probe = net;
  GradCheckReport report;
  report.checked_parameters = indices.size();
  for (std::size_t flat : indices) {
    const FlatIndex where = locate_parameter(probe, flat);
    double& param = parameter_ref(probe, where);
    const double saved = param;
    param = saved + options.step;
    const double loss_plus = mse_loss(probe, inputs, targets);
    param = saved - options.step;
    const double loss_minus = mse_loss(probe, inputs, targets);
    param = saved;

    const double numeric = (loss_plus - loss_minus) / (2.0 * options.step);
    const double analytic_g = where.is_weight ? analytic.weights[where.layer][where.offset]
                                              : analytic.biases[where.layer][where.offset];
    const double scale = std::max(std::abs(numeric), std::abs(analytic_g));
    const double err = scale < options.absolute_floor
                           ? std::abs(numeric - analytic_g)
                           : std::abs(numeric - analytic_g) / scale;
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_parameter_index = parameter_path(probe, where);
      report.worst_analytic = analytic_g;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

GradCheckReport finite_diff_check(const DenseNet& net, const std::vector<Vec>& inputs,
                                  const std::vector<Vec>& targets,
                                  const GradCheckOptions& options) {
  const auto lag = mse_loss_and_grads(net, inputs, targets);
  return compare_gradients(net, inputs, targets, lag.grads, options);
}

}  // namespace diffbbo::nn
