#include "diffbbo/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace diffbbo::diffusion {

namespace {

constexpr std::uint64_t kSplitTag = 0x73706c6974ULL;
constexpr std::uint64_t kEpochTag = 0x65706f6368ULL;
constexpr std::uint64_t kValTag = 0x76616cULL;

void check_step(const NoiseSchedule& schedule, int t) {
  if (t < 1 || t > schedule.steps)
    throw std::out_of_range("diffusion step " + std::to_string(t) + " outside [1, " +
                            std::to_string(schedule.steps) + "]");
}

}  // namespace

double NoiseSchedule::beta(int t) const {
  check_step(*this, t);
  return betas[static_cast<std::size_t>(t) - 1];
}

double NoiseSchedule::alpha(int t) const {
  check_step(*this, t);
  return alphas[static_cast<std::size_t>(t) - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_step(*this, t);
  return alpha_bars[static_cast<std::size_t>(t) - 1];
}

NoiseSchedule make_schedule(int steps, double beta_min, double beta_max) {
  check_arg(steps >= 1, "schedule needs at least one step");
  check_arg(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0,
            "betas must satisfy 0 < beta_min <= beta_max < 1");
  NoiseSchedule schedule;
  schedule.steps = steps;
  schedule.betas.resize(steps);
  schedule.alphas.resize(steps);
  schedule.alpha_bars.resize(steps);
  double running = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    const double beta = beta_min + (beta_max - beta_min) * frac;
    schedule.betas[i] = beta;
    schedule.alphas[i] = 1.0 - beta;
    running *= schedule.alphas[i];
    schedule.alpha_bars[i] = running;
  }
  return schedule;
}

DiffusionModel make_model(const ModelConfig& config, std::uint64_t seed) {
  check_arg(config.data_dim >= 1, "data_dim must be positive");
  DiffusionModel model;
  model.data_dim = config.data_dim;
  model.schedule = make_schedule(config.steps, config.beta_min, config.beta_max);
  std::vector<int> dims;
  dims.push_back(config.data_dim + kTimeEmbedDim + 2);
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(config.data_dim);
  model.denoiser = nn::make_dense_net(dims, config.activation, seed);
  return model;
}

Vec denoiser_input(const DiffusionModel& model, const Vec& x_t, int t, Condition cond) {
  check_step(model.schedule, t);
  check_arg(static_cast<int>(x_t.size()) == model.data_dim, "x_t dimension mismatch");
  check_arg(cond.flag == 0 || cond.flag == 1, "condition flag must be 0 or 1");
  check_arg(cond.flag == 1 || cond.value == 0.0, "unconditional token must carry value 0");
  Vec input;
  input.reserve(x_t.size() + kTimeEmbedDim + 2);
  input.insert(input.end(), x_t.begin(), x_t.end());
  const double t_norm = static_cast<double>(t) / model.schedule.steps;
  input.push_back(t_norm);
  input.push_back(std::sin(2.0 * std::numbers::pi * t_norm));
  input.push_back(cond.value);
  input.push_back(static_cast<double>(cond.flag));
  return input;
}

Vec predict_noise(const DiffusionModel& model, const Vec& x_t, int t, Condition cond) {
  return nn::forward(model.denoiser, denoiser_input(model, x_t, t, cond));
}

Vec forward_diffuse(const Vec& x0, int t, const Vec& noise, const NoiseSchedule& schedule) {
  check_step(schedule, t);
  check_arg(noise.size() == x0.size(), "noise dimension mismatch");
  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double spread = std::sqrt(1.0 - ab);
  Vec x_t(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) x_t[i] = signal * x0[i] + spread * noise[i];
  return x_t;
}

CfBatch assemble_cf_batch(const DiffusionModel& model, const std::vector<TrainExample>& batch,
                          double p_uncond, std::mt19937_64& engine) {
  check_arg(!batch.empty(), "empty batch");
  check_arg(p_uncond >= 0.0 && p_uncond <= 1.0, "p_uncond must be in [0,1]");
  std::uniform_int_distribution<int> step_dist(1, model.schedule.steps);
  std::bernoulli_distribution drop(p_uncond);

  CfBatch out;
  out.inputs.reserve(batch.size());
  out.targets.reserve(batch.size());
  out.conditions.reserve(batch.size());
  out.ts.reserve(batch.size());
  for (const auto& example : batch) {
    check_arg(static_cast<int>(example.x0.size()) == model.data_dim,
              "training design dimension mismatch");
    check_arg(example.y >= 0.0 && example.y <= 1.0,
              "conditioning value outside [0,1]; normalize first");
    const int t = step_dist(engine);
    const Vec eps = normal_vec(engine, example.x0.size());
    const Condition cond =
        drop(engine) ? Condition::unconditional() : Condition::conditioned(example.y);
    const Vec x_t = forward_diffuse(example.x0, t, eps, model.schedule);
    out.inputs.push_back(denoiser_input(model, x_t, t, cond));
    out.targets.push_back(eps);
    out.conditions.push_back(cond);
    out.ts.push_back(t);
  }
  return out;
}

nn::LossAndGrads cf_training_loss(const DiffusionModel& model,
                                  const std::vector<TrainExample>& batch, double p_uncond,
                                  std::mt19937_64& engine) {
  const CfBatch assembled = assemble_cf_batch(model, batch, p_uncond, engine);
  auto result = nn::mse_loss_and_grads(model.denoiser, assembled.inputs, assembled.targets);
  if (!std::isfinite(result.loss)) throw numeric_error("non-finite denoising loss");
  return result;
}

double cf_loss(const DiffusionModel& model, const std::vector<TrainExample>& batch,
               double p_uncond, std::mt19937_64& engine) {
  const CfBatch assembled = assemble_cf_batch(model, batch, p_uncond, engine);
  return nn::mse_loss(model.denoiser, assembled.inputs, assembled.targets);
}

std::vector<EpochLoss> train(DiffusionModel& model, const std::vector<TrainExample>& data,
                             const TrainConfig& config) {
  check_arg(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0,
            "validation_fraction must be in [0,1)");
  check_arg(config.epochs >= 0, "epochs must be nonnegative");
  const std::size_t n = data.size();
  check_arg(static_cast<double>(n) * (1.0 - config.validation_fraction) >= 2.0,
            "dataset too small for the requested validation split");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 split_engine(mix_seed(config.seed, kSplitTag));
  std::shuffle(order.begin(), order.end(), split_engine);
  const auto val_count = static_cast<std::size_t>(config.validation_fraction * n);

  std::vector<TrainExample> val_set;
  std::vector<TrainExample> train_set;
  val_set.reserve(val_count);
  train_set.reserve(n - val_count);
  for (std::size_t i = 0; i < n; ++i)
    (i < val_count ? val_set : train_set).push_back(data[order[i]]);

  check_arg(config.batch_size >= 1, "batch_size must be positive");
  check_arg(static_cast<std::size_t>(config.batch_size) <= train_set.size(),
            "batch_size exceeds dataset size after validation split");

  std::mt19937_64 engine(mix_seed(config.seed, kEpochTag));
  nn::AdamState adam = nn::make_adam_state(model.denoiser, config.lr);
  std::vector<std::size_t> train_idx(train_set.size());
  std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});

  std::vector<EpochLoss> curve;
  curve.reserve(config.epochs);
  std::vector<TrainExample> minibatch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), engine);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(train_idx.size(), start + static_cast<std::size_t>(config.batch_size));
      minibatch.clear();
      for (std::size_t i = start; i < stop; ++i) minibatch.push_back(train_set[train_idx[i]]);
      const auto lag = cf_training_loss(model, minibatch, config.p_uncond, engine);
      nn::adam_step(model.denoiser, adam, lag.grads);
      loss_sum += lag.loss * static_cast<double>(minibatch.size());
    }
    EpochLoss epoch_loss;
    epoch_loss.train = loss_sum / static_cast<double>(train_set.size());
    if (val_set.empty()) {
      epoch_loss.validation = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::mt19937_64 val_engine(mix_seed(config.seed, kValTag, static_cast<std::uint64_t>(epoch)));
      epoch_loss.validation = cf_loss(model, val_set, config.p_uncond, val_engine);
    }
    curve.push_back(epoch_loss);
  }
  return curve;
}

Vec reverse_step(const DiffusionModel& model, const Vec& x_t, int t, Condition cond,
                 double guidance, const Vec& z) {
  check_step(model.schedule, t);
  check_arg(static_cast<int>(x_t.size()) == model.data_dim, "x_t dimension mismatch");
  check_arg(z.size() == x_t.size(), "z dimension mismatch");
  check_arg(cond.flag == 1 || guidance == 0.0,
            "guided reverse step requires a conditioned pass");

  Vec eps_hat = predict_noise(model, x_t, t, cond);
  if (guidance != 0.0) {
    const Vec eps_uncond = predict_noise(model, x_t, t, Condition::unconditional());
    for (std::size_t i = 0; i < eps_hat.size(); ++i)
      eps_hat[i] = (1.0 + guidance) * eps_hat[i] - guidance * eps_uncond[i];
  }

  const double beta = model.schedule.beta(t);
  const double noise_coef = beta / std::sqrt(1.0 - model.schedule.alpha_bar(t));
  const double sqrt_alpha = std::sqrt(model.schedule.alpha(t));
  const double sigma = std::sqrt(beta);
  Vec x_prev(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i)
    x_prev[i] = (x_t[i] - noise_coef * eps_hat[i]) / sqrt_alpha + sigma * z[i];
  return x_prev;
}

Vec sample_one(const DiffusionModel& model, double y, double guidance, std::mt19937_64& engine) {
  const Condition cond = Condition::conditioned(y);
  Vec x = normal_vec(engine, static_cast<std::size_t>(model.data_dim));
  const Vec zero(static_cast<std::size_t>(model.data_dim), 0.0);
  for (int t = model.schedule.steps; t >= 1; --t) {
    const Vec z = t > 1 ? normal_vec(engine, x.size()) : zero;
    x = reverse_step(model, x, t, cond, guidance, z);
  }
  return x;
}

std::vector<Vec> sample(const DiffusionModel& model, double y, int count, double guidance,
                        std::mt19937_64& engine) {
  check_arg(count >= 1, "sample count must be positive");
  check_arg(y >= 0.0 && y <= 1.0, "conditioning value outside [0,1]");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
  for (auto& s : seeds) s = engine();
  std::vector<Vec> samples;
  samples.reserve(seeds.size());
  for (const auto s : seeds) {
    std::mt19937_64 sub(s);
    samples.push_back(sample_one(model, y, guidance, sub));
  }
  return samples;
}

}  // namespace diffbbo::diffusion
