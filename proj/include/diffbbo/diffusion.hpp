#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "diffbbo/common.hpp"
#include "diffbbo/nn.hpp"

namespace diffbbo::diffusion {

/// Discrete forward-process variance bookkeeping: betas in (0,1), alphas =
/// 1 - betas, alpha_bars their running product. Step indices are 1-based.
struct NoiseSchedule {
  int steps = 0;
  Vec betas;
  Vec alphas;
  Vec alpha_bars;

  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;
};

/// Linear beta schedule from beta_min to beta_max over `steps` steps.
NoiseSchedule make_schedule(int steps, double beta_min, double beta_max);

/// Conditioning input: either a normalized objective value in [0,1] with
/// flag 1, or the unconditional token (flag 0, value pinned to 0). The
/// explicit flag keeps the token distinct from a legitimate y = 0.
struct Condition {
  double value = 0.0;
  int flag = 0;

  static Condition conditioned(double y) { return Condition{y, 1}; }
  static Condition unconditional() { return Condition{0.0, 0}; }
};

inline constexpr int kTimeEmbedDim = 2;

/// Noise-prediction network plus its schedule. The denoiser consumes
/// [x_t | t/T | sin(2*pi*t/T) | condition value | condition flag] and emits
/// a predicted noise vector of dimension data_dim.
struct DiffusionModel {
  nn::DenseNet denoiser;
  NoiseSchedule schedule;
  int data_dim = 0;

  int denoiser_input_dim() const { return data_dim + kTimeEmbedDim + 2; }
};

struct ModelConfig {
  int data_dim = 1;
  int steps = 100;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  std::vector<int> hidden_dims{64, 64};
  nn::Activation activation = nn::Activation::kRelu;
};

DiffusionModel make_model(const ModelConfig& config, std::uint64_t seed);

Vec denoiser_input(const DiffusionModel& model, const Vec& x_t, int t, Condition cond);
Vec predict_noise(const DiffusionModel& model, const Vec& x_t, int t, Condition cond);

/// Closed-form forward corruption:
/// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * noise.
Vec forward_diffuse(const Vec& x0, int t, const Vec& noise, const NoiseSchedule& schedule);

struct TrainExample {
  Vec x0;
  double y = 0.0;  // normalized objective, in [0,1]
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 256;
  double lr = 1e-3;
  double p_uncond = 0.15;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// One corruption draw per item: t ~ U{1..T}, eps ~ N(0,I), and a
/// Bernoulli(p_uncond) condition dropout to the unconditional token.
struct CfBatch {
  std::vector<Vec> inputs;
  std::vector<Vec> targets;  // the injected noise vectors
  std::vector<Condition> conditions;
  std::vector<int> ts;
};

CfBatch assemble_cf_batch(const DiffusionModel& model, const std::vector<TrainExample>& batch,
                          double p_uncond, std::mt19937_64& engine);

/// Denoising loss mean ||eps - eps_hat||^2 over the batch with exact
/// gradients for the denoiser parameters.
nn::LossAndGrads cf_training_loss(const DiffusionModel& model,
                                  const std::vector<TrainExample>& batch, double p_uncond,
                                  std::mt19937_64& engine);

/// Evaluation-only loss on a fresh corruption draw.
double cf_loss(const DiffusionModel& model, const std::vector<TrainExample>& batch,
               double p_uncond, std::mt19937_64& engine);

struct EpochLoss {
  double train = 0.0;
  double validation = 0.0;
};

/// Minibatch Adam on the classifier-free loss; returns per-epoch losses.
/// Pure function of (model, data, config.seed).
std::vector<EpochLoss> train(DiffusionModel& model, const std::vector<TrainExample>& data,
                             const TrainConfig& config);

/// One reverse transition with classifier-free guidance:
/// eps_hat = (1 + g) * eps(cond) - g * eps(uncond), and
/// x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t)
///           + sqrt(beta_t) * z.
/// With guidance 0 the unconditional branch is never evaluated.
Vec reverse_step(const DiffusionModel& model, const Vec& x_t, int t, Condition cond,
                 double guidance, const Vec& z);

/// Full reverse chain from x_T ~ N(0,I), injecting z = 0 at t = 1.
Vec sample_one(const DiffusionModel& model, double y, double guidance, std::mt19937_64& engine);

/// n independent samples; each gets its own substream seeded from `engine`.
std::vector<Vec> sample(const DiffusionModel& model, double y, int count, double guidance,
                        std::mt19937_64& engine);

}  // namespace diffbbo::diffusion
