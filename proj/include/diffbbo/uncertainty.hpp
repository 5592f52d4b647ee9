#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "diffbbo/common.hpp"
#include "diffbbo/diffusion.hpp"

namespace diffbbo::uncertainty {

/// M independently seeded diffusion models sharing data_dim, schedule, and
/// architecture; the empirical stand-in for the parameter posterior.
struct Ensemble {
  std::vector<diffusion::DiffusionModel> members;
  std::vector<std::uint64_t> member_seeds;
  std::vector<double> member_final_val_losses;  // NaN when trained for 0 epochs

  int size() const { return static_cast<int>(members.size()); }
};

/// Trains one member per seed: the seed drives both the weight init and the
/// corruption/minibatch stream. Members differ only by seed.
Ensemble train_ensemble_with_seeds(const std::vector<diffusion::TrainExample>& data,
                                   const diffusion::TrainConfig& train_config,
                                   const diffusion::ModelConfig& model_config,
                                   const std::vector<std::uint64_t>& seeds);

Ensemble train_ensemble(const std::vector<diffusion::TrainExample>& data,
                        const diffusion::TrainConfig& train_config,
                        const diffusion::ModelConfig& model_config, int members,
                        std::uint64_t base_seed);

/// Within-model / between-model split of the sample-norm statistics.
/// Population variances throughout, so aleatoric + epistemic equals the
/// pooled population variance of all M*n norms exactly.
struct UncertaintyEstimate {
  double aleatoric = 0.0;
  double epistemic = 0.0;
  std::vector<double> per_model_mean_norms;
  std::vector<double> per_model_norm_variances;
  int n_per_model = 0;
};

/// Statistical core over a rectangular grid of norms (one row per member).
UncertaintyEstimate decompose_norms(const std::vector<std::vector<double>>& member_norms);

/// Draws n samples per member at condition y and decomposes the norms.
/// Per-sample noise streams are shared across members, so identical members
/// give exactly zero epistemic variance.
UncertaintyEstimate decompose(const Ensemble& ensemble, double y, int n_per_model,
                              double guidance, std::mt19937_64& engine);

/// Diagonal first and second moments of the state at one denoising step.
struct MomentState {
  Vec mean;
  Vec variance;
};

/// One step of the discrete-time moment recursion for
/// x_{t-1} = x_t / 2 + s + eps, eps ~ N(0, I):
///   mean'     = mean / 2 + score_mean
///   variance' = variance / 4 + score_var + cross_cov + 1
/// The unit coefficient on cross_cov follows from expanding
/// Var(x/2 + s); `propagate_moments_half_cross` computes the halved-cross
/// variant for side-by-side reporting, and the MC oracle below adjudicates.
MomentState propagate_moments(const MomentState& state, const Vec& score_mean,
                              const Vec& score_var, const Vec& cross_cov);

MomentState propagate_moments_half_cross(const MomentState& state, const Vec& score_mean,
                                         const Vec& score_var, const Vec& cross_cov);

/// Closes the recursion over a linear score s(x) = a*x + b, for which
/// score_var = a^2 * variance and cross_cov = a * variance. Returns the
/// state after each of `steps` steps.
std::vector<MomentState> propagate_linear(double a, double b, const MomentState& init,
                                          int steps, bool half_cross = false);

/// Independent check: simulates x' = x/2 + (a*x + b) + eps over `draws`
/// trajectories and reports empirical per-step moments.
std::vector<MomentState> mc_moment_oracle(double a, double b, const MomentState& init,
                                          int steps, int draws, std::mt19937_64& engine);

}  // namespace diffbbo::uncertainty
