#include "diffbbo/uncertainty.hpp"

#include <cmath>
#include <limits>

namespace diffbbo::uncertainty {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974ULL;

void check_moment_args(const MomentState& state, const Vec& score_mean, const Vec& score_var,
                       const Vec& cross_cov) {
  const std::size_t d = state.mean.size();
  check_arg(state.variance.size() == d, "moment state mean/variance dimension mismatch");
  check_arg(score_mean.size() == d && score_var.size() == d && cross_cov.size() == d,
            "score moment dimension mismatch");
  for (double v : state.variance) check_arg(v >= 0.0, "state variance must be nonnegative");
  for (double v : score_var) check_arg(v >= 0.0, "score variance must be nonnegative");
}

MomentState propagate_with_cross_coef(const MomentState& state, const Vec& score_mean,
                                      const Vec& score_var, const Vec& cross_cov,
                                      double cross_coef) {
  check_moment_args(state, score_mean, score_var, cross_cov);
  const std::size_t d = state.mean.size();
  MomentState next;
  next.mean.resize(d);
  next.variance.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    next.mean[i] = 0.5 * state.mean[i] + score_mean[i];
    next.variance[i] =
        0.25 * state.variance[i] + score_var[i] + cross_coef * cross_cov[i] + 1.0;
    if (next.variance[i] < 0.0)
      throw numeric_error("moment propagation produced negative variance at coordinate " +
                          std::to_string(i) + "; cross covariance inconsistent");
  }
  return next;
}

}  // namespace

Ensemble train_ensemble_with_seeds(const std::vector<diffusion::TrainExample>& data,
                                   const diffusion::TrainConfig& train_config,
                                   const diffusion::ModelConfig& model_config,
                                   const std::vector<std::uint64_t>& seeds) {
  check_arg(seeds.size() >= 2, "an ensemble needs at least 2 members");
  Ensemble ensemble;
  ensemble.member_seeds = seeds;
  ensemble.members.reserve(seeds.size());
  for (const auto seed : seeds) {
    diffusion::DiffusionModel model =
        diffusion::make_model(model_config, mix_seed(seed, kInitTag));
    diffusion::TrainConfig member_config = train_config;
    member_config.seed = seed;
    const auto curve = diffusion::train(model, data, member_config);
    ensemble.member_final_val_losses.push_back(
        curve.empty() ? std::numeric_limits<double>::quiet_NaN() : curve.back().validation);
    ensemble.members.push_back(std::move(model));
  }
  return ensemble;
}

Ensemble train_ensemble(const std::vector<diffusion::TrainExample>& data,
                        const diffusion::TrainConfig& train_config,
                        const diffusion::ModelConfig& model_config, int members,
                        std::uint64_t base_seed) {
  check_arg(members >= 2, "an ensemble needs at least 2 members");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(members));
  for (int i = 0; i < members; ++i) seeds[static_cast<std::size_t>(i)] = base_seed + i;
  return train_ensemble_with_seeds(data, train_config, model_config, seeds);
}

UncertaintyEstimate decompose_norms(const std::vector<std::vector<double>>& member_norms) {
  check_arg(member_norms.size() >= 2, "decomposition needs at least 2 members");
  const std::size_t n = member_norms.front().size();
  check_arg(n >= 1, "decomposition needs at least 1 sample per member");
  for (const auto& row : member_norms)
    check_arg(row.size() == n, "all members must contribute the same sample count");

  UncertaintyEstimate estimate;
  estimate.n_per_model = static_cast<int>(n);
  estimate.per_model_mean_norms.reserve(member_norms.size());
  estimate.per_model_norm_variances.reserve(member_norms.size());
  for (const auto& row : member_norms) {
    estimate.per_model_mean_norms.push_back(mean_of(row));
    estimate.per_model_norm_variances.push_back(population_variance(row));
  }
  estimate.aleatoric = mean_of(estimate.per_model_norm_variances);
  estimate.epistemic = population_variance(estimate.per_model_mean_norms);
  return estimate;
}

UncertaintyEstimate decompose(const Ensemble& ensemble, double y, int n_per_model,
                              double guidance, std::mt19937_64& engine) {
  check_arg(ensemble.size() >= 2, "decomposition needs at least 2 members");
  check_arg(n_per_model >= 2, "decomposition needs at least 2 samples per member");
  for (const auto& member : ensemble.members)
    check_arg(member.data_dim == ensemble.members.front().data_dim &&
                  member.schedule.steps == ensemble.members.front().schedule.steps,
              "ensemble members must share dimension and schedule");

  // One noise substream per sample slot, shared by every member.
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_per_model));
  for (auto& s : seeds) s = engine();

  std::vector<std::vector<double>> norms(ensemble.members.size(),
                                         std::vector<double>(seeds.size()));
  for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      std::mt19937_64 sub(seeds[j]);
      const Vec x = diffusion::sample_one(ensemble.members[i], y, guidance, sub);
      norms[i][j] = l2_norm(x);
    }
  }
  return decompose_norms(norms);
}

MomentState propagate_moments(const MomentState& state, const Vec& score_mean,
                              const Vec& score_var, const Vec& cross_cov) {
  return propagate_with_cross_coef(state, score_mean, score_var, cross_cov, 1.0);
}

MomentState propagate_moments_half_cross(const MomentState& state, const Vec& score_mean,
                                         const Vec& score_var, const Vec& cross_cov) {
  return propagate_with_cross_coef(state, score_mean, score_var, cross_cov, 0.5);
}

std::vector<MomentState> propagate_linear(double a, double b, const MomentState& init,
                                          int steps, bool half_cross) {
  check_arg(steps >= 1, "need at least one step");
  check_arg(init.mean.size() == init.variance.size(), "init moment dimension mismatch");
  std::vector<MomentState> states;
  states.reserve(static_cast<std::size_t>(steps));
  MomentState state = init;
  for (int s = 0; s < steps; ++s) {
    const std::size_t d = state.mean.size();
    Vec score_mean(d), score_var(d), cross_cov(d);
    for (std::size_t i = 0; i < d; ++i) {
      score_mean[i] = a * state.mean[i] + b;
      score_var[i] = a * a * state.variance[i];
      cross_cov[i] = a * state.variance[i];
    }
    state = half_cross ? propagate_moments_half_cross(state, score_mean, score_var, cross_cov)
                       : propagate_moments(state, score_mean, score_var, cross_cov);
    states.push_back(state);
  }
  return states;
}

std::vector<MomentState> mc_moment_oracle(double a, double b, const MomentState& init,
                                          int steps, int draws, std::mt19937_64& engine) {
  check_arg(steps >= 1, "need at least one step");
  check_arg(draws >= 10000, "the moment oracle needs at least 1e4 draws");
  check_arg(init.mean.size() == init.variance.size(), "init moment dimension mismatch");
  for (double v : init.variance) check_arg(v >= 0.0, "init variance must be nonnegative");

  const std::size_t d = init.mean.size();
  std::normal_distribution<double> normal;
  std::vector<Vec> state(static_cast<std::size_t>(draws), Vec(d));
  for (auto& x : state)
    for (std::size_t i = 0; i < d; ++i)
      x[i] = init.mean[i] + std::sqrt(init.variance[i]) * normal(engine);

  std::vector<MomentState> trace;
  trace.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    for (auto& x : state)
      for (std::size_t i = 0; i < d; ++i)
        x[i] = 0.5 * x[i] + (a * x[i] + b) + normal(engine);

    MomentState empirical;
    empirical.mean.assign(d, 0.0);
    empirical.variance.assign(d, 0.0);
    for (const auto& x : state)
      for (std::size_t i = 0; i < d; ++i) empirical.mean[i] += x[i];
    for (std::size_t i = 0; i < d; ++i) empirical.mean[i] /= draws;
    for (const auto& x : state)
      for (std::size_t i = 0; i < d; ++i) {
        const double c = x[i] - empirical.mean[i];
        empirical.variance[i] += c * c;
      }
    for (std::size_t i = 0; i < d; ++i) empirical.variance[i] /= draws;
    trace.push_back(std::move(empirical));
  }
  return trace;
}

}  // namespace diffbbo::uncertainty
