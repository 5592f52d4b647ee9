#include "diffbbo/bench.hpp"

#include <algorithm>

namespace diffbbo::bench {

namespace {

constexpr std::uint64_t kPoolTag = 0x706f6f6cULL;

}  // namespace

optimizer::LoopConfig to_loop_config(const RunSettings& settings) {
  optimizer::LoopConfig config;
  config.iterations = settings.iterations;
  config.batch = settings.batch;
  config.ensemble_size = settings.ensemble;
  config.weights = settings.weights;
  config.guidance = settings.guidance;
  config.seed = settings.seed;

  config.acquisition.mode = settings.acquisition_mode == "raw"
                                ? acquisition::ScoreMode::kRaw
                                : acquisition::ScoreMode::kLog;
  config.acquisition.epsilon_floor = settings.epsilon_floor;
  if (settings.selection == "fixed") config.acquisition.fixed_weight = settings.fixed_weight;

  config.train.epochs = settings.epochs;
  config.train.batch_size = settings.train_batch_size;
  config.train.lr = settings.lr;
  config.train.p_uncond = settings.p_uncond;
  config.train.validation_fraction = settings.validation_fraction;

  config.model.steps = settings.diffusion_steps;
  config.model.beta_min = settings.beta_min;
  config.model.beta_max = settings.beta_max;
  config.model.hidden_dims = settings.hidden_dims;
  config.model.activation =
      settings.activation == "tanh" ? nn::Activation::kTanh : nn::Activation::kRelu;
  return config;
}

std::vector<std::pair<Vec, double>> build_pool(const tasks::TaskSpec& task, int size,
                                               std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<std::pair<Vec, double>> pool;
  pool.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    Vec design = tasks::random_design(task, engine);
    const double value = tasks::eval_oracle(task, design);
    pool.push_back({std::move(design), value});
  }
  return pool;
}

optimizer::Dataset build_initial_dataset(const tasks::TaskSpec& task,
                                         const RunSettings& settings) {
  const auto pool =
      build_pool(task, settings.pool_size, mix_seed(settings.seed, kPoolTag));
  return optimizer::init_dataset(pool, settings.percentile_lo, settings.percentile_hi);
}

optimizer::RunTrajectory run_experiment(const RunSettings& settings) {
  const auto task = tasks::make_task(settings.task);
  const auto data = build_initial_dataset(task, settings);
  auto trajectory = optimizer::run(task, data, to_loop_config(settings));
  if (settings.selection == "fixed")
    trajectory.method = "fixed-" + format_weight(settings.fixed_weight);
  return trajectory;
}

std::vector<optimizer::RunTrajectory> run_ablation(const RunSettings& settings,
                                                   const std::vector<double>& fixed_weights) {
  check_arg(!fixed_weights.empty(), "ablation needs at least one fixed weight");
  const auto task = tasks::make_task(settings.task);
  const auto data = build_initial_dataset(task, settings);

  std::vector<optimizer::RunTrajectory> trajectories;

  RunSettings uae_settings = settings;
  uae_settings.selection = "uae";
  trajectories.push_back(optimizer::run(task, data, to_loop_config(uae_settings)));

  for (const double w : fixed_weights) {
    RunSettings fixed_settings = settings;
    fixed_settings.selection = "fixed";
    fixed_settings.fixed_weight = w;
    if (std::find(fixed_settings.weights.begin(), fixed_settings.weights.end(), w) ==
        fixed_settings.weights.end())
      fixed_settings.weights.push_back(w);
    auto trajectory = optimizer::run(task, data, to_loop_config(fixed_settings));
    trajectory.method = "fixed-" + format_weight(w);
    trajectories.push_back(std::move(trajectory));
  }

  trajectories.push_back(
      optimizer::random_baseline(task, settings.iterations, settings.batch, settings.seed));
  return trajectories;
}

}  // namespace diffbbo::bench
