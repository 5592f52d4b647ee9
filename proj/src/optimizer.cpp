#include "diffbbo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace diffbbo::optimizer {

namespace {

constexpr std::uint64_t kTrainTag = 0x747261696eULL;
constexpr std::uint64_t kDecomposeTag = 0x6465636f6dULL;
constexpr std::uint64_t kQueryTag = 0x7175657279ULL;
constexpr std::uint64_t kBaselineTag = 0x62617365ULL;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

Normalizer::Normalizer(double y_min, double y_max) : y_min_(y_min), y_max_(y_max) {
  check_arg(y_max > y_min, "degenerate normalizer: y_max must exceed y_min");
}

void Dataset::append(Vec design, double raw_value) {
  designs.push_back(std::move(design));
  raw_values.push_back(raw_value);
}

double Dataset::max_raw() const {
  check_arg(!raw_values.empty(), "dataset is empty");
  return *std::max_element(raw_values.begin(), raw_values.end());
}

Dataset init_dataset(const std::vector<std::pair<Vec, double>>& pool, double lo, double hi) {
  check_arg(pool.size() >= 4, "pool must hold at least 4 labeled designs");
  check_arg(lo >= 0.0 && lo < hi && hi <= 1.0, "percentile slice must satisfy 0 <= lo < hi <= 1");

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pool[a].second < pool[b].second; });

  const auto n = static_cast<double>(pool.size());
  const auto begin = static_cast<std::size_t>(std::floor(lo * n));
  const auto end = static_cast<std::size_t>(std::floor(hi * n));
  check_arg(begin < end, "empty percentile slice");

  double slice_min = pool[order[begin]].second;
  double slice_max = slice_min;
  for (std::size_t i = begin; i < end; ++i) {
    slice_min = std::min(slice_min, pool[order[i]].second);
    slice_max = std::max(slice_max, pool[order[i]].second);
  }

  Dataset data{{}, {}, Normalizer(slice_min, slice_max)};
  data.designs.reserve(end - begin);
  data.raw_values.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    data.designs.push_back(pool[order[i]].first);
    data.raw_values.push_back(pool[order[i]].second);
  }
  return data;
}

double sub_optimality_gap(double y_star_raw, std::span<const double> evaluated) {
  check_arg(!evaluated.empty(), "gap needs at least one evaluated value");
  const double best = *std::max_element(evaluated.begin(), evaluated.end());
  return std::abs(y_star_raw - best);
}

RunTrajectory run(const tasks::TaskSpec& task, Dataset data, const LoopConfig& config,
                  const RunHooks& hooks) {
  check_arg(config.iterations >= 1 && config.batch >= 1 && config.ensemble_size >= 1,
            "iterations, batch, and ensemble size must be positive");
  const bool uae_mode = !config.acquisition.fixed_weight.has_value();
  check_arg(!uae_mode || (config.ensemble_size >= 2 && config.batch >= 2),
            "UaE selection needs at least 2 members and 2 samples per member");
  check_arg(data.size() >= 1, "initial dataset must be nonempty");

  diffusion::ModelConfig model_config = config.model;
  model_config.data_dim = task.model_dim();

  RunTrajectory trajectory;
  trajectory.method = uae_mode
                          ? std::string("uae")
                          : std::string("fixed");  // callers refine fixed-w labels
  trajectory.seed = config.seed;

  for (int k = 1; k <= config.iterations; ++k) {
    // Training pairs in model space; conditioning values clamped into [0,1].
    std::vector<diffusion::TrainExample> pairs;
    pairs.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      pairs.push_back({tasks::design_to_model(task, data.designs[i]),
                       clamp01(data.normalizer.normalize(data.raw_values[i]))});

    diffusion::TrainConfig train_config = config.train;
    const auto split_free =
        static_cast<std::size_t>((1.0 - train_config.validation_fraction) * pairs.size());
    train_config.batch_size =
        std::max(1, std::min(train_config.batch_size, static_cast<int>(split_free)));
    const auto ensemble = uncertainty::train_ensemble(
        pairs, train_config, model_config, config.ensemble_size,
        mix_seed(config.seed, kTrainTag, static_cast<std::uint64_t>(k)));

    const double phi_before = data.max_raw();
    const auto candidates = acquisition::construct_candidates(
        data.normalizer.normalize(phi_before), config.weights, 1.0);

    std::mt19937_64 decompose_engine(
        mix_seed(config.seed, kDecomposeTag, static_cast<std::uint64_t>(k)));
    acquisition::Selection selection;
    uncertainty::UncertaintyEstimate chosen_estimate;
    if (uae_mode) {
      std::vector<uncertainty::UncertaintyEstimate> estimates;
      estimates.reserve(candidates.size());
      for (double value : candidates.values)
        estimates.push_back(uncertainty::decompose(ensemble, value, config.batch,
                                                   config.guidance, decompose_engine));
      selection = acquisition::select(candidates, std::span(estimates), config.acquisition);
      chosen_estimate = estimates[selection.index];
    } else {
      const acquisition::EstimateProvider forbidden =
          [](std::size_t) -> uncertainty::UncertaintyEstimate {
        throw std::logic_error("fixed-weight selection must not read uncertainty estimates");
      };
      selection = acquisition::select(candidates, forbidden, config.acquisition);
      // Recorded for diagnostics only, after selection is already made.
      if (config.ensemble_size >= 2 && config.batch >= 2)
        chosen_estimate = uncertainty::decompose(ensemble, selection.y_star, config.batch,
                                                 config.guidance, decompose_engine);
    }

    std::mt19937_64 query_engine(mix_seed(config.seed, kQueryTag, static_cast<std::uint64_t>(k)));
    std::uniform_int_distribution<int> member_dist(0, ensemble.size() - 1);
    const int member = member_dist(query_engine);
    const std::vector<Vec> batch =
        hooks.sample_batch
            ? hooks.sample_batch(k, selection.y_star, ensemble, query_engine)
            : diffusion::sample(ensemble.members[static_cast<std::size_t>(member)],
                                selection.y_star, config.batch, config.guidance, query_engine);

    std::vector<double> evaluated;
    evaluated.reserve(batch.size());
    bool failed = false;
    for (const auto& model_vec : batch) {
      Vec design = tasks::model_to_design(task, model_vec);
      double value = 0.0;
      try {
        value = tasks::eval_oracle(task, design);
      } catch (const std::exception&) {
        failed = true;
        break;
      }
      data.append(std::move(design), value);
      evaluated.push_back(value);
    }
    if (failed) {
      trajectory.complete = false;
      trajectory.final_dataset_size = data.size();
      return trajectory;
    }

    IterationRecord record;
    record.k = k;
    record.chosen_w = selection.w_star;
    record.y_star_norm = selection.y_star;
    record.y_star_raw = data.normalizer.denormalize(selection.y_star);
    record.epistemic = chosen_estimate.epistemic;
    record.aleatoric = chosen_estimate.aleatoric;
    record.phi_raw = data.max_raw();
    record.gap = sub_optimality_gap(record.y_star_raw, evaluated);
    record.oracle_calls = static_cast<long>(k) * config.batch;
    trajectory.records.push_back(record);
  }
  trajectory.final_dataset_size = data.size();
  return trajectory;
}

RunTrajectory random_baseline(const tasks::TaskSpec& task, int iterations, int batch,
                              std::uint64_t seed) {
  check_arg(iterations >= 1 && batch >= 1, "iterations and batch must be positive");
  RunTrajectory trajectory;
  trajectory.method = "random";
  trajectory.seed = seed;

  double best = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= iterations; ++k) {
    std::mt19937_64 engine(mix_seed(seed, kBaselineTag, static_cast<std::uint64_t>(k)));
    for (int j = 0; j < batch; ++j) {
      const Vec design = tasks::random_design(task, engine);
      best = std::max(best, tasks::eval_oracle(task, design));
    }
    IterationRecord record;
    record.k = k;
    record.phi_raw = best;
    record.oracle_calls = static_cast<long>(k) * batch;
    trajectory.records.push_back(record);
  }
  return trajectory;
}

}  // namespace diffbbo::optimizer
