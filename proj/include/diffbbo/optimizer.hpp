#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diffbbo/acquisition.hpp"
#include "diffbbo/common.hpp"
#include "diffbbo/diffusion.hpp"
#include "diffbbo/tasks.hpp"
#include "diffbbo/uncertainty.hpp"

namespace diffbbo::optimizer {

/// Affine map of raw objective values onto [0,1], frozen at construction.
/// Values outside the frozen range map outside [0,1]; consumers that require
/// the conditioning range clamp explicitly.
class Normalizer {
 public:
  Normalizer(double y_min, double y_max);

  double normalize(double y_raw) const { return (y_raw - y_min_) / (y_max_ - y_min_); }
  double denormalize(double y) const { return y_min_ + y * (y_max_ - y_min_); }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }

 private:
  double y_min_;
  double y_max_;
};

/// The growing labeled pool; rows are only ever appended.
struct Dataset {
  std::vector<Vec> designs;
  std::vector<double> raw_values;
  Normalizer normalizer;

  std::size_t size() const { return designs.size(); }
  void append(Vec design, double raw_value);
  double max_raw() const;
};

/// Sorts the pool ascending by value and keeps indices
/// [floor(lo * n), floor(hi * n)); the normalizer freezes to the slice's
/// min/max.
Dataset init_dataset(const std::vector<std::pair<Vec, double>>& pool, double lo, double hi);

/// |y_star - max evaluated|, in raw oracle units.
double sub_optimality_gap(double y_star_raw, std::span<const double> evaluated);

struct IterationRecord {
  int k = 0;
  double chosen_w = 0.0;
  double y_star_norm = 0.0;
  double y_star_raw = 0.0;
  double epistemic = 0.0;
  double aleatoric = 0.0;
  double phi_raw = 0.0;
  double gap = 0.0;
  long oracle_calls = 0;
};

struct RunTrajectory {
  std::string method;
  std::uint64_t seed = 0;
  bool complete = true;
  std::vector<IterationRecord> records;
  std::size_t final_dataset_size = 0;
};

struct LoopConfig {
  int iterations = 16;   // K
  int batch = 100;       // N, oracle queries per iteration
  int ensemble_size = 5; // M
  std::vector<double> weights{0.6, 0.7, 0.8, 0.9, 1.0};
  double guidance = 2.0;
  acquisition::AcquisitionConfig acquisition;
  diffusion::TrainConfig train;
  diffusion::ModelConfig model;  // data_dim is overridden from the task
  std::uint64_t seed = 0;
};

/// Test seam: overrides the query-batch sampler (model-space vectors).
struct RunHooks {
  std::function<std::vector<Vec>(int k, double y_star_norm, const uncertainty::Ensemble&,
                                 std::mt19937_64& engine)>
      sample_batch;
};

/// One full optimization run: per iteration, retrain the ensemble from
/// scratch on the pool, pick the conditioning target, sample the query batch
/// from one uniformly chosen member, query the oracle, and append. Exactly
/// iterations * batch oracle calls; a pure function of (task, data, config).
RunTrajectory run(const tasks::TaskSpec& task, Dataset data, const LoopConfig& config,
                  const RunHooks& hooks = {});

/// Uniform sampling over the design domain with identical bookkeeping.
RunTrajectory random_baseline(const tasks::TaskSpec& task, int iterations, int batch,
                              std::uint64_t seed);

}  // namespace diffbbo::optimizer
