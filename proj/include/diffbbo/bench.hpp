#pragma once

#include <utility>
#include <vector>

#include "diffbbo/config.hpp"
#include "diffbbo/optimizer.hpp"
#include "diffbbo/results.hpp"
#include "diffbbo/tasks.hpp"

namespace diffbbo::bench {

optimizer::LoopConfig to_loop_config(const RunSettings& settings);

/// Seeded uniform designs with oracle labels; the stand-in for a
/// pre-collected pool. These evaluations happen before the query budget
/// starts counting.
std::vector<std::pair<Vec, double>> build_pool(const tasks::TaskSpec& task, int size,
                                               std::uint64_t seed);

optimizer::Dataset build_initial_dataset(const tasks::TaskSpec& task,
                                         const RunSettings& settings);

/// Runs the configured method (uae or fixed-w) once.
optimizer::RunTrajectory run_experiment(const RunSettings& settings);

/// UaE, one fixed-conditioning run per weight, and the random baseline, all
/// from the same seed and initial dataset.
std::vector<optimizer::RunTrajectory> run_ablation(const RunSettings& settings,
                                                   const std::vector<double>& fixed_weights);

}  // namespace diffbbo::bench
