#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "diffbbo/common.hpp"

namespace diffbbo::tasks {

enum class TaskKind { kContinuous, kDiscrete };

/// Synthetic optimization target with a pure, deterministic oracle.
/// Continuous designs are real vectors clipped to [lower, upper] before
/// evaluation; discrete designs are vectors of class indices in [0, alphabet).
struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::kContinuous;
  int dim = 0;
  Vec lower;
  Vec upper;
  int alphabet = 0;
  std::function<double(const Vec&)> oracle;
  std::optional<double> known_max;

  /// Dimension the diffusion model operates in (the one-hot relaxation for
  /// discrete tasks).
  int model_dim() const { return kind == TaskKind::kDiscrete ? dim * alphabet : dim; }
};

std::vector<std::string> task_names();

/// Registry lookup; unknown names raise an error listing the registry.
TaskSpec make_task(const std::string& name);

double eval_oracle(const TaskSpec& task, const Vec& design);

Vec clip_to_bounds(const TaskSpec& task, Vec design);

Vec random_design(const TaskSpec& task, std::mt19937_64& engine);

/// Smoothed one-hot relaxation: per position, 0.6 * onehot + 0.4 * uniform,
/// so the hot coordinate carries 0.6 + 0.4 / alphabet.
inline constexpr double kOneHotMix = 0.6;

Vec encode_discrete(const std::vector<int>& classes, int alphabet);
std::vector<int> decode_discrete(const Vec& relaxed, int alphabet);

/// Design (task space) <-> diffusion model space.
Vec design_to_model(const TaskSpec& task, const Vec& design);
Vec model_to_design(const TaskSpec& task, const Vec& model_vec);

}  // namespace diffbbo::tasks
