#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffbbo/common.hpp"

namespace diffbbo::bench {

/// Full experiment configuration. Defaults are the reference protocol
/// (16 iterations of 100 queries, 5 members, weight grid 0.6..1.0,
/// condition dropout 0.15, lr 0.001); `apply_desk_preset` switches to the
/// laptop-sized variant.
struct RunSettings {
  std::string task;
  std::uint64_t seed = 0;

  int iterations = 16;
  int batch = 100;
  int ensemble = 5;
  std::vector<double> weights{0.6, 0.7, 0.8, 0.9, 1.0};
  double guidance = 2.0;
  std::string acquisition_mode = "log";  // log | raw
  std::string selection = "uae";         // uae | fixed
  double fixed_weight = 1.0;             // read when selection == fixed
  double epsilon_floor = 1e-12;

  double percentile_lo = 0.25;
  double percentile_hi = 0.5;
  int pool_size = 1000;

  int epochs = 100;
  int train_batch_size = 256;
  double lr = 1e-3;
  double p_uncond = 0.15;
  double validation_fraction = 0.1;

  int diffusion_steps = 100;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  std::vector<int> hidden_dims{1024, 1024};
  std::string activation = "relu";  // relu | tanh

  std::string output = "results";

  bool operator==(const RunSettings&) const = default;
};

/// Desk-scale overrides: K=16, N=20, M=3, T=50, hidden width 64, and a
/// matching pool/epoch budget.
void apply_desk_preset(RunSettings& settings);

/// Strict parse: unknown keys are errors, `task` is required, and a missing
/// `seed` falls back to the DIFFBBO_SEED environment variable, then 0.
RunSettings parse_settings_json(const nlohmann::json& j);
RunSettings parse_config(const std::string& path);

nlohmann::json to_json(const RunSettings& settings);

}  // namespace diffbbo::bench
