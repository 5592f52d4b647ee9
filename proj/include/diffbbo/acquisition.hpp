#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "diffbbo/common.hpp"
#include "diffbbo/uncertainty.hpp"

namespace diffbbo::acquisition {

/// Conditioning targets y = clip(w * phi, 0, upper_bound), order-aligned
/// with the weight grid.
struct CandidateSet {
  std::vector<double> weights;
  std::vector<double> values;
  double upper_bound = 1.0;

  std::size_t size() const { return weights.size(); }
};

CandidateSet construct_candidates(double phi, std::span<const double> weights,
                                  double upper_bound = 1.0);

enum class ScoreMode { kRaw, kLog };

struct AcquisitionConfig {
  ScoreMode mode = ScoreMode::kLog;
  double epsilon_floor = 1e-12;
  // Engaged: skip scoring and return the candidate at this weight.
  std::optional<double> fixed_weight;
};

/// Raw: y - epistemic. Log: ln(y + eps) - ln(epistemic + eps), the
/// range-aligned form used for selection by default.
double uae_score(double y, double epistemic, const AcquisitionConfig& config);

struct Selection {
  double y_star = 0.0;
  double w_star = 0.0;
  double alpha_star = 0.0;  // NaN in fixed mode, where no score is computed
  std::size_t index = 0;
};

using EstimateProvider = std::function<uncertainty::UncertaintyEstimate(std::size_t)>;

/// Argmax of the UaE score with ties broken toward the larger weight. In
/// fixed mode the provider is never invoked.
Selection select(const CandidateSet& candidates, const EstimateProvider& estimate_at,
                 const AcquisitionConfig& config);

Selection select(const CandidateSet& candidates,
                 std::span<const uncertainty::UncertaintyEstimate> estimates,
                 const AcquisitionConfig& config);

}  // namespace diffbbo::acquisition
