#include "diffbbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diffbbo::acquisition {

CandidateSet construct_candidates(double phi, std::span<const double> weights,
                                  double upper_bound) {
  check_arg(phi >= 0.0, "phi must be nonnegative; normalize first");
  check_arg(!weights.empty(), "weight set must be nonempty");
  check_arg(upper_bound > 0.0, "upper bound must be positive");
  for (double w : weights) check_arg(w > 0.0, "weights must be positive");

  CandidateSet set;
  set.upper_bound = upper_bound;
  set.weights.assign(weights.begin(), weights.end());
  set.values.reserve(weights.size());
  for (double w : weights) set.values.push_back(std::clamp(w * phi, 0.0, upper_bound));
  return set;
}

double uae_score(double y, double epistemic, const AcquisitionConfig& config) {
  check_arg(y >= 0.0, "candidate value must be nonnegative");
  check_arg(epistemic >= 0.0, "epistemic estimate must be nonnegative");
  if (config.mode == ScoreMode::kRaw) return y - epistemic;
  const double eps = config.epsilon_floor;
  return std::log(y + eps) - std::log(epistemic + eps);
}

Selection select(const CandidateSet& candidates, const EstimateProvider& estimate_at,
                 const AcquisitionConfig& config) {
  check_arg(candidates.size() >= 1, "candidate set must be nonempty");

  if (config.fixed_weight.has_value()) {
    const double w = *config.fixed_weight;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates.weights[i] == w) {
        Selection sel;
        sel.y_star = candidates.values[i];
        sel.w_star = w;
        sel.alpha_star = std::numeric_limits<double>::quiet_NaN();
        sel.index = i;
        return sel;
      }
    }
    throw std::invalid_argument("fixed weight not present in the candidate set");
  }

  Selection best;
  bool have_best = false;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double score = uae_score(candidates.values[i], estimate_at(i).epistemic, config);
    const bool wins = !have_best || score > best_score ||
                      (score == best_score && candidates.weights[i] > best.w_star);
    if (wins) {
      best.y_star = candidates.values[i];
      best.w_star = candidates.weights[i];
      best.alpha_star = score;
      best.index = i;
      best_score = score;
      have_best = true;
    }
  }
  return best;
}

Selection select(const CandidateSet& candidates,
                 std::span<const uncertainty::UncertaintyEstimate> estimates,
                 const AcquisitionConfig& config) {
  check_arg(estimates.size() == candidates.size(),
            "estimates must align one-to-one with candidates");
  return select(
      candidates, [&](std::size_t i) { return estimates[i]; }, config);
}

}  // namespace diffbbo::acquisition
