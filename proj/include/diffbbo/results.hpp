#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffbbo/config.hpp"
#include "diffbbo/optimizer.hpp"

namespace diffbbo::bench {

inline constexpr const char* kCsvHeader =
    "iter,method,chosen_w,y_star_norm,y_star_raw,epistemic,aleatoric,best_so_far,gap,"
    "oracle_calls";

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);
double parse_double(const std::string& text);

/// Weight labels for method names: "0.6", "1.0" (a bare integer gains ".0").
std::string format_weight(double w);

/// Side-by-side record of the discrete moment recursion against the MC
/// oracle, including the halved cross-covariance variant of the variance
/// update for comparison.
struct MomentDiagnosticRow {
  int step = 0;
  double analytic_mean = 0.0;
  double analytic_var = 0.0;
  double half_cross_var = 0.0;
  double mc_mean = 0.0;
  double mc_var = 0.0;
  double se_mean = 0.0;
  double se_var = 0.0;
  bool mean_within = false;
  bool var_within = false;
  bool half_cross_var_within = false;
};

struct MomentDiagnosticCase {
  double a = 0.0;
  double b = 0.0;
  double init_mean = 0.0;
  double init_var = 0.0;
  std::vector<MomentDiagnosticRow> rows;
  bool pass = false;                 // analytic within 3 SE at every step
  bool half_cross_rejected = false;  // halved variant outside 3 SE somewhere
};

struct MomentDiagnostic {
  int draws = 0;
  int steps = 0;
  std::vector<MomentDiagnosticCase> cases;
  bool all_pass = false;
  bool half_cross_rejected_for_nonzero_a = false;
};

MomentDiagnostic run_moment_diagnostic(std::uint64_t seed, int draws = 100000, int steps = 4);

/// Largest |aleatoric + epistemic - pooled population variance| over
/// `trials` random stub norm grids (M in 2..6, n in 2..16).
double decomposition_residual_scan(std::uint64_t seed, int trials);

nlohmann::json to_json(const MomentDiagnostic& diagnostic);

void write_results_csv(std::span<const optimizer::RunTrajectory> trajectories,
                       const std::string& path);

/// Sidecar metadata: config snapshot, seed, wall clock, the moment
/// diagnostic, and completion flags. The `run_stamp` object (timestamp and
/// wall clock) is the only run-date-dependent field in either output file.
void write_results_json(const RunSettings& settings,
                        std::span<const optimizer::RunTrajectory> trajectories,
                        const MomentDiagnostic& diagnostic, double wallclock_seconds,
                        const std::string& timestamp, const std::string& path);

struct CsvRow {
  int iter = 0;
  std::string method;
  double chosen_w = 0.0;
  double y_star_norm = 0.0;
  double y_star_raw = 0.0;
  double epistemic = 0.0;
  double aleatoric = 0.0;
  double best_so_far = 0.0;
  double gap = 0.0;
  long oracle_calls = 0;
};

std::vector<CsvRow> parse_results_csv(const std::string& path);

}  // namespace diffbbo::bench
