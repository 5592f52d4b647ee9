#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <optional>
#include <string>
#include <vector>

#include "diffbbo/bench.hpp"
#include "diffbbo/nn.hpp"

namespace {

using namespace diffbbo;

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buffer[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buffer;
}

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> task;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  bool desk = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--task", flags.task, "task name (overrides the config)");
  cmd->add_option("--seed", flags.seed,
                  "seed override (otherwise config, then DIFFBBO_SEED, then 0)");
  cmd->add_option("--out", flags.output, "output path prefix (<out>.csv, <out>.json)");
  cmd->add_flag("--desk", flags.desk,
                "desk-scale preset: K=16 N=20 M=3 T=50 hidden=64, smaller pool/epochs");
}

bench::RunSettings resolve_settings(const CommonFlags& flags) {
  bench::RunSettings settings;
  if (flags.config_path) {
    settings = bench::parse_config(*flags.config_path);
  } else {
    if (!flags.task)
      throw std::runtime_error("either --config or --task is required");
    nlohmann::json j;
    j["task"] = *flags.task;
    settings = bench::parse_settings_json(j);
  }
  if (flags.task) settings.task = *flags.task;
  if (flags.desk) bench::apply_desk_preset(settings);
  if (flags.seed) settings.seed = *flags.seed;
  if (flags.output) settings.output = *flags.output;
  tasks::make_task(settings.task);
  return settings;
}

void emit(const bench::RunSettings& settings,
          const std::vector<optimizer::RunTrajectory>& trajectories, double wallclock_seconds,
          std::uint64_t diagnostic_seed) {
  const auto diagnostic = bench::run_moment_diagnostic(diagnostic_seed);
  const std::string csv_path = settings.output + ".csv";
  const std::string json_path = settings.output + ".json";
  bench::write_results_csv(trajectories, csv_path);
  bench::write_results_json(settings, trajectories, diagnostic, wallclock_seconds,
                            iso_timestamp(), json_path);
  std::printf("wrote %s and %s\n", csv_path.c_str(), json_path.c_str());
}

int cmd_run(const CommonFlags& flags) {
  const auto settings = resolve_settings(flags);
  const auto start = std::chrono::steady_clock::now();
  const auto trajectory = bench::run_experiment(settings);
  const double elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start).count();
  std::printf("%s on %s: final best %.6g after %ld oracle calls (%s)\n",
              trajectory.method.c_str(), settings.task.c_str(),
              trajectory.records.empty() ? 0.0 : trajectory.records.back().phi_raw,
              trajectory.records.empty() ? 0L : trajectory.records.back().oracle_calls,
              trajectory.complete ? "complete" : "INCOMPLETE");
  emit(settings, {trajectory}, elapsed, settings.seed);
  return trajectory.complete ? 0 : 1;
}

int cmd_ablate(const CommonFlags& flags, const std::vector<double>& weights) {
  const auto settings = resolve_settings(flags);
  const auto start = std::chrono::steady_clock::now();
  const auto trajectories = bench::run_ablation(settings, weights);
  const double elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start).count();
  bool all_complete = true;
  for (const auto& trajectory : trajectories) {
    std::printf("%-12s final best %.6g\n", trajectory.method.c_str(),
                trajectory.records.empty() ? 0.0 : trajectory.records.back().phi_raw);
    all_complete = all_complete && trajectory.complete;
  }
  emit(settings, trajectories, elapsed, settings.seed);
  return all_complete ? 0 : 1;
}

int cmd_baseline(const CommonFlags& flags) {
  const auto settings = resolve_settings(flags);
  const auto task = tasks::make_task(settings.task);
  const auto start = std::chrono::steady_clock::now();
  const auto trajectory =
      optimizer::random_baseline(task, settings.iterations, settings.batch, settings.seed);
  const double elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start).count();
  std::printf("random on %s: final best %.6g after %ld oracle calls\n", settings.task.c_str(),
              trajectory.records.back().phi_raw, trajectory.records.back().oracle_calls);
  emit(settings, {trajectory}, elapsed, settings.seed);
  return 0;
}

int cmd_validate_uq(std::uint64_t seed, int draws, int steps) {
  const double residual = bench::decomposition_residual_scan(seed, 50);
  const bool residual_pass = residual <= 1e-12;
  std::printf("uncertainty decomposition: max |aleatoric + epistemic - pooled| = %.3e over 50 "
              "grids (tolerance 1e-12) %s\n",
              residual, residual_pass ? "PASS" : "FAIL");

  const auto diagnostic = bench::run_moment_diagnostic(seed, draws, steps);
  std::printf("moment propagation vs MC oracle (%d draws, %d steps):\n", draws, steps);
  for (const auto& c : diagnostic.cases) {
    std::printf("  a=%+.2f b=%+.2f init=(%.2f, %.2f): %s", c.a, c.b, c.init_mean, c.init_var,
                c.pass ? "PASS" : "FAIL");
    std::printf("  [halved-cross variant %s]\n",
                c.half_cross_rejected ? "rejected" : "not separated");
    for (const auto& r : c.rows)
      std::printf("    step %d: var analytic %.5f, mc %.5f +- %.5f; halved-cross %.5f %s\n",
                  r.step, r.analytic_var, r.mc_var, 3.0 * r.se_var, r.half_cross_var,
                  r.half_cross_var_within ? "(within)" : "(outside)");
  }
  const bool pass =
      residual_pass && diagnostic.all_pass && diagnostic.half_cross_rejected_for_nonzero_a;
  std::printf("moment recursion agreement: %s; halved-cross variant rejected for a != 0: %s\n",
              diagnostic.all_pass ? "PASS" : "FAIL",
              diagnostic.half_cross_rejected_for_nonzero_a ? "yes" : "NO");
  std::printf("validate-uq: %s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int cmd_gradcheck(std::uint64_t seed, int trials) {
  std::mt19937_64 engine(seed);
  std::uniform_int_distribution<int> unit_dist(1, 64);
  std::uniform_int_distribution<int> hidden_dist(0, 2);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<int> dims{unit_dist(engine)};
    for (int h = hidden_dist(engine); h > 0; --h) dims.push_back(unit_dist(engine));
    dims.push_back(unit_dist(engine));
    const auto act = trial % 2 == 0 ? nn::Activation::kRelu : nn::Activation::kTanh;
    const auto net = nn::make_dense_net(dims, act, engine());

    std::vector<Vec> inputs(4, Vec(static_cast<std::size_t>(dims.front())));
    std::vector<Vec> targets(4, Vec(static_cast<std::size_t>(dims.back())));
    for (auto& v : inputs)
      for (auto& x : v) x = uniform(engine);
    for (auto& v : targets)
      for (auto& x : v) x = uniform(engine);

    const auto report = nn::finite_diff_check(net, inputs, targets);
    worst = std::max(worst, report.max_relative_error);
    std::printf("net %2d (%zu params): max relative error %.3e at %s\n", trial,
                net.parameter_count(), report.max_relative_error,
                report.worst_parameter_index.c_str());
  }
  const bool pass = worst < 1e-4;
  std::printf("gradcheck: worst %.3e (tolerance 1e-4) %s\n", worst, pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion-ensemble black-box optimization bench"};
  app.require_subcommand(1);
  app.footer(
      "config defaults: iterations=16, batch=100, ensemble=5, weights=0.6..1.0, guidance=2,\n"
      "acquisition_mode=log, selection=uae, percentile slice [0.25,0.5), pool_size=1000,\n"
      "train: epochs=100 batch_size=256 lr=0.001 p_uncond=0.15 validation_fraction=0.1,\n"
      "model: steps=100 beta 1e-4..0.02 hidden=[1024,1024] activation=relu.\n"
      "seed resolution: --seed flag, then config seed, then DIFFBBO_SEED, then 0.\n"
      "tasks: sphere2d sphere8d ackley8d lookup6 lookup8");

  CommonFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "run the configured optimization loop");
  add_common_flags(run_cmd, run_flags);

  CommonFlags ablate_flags;
  std::vector<double> ablate_weights{0.6, 0.8, 1.0};
  auto* ablate_cmd =
      app.add_subcommand("ablate", "sweep fixed conditioning weights against uae and random");
  add_common_flags(ablate_cmd, ablate_flags);
  ablate_cmd->add_option("--weights", ablate_weights, "fixed weights to sweep")
      ->delimiter(',');

  CommonFlags baseline_flags;
  auto* baseline_cmd = app.add_subcommand("baseline", "run the random-search baseline");
  add_common_flags(baseline_cmd, baseline_flags);

  std::uint64_t uq_seed = 7;
  int uq_draws = 100000;
  int uq_steps = 4;
  auto* uq_cmd = app.add_subcommand(
      "validate-uq", "check the decomposition identity and the moment recursion against MC");
  uq_cmd->add_option("--seed", uq_seed, "seed");
  uq_cmd->add_option("--draws", uq_draws, "MC draws")->check(CLI::Range(10000, 100000000));
  uq_cmd->add_option("--steps", uq_steps, "recursion steps")->check(CLI::PositiveNumber);

  std::uint64_t grad_seed = 2024;
  int grad_trials = 20;
  auto* grad_cmd =
      app.add_subcommand("gradcheck", "audit analytic gradients against central differences");
  grad_cmd->add_option("--seed", grad_seed, "seed");
  grad_cmd->add_option("--trials", grad_trials, "number of random nets")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_flags, ablate_weights);
    if (baseline_cmd->parsed()) return cmd_baseline(baseline_flags);
    if (uq_cmd->parsed()) return cmd_validate_uq(uq_seed, uq_draws, uq_steps);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad_seed, grad_trials);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
