#include "diffbbo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "diffbbo/tasks.hpp"

namespace diffbbo::bench {

namespace {

using nlohmann::json;

const std::set<std::string> kTopLevelKeys{
    "task",          "seed",          "iterations",    "batch",
    "ensemble",      "weights",       "guidance",      "acquisition_mode",
    "selection",     "fixed_weight",  "epsilon_floor", "percentile_lo",
    "percentile_hi", "pool_size",     "train",         "model",
    "output"};
const std::set<std::string> kTrainKeys{"epochs", "batch_size", "lr", "p_uncond",
                                       "validation_fraction"};
const std::set<std::string> kModelKeys{"steps", "beta_min", "beta_max", "hidden", "activation"};

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.contains(key))
      throw std::invalid_argument("unknown config field '" + key + "' in " + where);
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void apply_desk_preset(RunSettings& settings) {
  settings.iterations = 16;
  settings.batch = 20;
  settings.ensemble = 3;
  settings.diffusion_steps = 50;
  settings.hidden_dims = {64, 64};
  settings.epochs = 150;
  settings.train_batch_size = 32;
  settings.pool_size = 512;
}

RunSettings parse_settings_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config root must be a JSON object");
  reject_unknown_keys(j, kTopLevelKeys, "the top level");

  RunSettings settings;
  if (!j.contains("task")) throw std::invalid_argument("missing required config field 'task'");
  settings.task = j.at("task").get<std::string>();

  if (j.contains("seed")) {
    settings.seed = j.at("seed").get<std::uint64_t>();
  } else if (const char* env = std::getenv("DIFFBBO_SEED")) {
    settings.seed = std::strtoull(env, nullptr, 10);
  }

  read_field(j, "iterations", settings.iterations);
  read_field(j, "batch", settings.batch);
  read_field(j, "ensemble", settings.ensemble);
  read_field(j, "weights", settings.weights);
  read_field(j, "guidance", settings.guidance);
  read_field(j, "acquisition_mode", settings.acquisition_mode);
  read_field(j, "selection", settings.selection);
  read_field(j, "fixed_weight", settings.fixed_weight);
  read_field(j, "epsilon_floor", settings.epsilon_floor);
  read_field(j, "percentile_lo", settings.percentile_lo);
  read_field(j, "percentile_hi", settings.percentile_hi);
  read_field(j, "pool_size", settings.pool_size);
  read_field(j, "output", settings.output);

  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown_keys(t, kTrainKeys, "'train'");
    read_field(t, "epochs", settings.epochs);
    read_field(t, "batch_size", settings.train_batch_size);
    read_field(t, "lr", settings.lr);
    read_field(t, "p_uncond", settings.p_uncond);
    read_field(t, "validation_fraction", settings.validation_fraction);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown_keys(m, kModelKeys, "'model'");
    read_field(m, "steps", settings.diffusion_steps);
    read_field(m, "beta_min", settings.beta_min);
    read_field(m, "beta_max", settings.beta_max);
    read_field(m, "hidden", settings.hidden_dims);
    read_field(m, "activation", settings.activation);
  }

  // Resolve names early so errors carry context.
  tasks::make_task(settings.task);
  check_arg(settings.iterations >= 1 && settings.batch >= 1 && settings.ensemble >= 1,
            "iterations, batch, and ensemble must be positive");
  check_arg(settings.acquisition_mode == "log" || settings.acquisition_mode == "raw",
            "acquisition_mode must be 'log' or 'raw'");
  check_arg(settings.selection == "uae" || settings.selection == "fixed",
            "selection must be 'uae' or 'fixed'");
  check_arg(settings.activation == "relu" || settings.activation == "tanh",
            "activation must be 'relu' or 'tanh'");
  check_arg(settings.percentile_lo >= 0.0 && settings.percentile_lo < settings.percentile_hi &&
                settings.percentile_hi <= 1.0,
            "percentile slice must satisfy 0 <= lo < hi <= 1");
  check_arg(settings.pool_size >= 4, "pool_size must be at least 4");
  return settings;
}

RunSettings parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);  // parse errors carry line and column info
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config parse error: ") + e.what());
  }
  return parse_settings_json(j);
}

json to_json(const RunSettings& s) {
  json j;
  j["task"] = s.task;
  j["seed"] = s.seed;
  j["iterations"] = s.iterations;
  j["batch"] = s.batch;
  j["ensemble"] = s.ensemble;
  j["weights"] = s.weights;
  j["guidance"] = s.guidance;
  j["acquisition_mode"] = s.acquisition_mode;
  j["selection"] = s.selection;
  j["fixed_weight"] = s.fixed_weight;
  j["epsilon_floor"] = s.epsilon_floor;
  j["percentile_lo"] = s.percentile_lo;
  j["percentile_hi"] = s.percentile_hi;
  j["pool_size"] = s.pool_size;
  j["train"] = {{"epochs", s.epochs},
                {"batch_size", s.train_batch_size},
                {"lr", s.lr},
                {"p_uncond", s.p_uncond},
                {"validation_fraction", s.validation_fraction}};
  j["model"] = {{"steps", s.diffusion_steps},
                {"beta_min", s.beta_min},
                {"beta_max", s.beta_max},
                {"hidden", s.hidden_dims},
                {"activation", s.activation}};
  j["output"] = s.output;
  return j;
}

}  // namespace diffbbo::bench
