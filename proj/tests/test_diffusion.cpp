#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "diffbbo/diffusion.hpp"

using namespace diffbbo;
using namespace diffbbo::diffusion;

namespace {

DiffusionModel zero_denoiser_model(int data_dim, int steps, double beta_min, double beta_max) {
  ModelConfig config;
  config.data_dim = data_dim;
  config.steps = steps;
  config.beta_min = beta_min;
  config.beta_max = beta_max;
  config.hidden_dims = {4};
  DiffusionModel model = make_model(config, 0);
  for (auto& w : model.denoiser.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : model.denoiser.biases) std::fill(b.begin(), b.end(), 0.0);
  return model;
}

std::vector<TrainExample> toy_inverse_dataset(std::size_t count, std::uint64_t seed) {
  // Scalar designs with x0 = y; the classic sanity target for conditioning.
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<TrainExample> data;
  data.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double y = uniform(engine);
    data.push_back({{y}, y});
  }
  return data;
}

bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("make_schedule: single step") {
  const auto s = make_schedule(1, 0.1, 0.1);
  REQUIRE(s.betas.size() == 1);
  CHECK(s.beta(1) == doctest::Approx(0.1));
  CHECK(s.alpha_bar(1) == doctest::Approx(0.9));
}

TEST_CASE("make_schedule: two steps accumulate the product") {
  const auto s = make_schedule(2, 0.1, 0.2);
  CHECK(s.beta(1) == doctest::Approx(0.1));
  CHECK(s.beta(2) == doctest::Approx(0.2));
  CHECK(s.alpha_bar(1) == doctest::Approx(0.9));
  CHECK(s.alpha_bar(2) == doctest::Approx(0.72));
}

TEST_CASE("make_schedule: default ramp is strictly decreasing in alpha_bar") {
  const auto s = make_schedule(100, 1e-4, 0.02);
  for (int t = 2; t <= 100; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  CHECK(s.alpha_bar(100) > 0.0);
  CHECK(s.alpha_bar(100) < 1.0);
  for (int t = 1; t <= 100; ++t) CHECK(std::sqrt(s.beta(t)) > 0.0);
}

TEST_CASE("make_schedule: rejects bad bounds") {
  CHECK_THROWS_AS(make_schedule(10, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(10, 0.2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(10, 0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(0, 0.1, 0.2), std::invalid_argument);
}

TEST_CASE("forward_diffuse: zero noise scales by sqrt(alpha_bar)") {
  const auto s = make_schedule(1, 0.75, 0.75);  // alpha_bar = 0.25
  const Vec x_t = forward_diffuse({2.0, 0.0}, 1, {0.0, 0.0}, s);
  CHECK(x_t[0] == doctest::Approx(1.0));
  CHECK(x_t[1] == doctest::Approx(0.0));
}

TEST_CASE("forward_diffuse: near-zero beta is the identity limit") {
  const auto s = make_schedule(1, 1e-12, 1e-12);
  const Vec x0{0.4, -0.7};
  const Vec x_t = forward_diffuse(x0, 1, {1.0, 1.0}, s);
  CHECK(x_t[0] == doctest::Approx(x0[0]).epsilon(1e-5));
  CHECK(x_t[1] == doctest::Approx(x0[1]).epsilon(1e-5));
}

TEST_CASE("forward_diffuse: out-of-range step throws") {
  const auto s = make_schedule(5, 1e-4, 0.02);
  CHECK_THROWS_AS(forward_diffuse({0.0}, 0, {0.0}, s), std::out_of_range);
  CHECK_THROWS_AS(forward_diffuse({0.0}, 6, {0.0}, s), std::out_of_range);
}

TEST_CASE("forward_diffuse: Monte Carlo moments match the closed form") {
  const auto s = make_schedule(50, 1e-4, 0.05);
  const Vec x0{1.5, -0.5};
  std::mt19937_64 engine(99);
  const int draws = 100000;
  for (const int t : {1, 10, 25, 50}) {
    Vec sum(2, 0.0), sum_sq(2, 0.0);
    for (int k = 0; k < draws; ++k) {
      const Vec x_t = forward_diffuse(x0, t, normal_vec(engine, 2), s);
      for (int i = 0; i < 2; ++i) {
        sum[i] += x_t[i];
        sum_sq[i] += x_t[i] * x_t[i];
      }
    }
    const double expected_var = 1.0 - s.alpha_bar(t);
    const double se_mean = std::sqrt(expected_var / draws);
    const double se_var = expected_var * std::sqrt(2.0 / (draws - 1.0));
    for (int i = 0; i < 2; ++i) {
      const double mean = sum[i] / draws;
      const double var = sum_sq[i] / draws - mean * mean;
      CHECK(std::abs(mean - std::sqrt(s.alpha_bar(t)) * x0[i]) < 3.0 * se_mean);
      CHECK(std::abs(var - expected_var) < 3.0 * se_var);
    }
  }
}

TEST_CASE("assemble_cf_batch: targets are the injected noise, recoverable from x_t") {
  ModelConfig config;
  config.data_dim = 3;
  config.steps = 20;
  config.hidden_dims = {8};
  const DiffusionModel model = make_model(config, 5);
  std::vector<TrainExample> batch;
  std::mt19937_64 data_engine(7);
  for (int i = 0; i < 16; ++i) {
    const Vec x0 = normal_vec(data_engine, 3);
    batch.push_back({x0, 0.5});
  }
  std::mt19937_64 engine(11);
  const CfBatch assembled = assemble_cf_batch(model, batch, 0.0, engine);
  REQUIRE(assembled.inputs.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int t = assembled.ts[i];
    const double ab = model.schedule.alpha_bar(t);
    CHECK(assembled.conditions[i].flag == 1);
    // Invert the corruption: eps = (x_t - sqrt(ab) x0) / sqrt(1 - ab).
    for (int c = 0; c < 3; ++c) {
      const double x_t = assembled.inputs[i][c];
      const double eps = (x_t - std::sqrt(ab) * batch[i].x0[c]) / std::sqrt(1.0 - ab);
      CHECK(eps == doctest::Approx(assembled.targets[i][c]).epsilon(1e-10));
    }
    // Trailing channels: time embedding then condition value and flag.
    const double t_norm = static_cast<double>(t) / config.steps;
    CHECK(assembled.inputs[i][3] == doctest::Approx(t_norm));
    CHECK(assembled.inputs[i][5] == doctest::Approx(0.5));
    CHECK(assembled.inputs[i][6] == doctest::Approx(1.0));
  }
}

TEST_CASE("cf loss: perfect noise prediction gives zero loss") {
  ModelConfig config;
  config.data_dim = 2;
  config.steps = 10;
  config.hidden_dims = {4};
  const DiffusionModel model = make_model(config, 3);
  std::mt19937_64 engine(21);
  const std::vector<TrainExample> batch{{{0.2, -0.1}, 0.3}, {{0.9, 0.4}, 0.8}};
  const CfBatch assembled = assemble_cf_batch(model, batch, 0.15, engine);
  double loss = 0.0;
  for (std::size_t i = 0; i < assembled.targets.size(); ++i)
    loss += squared_distance(assembled.targets[i], assembled.targets[i]);
  CHECK(loss == 0.0);
}

TEST_CASE("cf loss: zero denoiser averages to the data dimension") {
  DiffusionModel model = zero_denoiser_model(3, 10, 1e-4, 0.02);
  std::vector<TrainExample> batch(10000, TrainExample{{0.1, 0.2, 0.3}, 0.5});
  std::mt19937_64 engine(42);
  const auto lag = cf_training_loss(model, batch, 0.15, engine);
  CHECK(lag.loss == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("cf loss: p_uncond = 1 drops every condition") {
  ModelConfig config;
  config.data_dim = 1;
  config.steps = 5;
  config.hidden_dims = {4};
  const DiffusionModel model = make_model(config, 1);
  std::mt19937_64 engine(8);
  const std::vector<TrainExample> batch(32, TrainExample{{0.5}, 0.7});
  const CfBatch assembled = assemble_cf_batch(model, batch, 1.0, engine);
  for (const auto& cond : assembled.conditions) {
    CHECK(cond.flag == 0);
    CHECK(cond.value == 0.0);
  }
  const CfBatch kept = assemble_cf_batch(model, batch, 0.0, engine);
  for (const auto& cond : kept.conditions) CHECK(cond.flag == 1);
}

TEST_CASE("cf loss: empty batch throws") {
  const DiffusionModel model = zero_denoiser_model(1, 5, 1e-4, 0.02);
  std::mt19937_64 engine(1);
  CHECK_THROWS_AS(cf_training_loss(model, {}, 0.15, engine), std::invalid_argument);
}

TEST_CASE("train: zero epochs is a no-op with an empty curve") {
  ModelConfig config;
  config.data_dim = 1;
  config.steps = 10;
  config.hidden_dims = {8};
  DiffusionModel model = make_model(config, 13);
  const DiffusionModel before = model;
  TrainConfig tc;
  tc.epochs = 0;
  tc.batch_size = 8;
  tc.seed = 4;
  const auto curve = train(model, toy_inverse_dataset(50, 3), tc);
  CHECK(curve.empty());
  for (std::size_t l = 0; l < model.denoiser.layer_count(); ++l)
    CHECK(bitwise_equal(model.denoiser.weights[l], before.denoiser.weights[l]));
}

TEST_CASE("train: toy task loss decreases (10-epoch moving average)") {
  ModelConfig config;
  config.data_dim = 1;
  config.steps = 25;
  config.hidden_dims = {32, 32};
  DiffusionModel model = make_model(config, 77);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 64;
  tc.lr = 1e-3;
  tc.seed = 5;
  const auto curve = train(model, toy_inverse_dataset(500, 21), tc);
  REQUIRE(curve.size() == 200);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) {
    head += curve[i].train / 10.0;
    tail += curve[curve.size() - 10 + i].train / 10.0;
  }
  CHECK(tail < head);
}

TEST_CASE("train: identical seeds give bitwise-identical parameters") {
  ModelConfig config;
  config.data_dim = 1;
  config.steps = 10;
  config.hidden_dims = {16};
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 16;
  tc.seed = 123;
  const auto data = toy_inverse_dataset(100, 9);

  DiffusionModel a = make_model(config, 55);
  DiffusionModel b = make_model(config, 55);
  train(a, data, tc);
  train(b, data, tc);
  for (std::size_t l = 0; l < a.denoiser.layer_count(); ++l) {
    CHECK(bitwise_equal(a.denoiser.weights[l], b.denoiser.weights[l]));
    CHECK(bitwise_equal(a.denoiser.biases[l], b.denoiser.biases[l]));
  }
}

TEST_CASE("train: rejects datasets too small for the split") {
  ModelConfig config;
  config.data_dim = 1;
  DiffusionModel model = make_model(config, 1);
  TrainConfig tc;
  tc.validation_fraction = 0.5;
  CHECK_THROWS_AS(train(model, toy_inverse_dataset(3, 2), tc), std::invalid_argument);
}

TEST_CASE("reverse_step: guidance 0 equals the purely conditional step") {
  ModelConfig config;
  config.data_dim = 2;
  config.steps = 10;
  config.hidden_dims = {8};
  const DiffusionModel model = make_model(config, 19);
  const Vec x_t{0.3, -1.1};
  const Vec z{0.25, 0.5};
  const Condition cond = Condition::conditioned(0.4);
  const int t = 4;

  const Vec stepped = reverse_step(model, x_t, t, cond, 0.0, z);

  const Vec eps = predict_noise(model, x_t, t, cond);
  const double beta = model.schedule.beta(t);
  const double coef = beta / std::sqrt(1.0 - model.schedule.alpha_bar(t));
  Vec expected(2);
  for (int i = 0; i < 2; ++i)
    expected[i] = (x_t[i] - coef * eps[i]) / std::sqrt(model.schedule.alpha(t)) +
                  std::sqrt(beta) * z[i];
  CHECK(bitwise_equal(stepped, expected));
}

TEST_CASE("reverse_step: zero denoiser collapses to x_t / sqrt(alpha_t)") {
  const DiffusionModel model = zero_denoiser_model(2, 5, 0.04, 0.04);
  const Vec x_t{1.0, -2.0};
  const Vec stepped = reverse_step(model, x_t, 3, Condition::conditioned(0.5), 0.0, {0.0, 0.0});
  const double inv = 1.0 / std::sqrt(0.96);
  CHECK(stepped[0] == doctest::Approx(1.0 * inv));
  CHECK(stepped[1] == doctest::Approx(-2.0 * inv));
}

TEST_CASE("reverse_step: deterministic under guidance") {
  ModelConfig config;
  config.data_dim = 2;
  config.steps = 10;
  config.hidden_dims = {8};
  const DiffusionModel model = make_model(config, 29);
  const Vec x_t{0.1, 0.9};
  const Vec z{0.7, -0.2};
  const Vec a = reverse_step(model, x_t, 6, Condition::conditioned(0.8), 2.0, z);
  const Vec b = reverse_step(model, x_t, 6, Condition::conditioned(0.8), 2.0, z);
  CHECK(bitwise_equal(a, b));
}

TEST_CASE("reverse_step: error paths") {
  const DiffusionModel model = zero_denoiser_model(1, 5, 0.01, 0.05);
  CHECK_THROWS_AS(reverse_step(model, {0.0}, 0, Condition::conditioned(0.5), 0.0, {0.0}),
                  std::out_of_range);
  CHECK_THROWS_AS(reverse_step(model, {0.0}, 6, Condition::conditioned(0.5), 0.0, {0.0}),
                  std::out_of_range);
  CHECK_THROWS_AS(reverse_step(model, {0.0}, 2, Condition::unconditional(), 2.0, {0.0}),
                  std::invalid_argument);
  CHECK_NOTHROW(reverse_step(model, {0.0}, 2, Condition::unconditional(), 0.0, {0.0}));
}

TEST_CASE("sample: seeded determinism") {
  ModelConfig config;
  config.data_dim = 2;
  config.steps = 10;
  config.hidden_dims = {8};
  const DiffusionModel model = make_model(config, 31);
  std::mt19937_64 a(1234), b(1234);
  const auto sa = sample(model, 0.5, 1, 2.0, a);
  const auto sb = sample(model, 0.5, 1, 2.0, b);
  CHECK(bitwise_equal(sa[0], sb[0]));
}

TEST_CASE("sample: zero denoiser at T = 1 is a scaled standard normal") {
  const DiffusionModel model = zero_denoiser_model(1, 1, 0.2, 0.2);
  std::mt19937_64 engine(321);
  const int draws = 10000;
  const auto samples = sample(model, 0.5, draws, 0.0, engine);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& s : samples) {
    sum += s[0];
    sum_sq += s[0] * s[0];
  }
  const double mean = sum / draws;
  const double var = sum_sq / draws - mean * mean;
  const double expected_var = 1.0 / 0.8;  // 1 / alpha_1
  const double se_var = expected_var * std::sqrt(2.0 / (draws - 1.0));
  CHECK(std::abs(var - expected_var) < 3.0 * se_var);
}

TEST_CASE("sample: guidance 0 is bitwise equal to a conditional-only sampler") {
  ModelConfig config;
  config.data_dim = 2;
  config.steps = 15;
  config.hidden_dims = {8};
  const DiffusionModel model = make_model(config, 41);
  const std::uint64_t seed = 777;

  std::mt19937_64 engine(seed);
  const auto via_api = sample(model, 0.6, 3, 0.0, engine);

  // Reference chain that never touches the unconditional branch, consuming
  // the RNG identically.
  std::mt19937_64 ref_engine(seed);
  std::vector<std::uint64_t> seeds(3);
  for (auto& s : seeds) s = ref_engine();
  const Condition cond = Condition::conditioned(0.6);
  for (int j = 0; j < 3; ++j) {
    std::mt19937_64 sub(seeds[j]);
    Vec x = normal_vec(sub, 2);
    for (int t = 15; t >= 1; --t) {
      const Vec z = t > 1 ? normal_vec(sub, 2) : Vec(2, 0.0);
      const Vec eps = predict_noise(model, x, t, cond);
      const double beta = model.schedule.beta(t);
      const double coef = beta / std::sqrt(1.0 - model.schedule.alpha_bar(t));
      const double sqrt_alpha = std::sqrt(model.schedule.alpha(t));
      for (int i = 0; i < 2; ++i)
        x[i] = (x[i] - coef * eps[i]) / sqrt_alpha + std::sqrt(beta) * z[i];
    }
    CHECK(bitwise_equal(via_api[j], x));
  }
}

TEST_CASE("sample: trained toy model responds monotonically to the condition") {
  ModelConfig config;
  config.data_dim = 1;
  config.steps = 25;
  config.hidden_dims = {32, 32};
  DiffusionModel model = make_model(config, 71);
  TrainConfig tc;
  tc.epochs = 150;
  tc.batch_size = 64;
  tc.lr = 2e-3;
  tc.seed = 6;
  train(model, toy_inverse_dataset(500, 22), tc);

  std::mt19937_64 engine(55);
  auto mean_at = [&](double y) {
    const auto xs = sample(model, y, 200, 2.0, engine);
    double s = 0.0;
    for (const auto& x : xs) s += x[0];
    return s / 200.0;
  };
  CHECK(mean_at(0.2) < mean_at(0.8));
}
