#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffbbo {

using Vec = std::vector<double>;

/// Signals a computation that produced or received non-finite or otherwise
/// inconsistent numbers; the message names the offending value where known.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

inline void check_arg(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// splitmix64 finalizer; mixes one master seed into independent substream
// seeds so that adding or reordering consumers never shifts another stream.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

inline Vec normal_vec(std::mt19937_64& engine, std::size_t n) {
  std::normal_distribution<double> normal;
  Vec v(n);
  for (auto& x : v) x = normal(engine);
  return v;
}

inline double l2_norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double squared_distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Population (divide-by-count) mean and variance.
inline double mean_of(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double population_variance(const Vec& v) {
  // Constant input is exactly zero variance; the mean itself rounds.
  bool constant = true;
  for (double x : v)
    if (x != v.front()) {
      constant = false;
      break;
    }
  if (constant) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

}  // namespace diffbbo
