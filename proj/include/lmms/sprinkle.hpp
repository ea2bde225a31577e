#pragma once

// Random instances: sprinklings of causal diamonds in 1+d Minkowski space
// and random abstract causets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmms/core.hpp"
#include "lmms/rng.hpp"

namespace lmms {

/// Time separation in Minkowski space; events are (t, x_1, ..., x_d).
inline double minkowski_tau(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw std::invalid_argument("events must share a dimension");
  const double dt = q[0] - p[0];
  double r2 = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) r2 += (q[i] - p[i]) * (q[i] - p[i]);
  const double r = std::sqrt(r2);
  if (!(dt >= r)) return 0.0;
  return std::sqrt((dt - r) * (dt + r));
}

/// Volume of the diamond |t| + |x| <= T in 1+d dimensions.
inline double diamond_volume(std::size_t d, double half_height) {
  const double dd = static_cast<double>(d);
  // unit d-ball: V_0 = 1, V_1 = 2, V_k = V_{k-2} * 2 pi / k
  double ball = d % 2 ? 2.0 : 1.0;
  for (std::size_t k = d % 2 ? 3 : 2; k <= d; k += 2) ball *= 2.0 * std::numbers::pi / static_cast<double>(k);
  return 2.0 * ball * std::pow(half_height, dd + 1.0) / (dd + 1.0);
}

enum class SprinkleMode { iid, poisson };

struct SprinkleConfig {
  std::size_t dim = 1;
  double half_height = 1.0;
  SprinkleMode mode = SprinkleMode::iid;
  std::size_t n = 50;
  double intensity = 0.0;
  std::uint64_t seed = 0;
  bool drop_boundary = true;  // finite samples miss the boundary almost surely
};

struct Sprinkling {
  FiniteLMMS space;
  std::vector<std::vector<double>> coordinates;
  SprinkleConfig config;
};

inline void check_config(const SprinkleConfig& c) {
  if (c.dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(c.half_height > 0.0) || !std::isfinite(c.half_height)) throw std::invalid_argument("T must be positive");
  if (c.mode == SprinkleMode::iid && c.n < 1) throw std::invalid_argument("n must be >= 1");
  if (c.mode == SprinkleMode::poisson && !(c.intensity > 0.0)) throw std::invalid_argument("intensity must be positive");
}

inline std::vector<double> sample_diamond(std::size_t d, double T, SplitMix64& rng) {
  std::vector<double> e(d + 1);
  for (;;) {
    for (auto& v : e) v = rng.uniform(-T, T);
    double r2 = 0.0;
    for (std::size_t i = 1; i <= d; ++i) r2 += e[i] * e[i];
    if (std::abs(e[0]) + std::sqrt(r2) <= T) return e;
  }
}

/// Uniform points in the diamond (exactly n, or a Poisson number redrawn
/// while zero), tau from the Minkowski metric, uniform weights.
inline Sprinkling sprinkle(const SprinkleConfig& config) {
  check_config(config);
  SplitMix64 rng(config.seed);
  std::size_t n = config.n;
  if (config.mode == SprinkleMode::poisson) {
    const double mean = config.intensity * diamond_volume(config.dim, config.half_height);
    n = 0;
    for (int retry = 0; retry < 1000000 && n == 0; ++retry) n = poisson(mean, rng);
    if (n == 0) throw std::runtime_error("poisson sprinkling stayed empty");
  }
  Sprinkling out;
  out.config = config;
  out.coordinates.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.coordinates.push_back(sample_diamond(config.dim, config.half_height, rng));

  std::vector<std::vector<double>> tau(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) tau[i][j] = minkowski_tau(out.coordinates[i], out.coordinates[j]);
  out.space = make_uniform_space(tau, default_labels(n, "x"));
  return out;
}

/// Random causet: a random order on n points (each pair of a random linear
/// extension related with probability `density`, edge weights in (0,max_tau])
/// with tau the heaviest path, 0 when unrelated.
inline FiniteLMMS random_causet(std::size_t n, double density, double max_tau, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("density must lie in [0,1]");
  if (!(max_tau > 0.0)) throw std::invalid_argument("max_tau must be positive");
  SplitMix64 rng(seed);
  // Work in linear-extension positions, relabel at the end.
  std::vector<std::vector<double>> edge(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(density)) edge[i][j] = max_tau * (1.0 - rng.uniform());

  std::vector<std::vector<double>> longest(n, std::vector<double>(n, 0.0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double best = edge[i][j];
      for (std::size_t m = i + 1; m < j; ++m)
        if (edge[i][m] > 0.0 && longest[m][j] > 0.0) best = std::max(best, edge[i][m] + longest[m][j]);
      longest[i][j] = best;
    }
  }
  const auto pos = random_permutation(n, rng);  // point p sits at position pos[p]
  std::vector<std::vector<double>> tau(n, std::vector<double>(n, 0.0));
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) tau[p][q] = longest[pos[p]][pos[q]];
  return make_uniform_space(tau, default_labels(n, "c"));
}

}  // namespace lmms
