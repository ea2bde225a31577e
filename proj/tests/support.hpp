#pragma once

#include <vector>

#include "lmms/core.hpp"
#include "lmms/rng.hpp"
#include "lmms/sprinkle.hpp"
#include "lmms/witness.hpp"

namespace testing_support {

inline lmms::FiniteLMMS i2a() { return lmms::make_uniform_space({{0, 1}, {0, 0}}, {"a", "b"}); }
inline lmms::FiniteLMMS i2b() { return lmms::make_uniform_space({{0, 2}, {0, 0}}, {"a", "b"}); }

inline std::vector<double> random_weights(std::size_t n, lmms::SplitMix64& rng) {
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& x : w) s += (x = 0.05 + rng.uniform());
  for (auto& x : w) x /= s;
  return w;
}

// Random causet with random positive weights.
inline lmms::FiniteLMMS random_space(std::size_t n, lmms::SplitMix64& rng, double density = 0.6) {
  auto s = lmms::random_causet(n, density, 2.0, rng());
  s.weights = random_weights(n, rng);
  return s;
}

inline lmms::FiniteLMMS relabeled(const lmms::FiniteLMMS& s, lmms::SplitMix64& rng) {
  const auto order = lmms::random_permutation(s.size(), rng);
  return lmms::permuted(s, order);
}

// Each positive weight split into up to three segments, then shuffled.
inline lmms::Parametrization random_parametrization(const lmms::FiniteLMMS& s, lmms::SplitMix64& rng) {
  lmms::Parametrization p;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s.weights[i] > 0.0)) continue;
    const std::size_t parts = 1 + rng.below(3);
    double left = s.weights[i];
    for (std::size_t k = 0; k + 1 < parts; ++k) {
      const double cut = left * (0.2 + 0.6 * rng.uniform());
      p.segments.push_back({i, cut});
      left -= cut;
    }
    p.segments.push_back({i, left});
  }
  lmms::shuffle(std::span<lmms::Segment>(p.segments), rng);
  return p;
}

}  // namespace testing_support
