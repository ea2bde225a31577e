#pragma once

// SplitMix64: a counter-based generator. Draw k of a stream is a fixed
// bijective mix of (seed + k * 0x9e3779b97f4a7c15), so streams reproduce
// bit-for-bit on every platform. All sampling helpers below are written
// against it directly; std:: distributions are implementation-defined.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace lmms {

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0 (Lemire's multiply-shift, rejection for exactness).
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = (*this)();
      const __uint128_t m = static_cast<__uint128_t>(x) * n;
      if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Independent child stream, e.g. one per restart.
  SplitMix64 fork(std::uint64_t index) const noexcept {
    SplitMix64 g(state_ ^ (0xd1b54a32d192ed03ULL * (index + 1)));
    g();
    return g;
  }

 private:
  std::uint64_t state_;
};

template <class T>
void shuffle(std::span<T> xs, SplitMix64& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(xs[i - 1], xs[j]);
  }
}

inline std::vector<std::size_t> random_permutation(std::size_t n, SplitMix64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  shuffle(std::span<std::size_t>(p), rng);
  return p;
}

// Poisson(mean) by Knuth's product method in chunks of mean <= 30; exact in
// distribution by additivity.
inline std::uint64_t poisson(double mean, SplitMix64& rng) {
  std::uint64_t total = 0;
  while (mean > 0.0) {
    const double chunk = std::min(mean, 30.0);
    mean -= chunk;
    const double limit = std::exp(-chunk);
    double prod = rng.uniform();
    while (prod > limit) {
      ++total;
      prod *= rng.uniform();
    }
  }
  return total;
}

// Cumulative table for drawing indices proportionally to weights.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(std::span<const double> weights) : cdf_(weights.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) cdf_[i] = (acc += weights[i]);
    total_ = acc;
  }

  std::size_t operator()(SplitMix64& rng) const {
    const double u = rng.uniform() * total_;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    // upper_bound never lands on a zero-weight slot: its cdf equals its
    // predecessor's, which would already exceed u.
    const auto i = static_cast<std::size_t>(it - cdf_.begin());
    return std::min(i, cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
  double total_ = 0.0;
};

}  // namespace lmms
