#pragma once

// Witness objects attached to distance results.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lmms/core.hpp"

namespace lmms {

struct Segment {
  std::size_t point = 0;
  double length = 0.0;
  bool operator==(const Segment&) const = default;
};

// Step-function parametrization [0,1] -> points: consecutive segments.
struct Parametrization {
  std::vector<Segment> segments;

  double total_length() const {
    double s = 0.0;
    for (const auto& seg : segments) s += seg.length;
    return s;
  }
  std::vector<double> pushforward(std::size_t n) const {
    std::vector<double> w(n, 0.0);
    for (const auto& seg : segments) w.at(seg.point) += seg.length;
    return w;
  }
  bool operator==(const Parametrization&) const = default;
};

inline void check_parametrization(const FiniteLMMS& s, const Parametrization& p) {
  for (const auto& seg : p.segments) {
    if (seg.point >= s.size()) throw StructuralError("parametrization refers to a missing point");
    if (!(seg.length > 0.0 && seg.length <= 1.0 + 1e-12)) {
      throw std::invalid_argument("segment lengths must lie in (0,1]");
    }
  }
  if (std::abs(p.total_length() - 1.0) > kDefaultTolerance) {
    throw std::invalid_argument("parametrization lengths must sum to 1");
  }
  const auto w = p.pushforward(s.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (std::abs(w[i] - s.weights[i]) > 1e-9) {
      throw std::invalid_argument("parametrization is not measure preserving at point " + s.labels[i]);
    }
  }
}

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool operator==(const Interval&) const = default;
};

struct BoxWitness {
  Parametrization pa, pb;
  std::vector<Interval> deleted;  // Q as a union of sub-intervals of [0,1]
  double lambda = 1.0;
};

// Relation between point sets with surjective projections.
struct Correspondence {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  bool operator==(const Correspondence&) const = default;
};

inline bool is_correspondence(const Correspondence& r, std::size_t n, std::size_t m) {
  std::vector<char> left(n, 0), right(m, 0);
  for (auto [i, j] : r.pairs) {
    if (i >= n || j >= m) return false;
    left[i] = right[j] = 1;
  }
  for (char c : left)
    if (!c) return false;
  for (char c : right)
    if (!c) return false;
  return true;
}

}  // namespace lmms
