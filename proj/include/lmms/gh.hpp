#pragma once

// Unmeasured Lorentz-Gromov-Hausdorff semidistance via correspondences.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lmms/detail/cliques.hpp"
#include "lmms/detail/quadratic.hpp"
#include "lmms/solvers.hpp"
#include "lmms/witness.hpp"

namespace lmms {

/// Largest |tau(x,y) - tau'(x',y')| over (x,x'), (y,y') in r.
inline double distortion(const FiniteLMMS& a, const FiniteLMMS& b, const Correspondence& r) {
  if (!is_correspondence(r, a.size(), b.size())) throw std::invalid_argument("not a correspondence");
  double d = 0.0;
  for (auto [i, j] : r.pairs)
    for (auto [k, l] : r.pairs) d = std::max(d, std::abs(a.tau(i, k) - b.tau(j, l)));
  return d;
}

namespace detail {

inline Correspondence correspondence_of(const CellGrid& g, const Bitset& cells) {
  Correspondence r;
  cells.for_each([&](std::size_t c) { r.pairs.emplace_back(g.rows[g.row_of(c)], g.cols[g.col_of(c)]); });
  return r;
}

// Starting from the full relation, repeatedly drop a pair from the worst
// pair-of-pairs while both projections stay surjective.
inline Correspondence greedy_correspondence(const FiniteLMMS& a, const FiniteLMMS& b) {
  Correspondence r;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r.pairs.emplace_back(i, j);
  double current = distortion(a, b, r);
  for (;;) {
    std::vector<std::size_t> left(a.size(), 0), right(b.size(), 0);
    for (auto [i, j] : r.pairs) ++left[i], ++right[j];
    double best = current;
    std::size_t drop = r.pairs.size();
    for (std::size_t k = 0; k < r.pairs.size(); ++k) {
      const auto [i, j] = r.pairs[k];
      if (left[i] < 2 || right[j] < 2) continue;
      Correspondence trial = r;
      trial.pairs.erase(trial.pairs.begin() + static_cast<std::ptrdiff_t>(k));
      const double d = distortion(a, b, trial);
      if (d < best) {
        best = d;
        drop = k;
      }
    }
    if (drop == r.pairs.size()) {
      // No single removal lowers the distortion; remove any removable pair
      // that keeps it unchanged, so later steps can make progress.
      bool removed = false;
      for (std::size_t k = 0; k < r.pairs.size() && !removed; ++k) {
        const auto [i, j] = r.pairs[k];
        if (left[i] < 2 || right[j] < 2) continue;
        Correspondence trial = r;
        trial.pairs.erase(trial.pairs.begin() + static_cast<std::ptrdiff_t>(k));
        if (distortion(a, b, trial) <= current) {
          r = std::move(trial);
          removed = true;
        }
      }
      if (!removed) return r;
      continue;
    }
    r.pairs.erase(r.pairs.begin() + static_cast<std::ptrdiff_t>(drop));
    current = best;
  }
}

}  // namespace detail

/// d_LGH over all points (weights are ignored). Bisection over gap levels;
/// a level is feasible iff some clique of pairwise-compatible cells covers
/// every row and column.
inline DistanceResult solve_lgh(const FiniteLMMS& a, const FiniteLMMS& b, const Budget& budget = {}) {
  const detail::CellGrid g = detail::make_grid(a, b, 1.0, true);
  if (g.cells() == 0) throw StructuralError("spaces must be nonempty");
  const auto levels = detail::gap_levels(g, true);

  Correspondence best;
  for (std::size_t c = 0; c < g.cells(); ++c) best.pairs.emplace_back(g.rows[g.row_of(c)], g.cols[g.col_of(c)]);
  bool complete = true;
  std::size_t nodes = 0;
  std::size_t lo = 0, hi = levels.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const auto adj = detail::compatibility(g, levels[mid]);
    detail::CliqueEnumerator en{&adj, budget.node_limit};
    std::optional<Correspondence> found;
    const auto status = en.run(
        [&](const detail::Bitset& clique) {
          found = detail::correspondence_of(g, clique);
          return false;
        },
        [&](const detail::Bitset& r, const detail::Bitset& p) { return !detail::covers(g, r | p); });
    nodes += en.nodes;
    if (found) {
      best = std::move(*found);
      hi = mid;
    } else {
      if (status == detail::EnumerationStatus::budget_exhausted) complete = false;
      lo = mid + 1;
    }
  }
  if (!complete) {
    auto greedy = detail::greedy_correspondence(a, b);
    if (distortion(a, b, greedy) < distortion(a, b, best)) best = std::move(greedy);
  }
  std::sort(best.pairs.begin(), best.pairs.end());

  DistanceResult r;
  r.value = distortion(a, b, best);
  // No measured witness: the correspondence is the witness.
  r.method = complete ? Method::exact : Method::anneal;
  r.certified = complete;
  r.iterations = nodes;
  r.correspondence = std::move(best);
  return r;
}

}  // namespace lmms
