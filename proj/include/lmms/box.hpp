#pragma once

// Box discrepancy of pulled-back time separations and the box distance.
//
// For a fixed pair of step parametrizations the pullback gap is constant on
// the pieces of the common refinement, and the pieces only matter through
// their (point, point') type and total length. Keeping a set of pieces is
// admissible at level eps iff all kept types are pairwise eps-compatible, so
//
//   box_lambda = min over gap levels g of max(g, (1 - W(g)) / lambda),
//
// W(g) the heaviest g-compatible clique of types. Minimizing over
// parametrizations replaces type lengths by a partial transport supported
// on a compatible clique of cells.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lmms/coupling.hpp"
#include "lmms/detail/cliques.hpp"
#include "lmms/detail/quadratic.hpp"
#include "lmms/detail/transport.hpp"
#include "lmms/solvers.hpp"
#include "lmms/witness.hpp"

namespace lmms {

/// One segment per positive-weight point, in index order.
inline Parametrization canonical_parametrization(const FiniteLMMS& s) {
  Parametrization p;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.weights[i] > 0.0) p.segments.push_back({i, s.weights[i]});
  return p;
}

namespace detail {

struct Piece {
  double lo, length;
  std::size_t i, j;
};

// Common refinement. Lengths are consumed by subtraction, so identical
// segment boundaries produce identical pieces.
inline std::vector<Piece> refine(const Parametrization& pa, const Parametrization& pb) {
  std::vector<Piece> out;
  std::size_t x = 0, y = 0;
  double ra = pa.segments.empty() ? 0.0 : pa.segments[0].length;
  double rb = pb.segments.empty() ? 0.0 : pb.segments[0].length;
  double pos = 0.0;
  constexpr double kDust = 1e-15;
  while (x < pa.segments.size() && y < pb.segments.size()) {
    const double len = std::min(ra, rb);
    if (len > kDust) out.push_back({pos, len, pa.segments[x].point, pb.segments[y].point});
    pos += len;
    ra -= len;
    rb -= len;
    if (ra <= kDust && ++x < pa.segments.size()) ra = pa.segments[x].length;
    if (rb <= kDust && ++y < pb.segments.size()) rb = pb.segments[y].length;
  }
  return out;
}

inline std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& p, const Interval& q) { return p.lo < q.lo; });
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.lo <= out.back().hi + 1e-15) {
      out.back().hi = std::max(out.back().hi, iv.hi);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace detail

struct BoxDiscrepancy {
  double value = 0.0;
  bool exact = true;  // false when the clique search hit its node budget
  std::vector<Interval> deleted;
};

/// Scaled box discrepancy of the pullbacks of a and b along pa and pb:
/// the least eps such that deleting a set of length <= lambda * eps leaves
/// all pullback gaps <= eps.
inline BoxDiscrepancy box_discrepancy_detail(const FiniteLMMS& a, const FiniteLMMS& b,
                                             const Parametrization& pa, const Parametrization& pb,
                                             double lambda = 1.0, std::size_t node_limit = 1U << 20) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  check_parametrization(a, pa);
  check_parametrization(b, pb);
  const auto pieces = detail::refine(pa, pb);

  // Types and their order-independent total lengths.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> lengths;
  for (const auto& pc : pieces) lengths[{pc.i, pc.j}].push_back(pc.length);
  std::vector<std::pair<std::size_t, std::size_t>> types;
  std::vector<double> mass;
  for (auto& [key, ls] : lengths) {
    std::sort(ls.begin(), ls.end());
    double s = 0.0;
    for (double l : ls) s += l;
    types.push_back(key);
    mass.push_back(s);
  }
  const std::size_t t = types.size();
  auto pair_gap = [&](std::size_t c, std::size_t d) {
    const auto [i, j] = types[c];
    const auto [k, l] = types[d];
    return std::max(std::abs(a.tau(i, k) - b.tau(j, l)), std::abs(a.tau(k, i) - b.tau(l, j)));
  };

  std::vector<double> levels{0.0};
  for (std::size_t c = 0; c < t; ++c)
    for (std::size_t d = c + 1; d < t; ++d) levels.push_back(pair_gap(c, d));
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  BoxDiscrepancy out;
  out.value = kInfinity;
  detail::Bitset best_kept(t);
  for (double g : levels) {
    if (g >= out.value) break;
    std::vector<detail::Bitset> adj(t, detail::Bitset(t));
    for (std::size_t c = 0; c < t; ++c)
      for (std::size_t d = c + 1; d < t; ++d)
        if (pair_gap(c, d) <= g) {
          adj[c].set(d);
          adj[d].set(c);
        }
    double w_best = 0.0;
    detail::Bitset kept(t);
    detail::CliqueEnumerator en{&adj, node_limit};
    const auto status = en.run(
        [&](const detail::Bitset& clique) {
          double w = 0.0;
          clique.for_each([&](std::size_t c) { w += mass[c]; });
          if (w > w_best) {
            w_best = w;
            kept = clique;
          }
          return true;
        },
        [&](const detail::Bitset& r, const detail::Bitset& p) {
          double w = 0.0;
          (r | p).for_each([&](std::size_t c) { w += mass[c]; });
          return w <= w_best;
        });
    if (status == detail::EnumerationStatus::budget_exhausted) out.exact = false;
    double removed = 0.0;
    for (std::size_t c = 0; c < t; ++c)
      if (!kept.test(c)) removed += mass[c];
    const double v = std::max(g, removed / lambda);
    if (v < out.value) {
      out.value = v;
      best_kept = kept;
    }
  }

  std::vector<Interval> q;
  for (const auto& pc : pieces) {
    const auto it = std::lower_bound(types.begin(), types.end(), std::make_pair(pc.i, pc.j));
    if (!best_kept.test(static_cast<std::size_t>(it - types.begin())))
      q.push_back({pc.lo, pc.lo + pc.length});
  }
  out.deleted = detail::merge_intervals(std::move(q));
  return out;
}

inline double box_discrepancy(const FiniteLMMS& a, const FiniteLMMS& b, const Parametrization& pa,
                              const Parametrization& pb, double lambda = 1.0) {
  return box_discrepancy_detail(a, b, pa, pb, lambda).value;
}

/// Coupling (psi, psi')_# Lebesgue.
inline Coupling induced_coupling(const FiniteLMMS& a, const FiniteLMMS& b, const Parametrization& pa,
                                 const Parametrization& pb) {
  Coupling pi(a.size(), b.size());
  for (const auto& pc : detail::refine(pa, pb)) pi(pc.i, pc.j) += pc.length;
  return pi;
}

/// Parametrization pair realizing a coupling: the cells of `first` (a
/// sub-measure of pi) are laid out first, the rest of pi after them.
inline std::pair<Parametrization, Parametrization> parametrizations_of(const Coupling& pi,
                                                                       const Coupling& first) {
  std::pair<Parametrization, Parametrization> out;
  auto lay = [&](std::size_t i, std::size_t j, double len) {
    if (!(len > 1e-15)) return;
    out.first.segments.push_back({i, len});
    out.second.segments.push_back({j, len});
  };
  for (std::size_t i = 0; i < pi.rows(); ++i)
    for (std::size_t j = 0; j < pi.cols(); ++j) lay(i, j, first(i, j));
  for (std::size_t i = 0; i < pi.rows(); ++i)
    for (std::size_t j = 0; j < pi.cols(); ++j) lay(i, j, pi(i, j) - first(i, j));
  return out;
}

/// Scaled box distance. Exact (over step parametrizations) when the
/// clique searches finish within the node budget.
inline DistanceResult solve_box(const FiniteLMMS& a, const FiniteLMMS& b, double lambda = 1.0,
                                const Budget& budget = {}, std::uint64_t seed = 0) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const detail::CellGrid g = detail::make_grid(a, b, 1.0);
  if (g.cells() == 0) throw StructuralError("spaces must carry positive mass");

  const bool small = g.cells() <= 64;
  auto levels = detail::gap_levels(g, true);
  if (!small) levels = detail::levels_subset(levels, 32);

  bool complete = small;
  double best = kInfinity;
  Coupling best_flow(g.num_rows(), g.num_cols());
  std::size_t nodes = 0;
  for (double level : levels) {
    if (level >= best) break;
    const auto adj = detail::compatibility(g, level);
    detail::CliqueEnumerator en{&adj, budget.node_limit};
    detail::PartialTransport top{0.0, Coupling(g.num_rows(), g.num_cols())};
    const auto status = en.run(
        [&](const detail::Bitset& clique) {
          auto t = detail::transport_on(g, clique);
          if (t.mass > top.mass + 1e-15) top = std::move(t);
          return top.mass < 1.0 - 1e-15;
        },
        [&](const detail::Bitset&, const detail::Bitset&) { return false; });
    nodes += en.nodes;
    if (status == detail::EnumerationStatus::budget_exhausted) complete = false;
    const double v = std::max(level, std::max(0.0, 1.0 - top.mass) / lambda);
    if (v < best) {
      best = v;
      best_flow = top.flow;
    }
  }

  const Coupling small_pi = detail::complete_coupling(best_flow, g.wa, g.wb);
  Coupling pi(a.size(), b.size()), first(a.size(), b.size());
  for (std::size_t x = 0; x < g.num_rows(); ++x) {
    for (std::size_t y = 0; y < g.num_cols(); ++y) {
      pi(g.rows[x], g.cols[y]) = small_pi(x, y);
      first(g.rows[x], g.cols[y]) = std::min(best_flow(x, y), small_pi(x, y));
    }
  }
  auto [pa, pb] = parametrizations_of(pi, first);
  DistanceResult r;
  const auto check = box_discrepancy_detail(a, b, pa, pb, lambda, budget.node_limit);
  r.value = check.value;
  r.coupling = induced_coupling(a, b, pa, pb);
  r.method = complete ? Method::exact : Method::anneal;
  r.certified = complete && check.exact;
  r.iterations = nodes;
  r.seed = seed;
  r.box = BoxWitness{std::move(pa), std::move(pb), check.deleted, lambda};
  return r;
}

}  // namespace lmms
