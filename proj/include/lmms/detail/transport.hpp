#pragma once

// Real-valued transportation problems on small dense bipartite graphs.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "lmms/coupling.hpp"

namespace lmms::detail {

inline constexpr double kFlowEpsilon = 1e-15;

/// Min-cost transport: minimizes sum cost(i,j) pi(i,j) over couplings of wa
/// and wb. Successive shortest paths with Johnson potentials and dense
/// Dijkstra; exact up to floating rounding.
template <class Cost>
Coupling min_cost_transport(std::span<const double> wa, std::span<const double> wb, Cost&& cost) {
  const std::size_t n = wa.size(), m = wb.size();
  Coupling flow(n, m);
  std::vector<double> supply(wa.begin(), wa.end()), demand(wb.begin(), wb.end());
  Matrix c(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) c(i, j) = cost(i, j);

  std::vector<double> pot_row(n, 0.0), pot_col(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) lo = std::min(lo, c(i, j));
    pot_col[j] = n ? lo : 0.0;
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  // Node ids: rows 0..n-1, cols n..n+m-1.
  std::vector<double> dist(n + m);
  std::vector<std::ptrdiff_t> prev(n + m);
  std::vector<char> done(n + m);

  for (std::size_t guard = 0; guard < 4 * (n + m) * (n + m) + 16; ++guard) {
    double left = 0.0, right = 0.0;
    for (double s : supply) left += std::max(s, 0.0);
    for (double d : demand) right += std::max(d, 0.0);
    if (left <= 1e-14 || right <= 1e-14) break;

    std::fill(dist.begin(), dist.end(), inf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > kFlowEpsilon) dist[i] = 0.0;

    std::ptrdiff_t target = -1;
    for (;;) {
      std::ptrdiff_t u = -1;
      for (std::size_t v = 0; v < n + m; ++v)
        if (!done[v] && dist[v] < inf && (u < 0 || dist[v] < dist[static_cast<std::size_t>(u)]))
          u = static_cast<std::ptrdiff_t>(v);
      if (u < 0) break;
      const auto uu = static_cast<std::size_t>(u);
      done[uu] = 1;
      if (uu >= n && demand[uu - n] > kFlowEpsilon) {
        target = u;
        break;
      }
      if (uu < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const double rc = std::max(0.0, c(uu, j) + pot_row[uu] - pot_col[j]);
          if (dist[uu] + rc < dist[n + j]) {
            dist[n + j] = dist[uu] + rc;
            prev[n + j] = u;
          }
        }
      } else {
        const std::size_t j = uu - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (flow(i, j) <= kFlowEpsilon) continue;
          const double rc = std::max(0.0, -c(i, j) - pot_row[i] + pot_col[j]);
          if (dist[uu] + rc < dist[i]) {
            dist[i] = dist[uu] + rc;
            prev[i] = u;
          }
        }
      }
    }
    if (target < 0) break;

    const double dt = dist[static_cast<std::size_t>(target)];
    for (std::size_t i = 0; i < n; ++i) pot_row[i] += std::min(dist[i], dt);
    for (std::size_t j = 0; j < m; ++j) pot_col[j] += std::min(dist[n + j], dt);

    // Bottleneck along the path.
    double push = demand[static_cast<std::size_t>(target) - n];
    std::size_t v = static_cast<std::size_t>(target);
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u >= n) push = std::min(push, flow(v, u - n));  // backward edge col u -> row v
      v = u;
    }
    push = std::min(push, supply[v]);
    if (!(push > 0.0)) break;

    v = static_cast<std::size_t>(target);
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u < n) {
        flow(u, v - n) += push;
      } else {
        flow(v, u - n) = std::max(0.0, flow(v, u - n) - push);
      }
      v = u;
    }
    supply[v] -= push;
    demand[static_cast<std::size_t>(target) - n] -= push;
  }
  return flow;
}

struct PartialTransport {
  double mass = 0.0;
  Coupling flow;  // row sums <= wa, col sums <= wb, supported on the allowed cells
};

/// Largest mass transportable from wa to wb using only cells with
/// allowed(i, j) true (Edmonds-Karp on the bipartite network).
template <class Allowed>
PartialTransport max_partial_transport(std::span<const double> wa, std::span<const double> wb,
                                       Allowed&& allowed) {
  const std::size_t n = wa.size(), m = wb.size();
  PartialTransport out{0.0, Coupling(n, m)};
  std::vector<double> supply(wa.begin(), wa.end()), demand(wb.begin(), wb.end());
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (allowed(i, j)) adj[i].push_back(j);

  // BFS over residual graph: source -> row (supply), row -> col (inf),
  // col -> row (flow), col -> sink (demand).
  std::vector<std::ptrdiff_t> prev(n + m);
  for (;;) {
    std::fill(prev.begin(), prev.end(), -2);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
      if (supply[i] > kFlowEpsilon) {
        prev[i] = -1;
        queue.push_back(i);
      }
    }
    std::ptrdiff_t sink_col = -1;
    while (!queue.empty() && sink_col < 0) {
      const std::size_t u = queue.front();
      queue.pop_front();
      if (u < n) {
        for (std::size_t j : adj[u]) {
          if (prev[n + j] != -2) continue;
          prev[n + j] = static_cast<std::ptrdiff_t>(u);
          if (demand[j] > kFlowEpsilon) {
            sink_col = static_cast<std::ptrdiff_t>(j);
            break;
          }
          queue.push_back(n + j);
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (prev[i] != -2 || out.flow(i, j) <= kFlowEpsilon) continue;
          prev[i] = static_cast<std::ptrdiff_t>(u);
          queue.push_back(i);
        }
      }
    }
    if (sink_col < 0) break;

    const auto tj = static_cast<std::size_t>(sink_col);
    double push = demand[tj];
    std::size_t v = n + tj;
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u >= n) push = std::min(push, out.flow(v, u - n));
      v = u;
    }
    push = std::min(push, supply[v]);
    if (!(push > kFlowEpsilon)) break;

    v = n + tj;
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u < n) {
        out.flow(u, v - n) += push;
      } else {
        out.flow(v, u - n) = std::max(0.0, out.flow(v, u - n) - push);
      }
      v = u;
    }
    supply[v] -= push;
    demand[tj] -= push;
    out.mass += push;
  }
  return out;
}

/// Extends a partial transport to a full coupling by spreading the residual
/// marginals as a product measure.
inline Coupling complete_coupling(const Coupling& partial, std::span<const double> wa,
                                  std::span<const double> wb) {
  Coupling out = partial;
  auto rs = partial.row_sums();
  auto cs = partial.col_sums();
  std::vector<double> ra(wa.size()), rb(wb.size());
  double total = 0.0;
  for (std::size_t i = 0; i < wa.size(); ++i) total += (ra[i] = std::max(0.0, wa[i] - rs[i]));
  for (std::size_t j = 0; j < wb.size(); ++j) rb[j] = std::max(0.0, wb[j] - cs[j]);
  if (total <= 1e-15) return out;
  for (std::size_t i = 0; i < wa.size(); ++i)
    for (std::size_t j = 0; j < wb.size(); ++j) out(i, j) += ra[i] * rb[j] / total;
  return out;
}

}  // namespace lmms::detail
