#pragma once

// Quadratic programs over the transportation polytope of two finite spaces:
//
//   minimize  sum_{c,d} H(c,d) pi(c) pi(d)   over couplings pi,
//
// where cells c = (i, i') range over pairs of support points and
// H(c,d) = (k(gap(c,d)) + k(gap(d,c))) / 2 for a nonnegative kernel k of the
// tau-gap |A(i,j) - B(i',j')|. Every distortion functional in the library
// reduces to one of these (k(g) = g^p, or k(g) = [g > threshold]).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "lmms/coupling.hpp"
#include "lmms/detail/transport.hpp"
#include "lmms/rng.hpp"

namespace lmms::detail {

// The two spaces restricted to their supports, tau already raised to q.
struct CellGrid {
  std::vector<std::size_t> rows, cols;  // support indices in a and b
  std::vector<double> wa, wb;
  Matrix A, B;
  std::size_t full_rows = 0, full_cols = 0;

  std::size_t num_rows() const { return rows.size(); }
  std::size_t num_cols() const { return cols.size(); }
  std::size_t cells() const { return rows.size() * cols.size(); }
  std::size_t row_of(std::size_t c) const { return c / cols.size(); }
  std::size_t col_of(std::size_t c) const { return c % cols.size(); }

  double gap(std::size_t c, std::size_t d) const {
    return std::abs(A(row_of(c), row_of(d)) - B(col_of(c), col_of(d)));
  }
  // Larger of the two directed gaps; cells c, d are eps-compatible iff this is <= eps.
  double pair_gap(std::size_t c, std::size_t d) const { return std::max(gap(c, d), gap(d, c)); }

  Coupling expand(std::span<const double> pi) const {
    Coupling out(full_rows, full_cols);
    for (std::size_t c = 0; c < pi.size(); ++c) out(rows[row_of(c)], cols[col_of(c)]) = pi[c];
    return out;
  }
  std::vector<double> restrict(const Coupling& full) const {
    std::vector<double> pi(cells());
    for (std::size_t c = 0; c < pi.size(); ++c) pi[c] = full(rows[row_of(c)], cols[col_of(c)]);
    return pi;
  }
  std::vector<double> from_small(const Coupling& small) const {
    return {small.data().begin(), small.data().end()};
  }
};

inline std::vector<std::size_t> all_points(const FiniteLMMS& s) {
  std::vector<std::size_t> v(s.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

// Support cells by default; every point when `all` is set (unmeasured problems).
inline CellGrid make_grid(const FiniteLMMS& a, const FiniteLMMS& b, double q, bool all = false) {
  CellGrid g;
  g.rows = all ? all_points(a) : support(a);
  g.cols = all ? all_points(b) : support(b);
  g.full_rows = a.size();
  g.full_cols = b.size();
  for (auto i : g.rows) g.wa.push_back(a.weights[i]);
  for (auto j : g.cols) g.wb.push_back(b.weights[j]);
  g.A = Matrix(g.rows.size(), g.rows.size());
  g.B = Matrix(g.cols.size(), g.cols.size());
  for (std::size_t x = 0; x < g.rows.size(); ++x)
    for (std::size_t y = 0; y < g.rows.size(); ++y) g.A(x, y) = pow_q(a.tau(g.rows[x], g.rows[y]), q);
  for (std::size_t x = 0; x < g.cols.size(); ++x)
    for (std::size_t y = 0; y < g.cols.size(); ++y) g.B(x, y) = pow_q(b.tau(g.cols[x], g.cols[y]), q);
  return g;
}

using Kernel = std::function<double(double)>;

inline Kernel power_kernel(double p) {
  if (p == 1.0) return [](double g) { return g; };
  if (p == 2.0) return [](double g) { return g * g; };
  return [p](double g) { return std::pow(g, p); };
}

inline Kernel threshold_kernel(double threshold) {
  return [threshold](double g) { return g > threshold ? 1.0 : 0.0; };
}

inline double h_entry(const CellGrid& g, const Kernel& k, std::size_t c, std::size_t d) {
  return 0.5 * (k(g.gap(c, d)) + k(g.gap(d, c)));
}

inline double quadratic_value(const CellGrid& g, const Kernel& k, std::span<const double> pi) {
  std::vector<std::size_t> nz;
  for (std::size_t c = 0; c < pi.size(); ++c)
    if (pi[c] > 0.0) nz.push_back(c);
  double s = 0.0;
  for (auto c : nz)
    for (auto d : nz) s += k(g.gap(c, d)) * pi[c] * pi[d];
  return s;
}

// Distinct directed gap values among support cells, merged within 1e-12,
// ascending and always starting at 0.
inline std::vector<double> gap_levels(const CellGrid& g, bool symmetric = false) {
  std::vector<double> v;
  const std::size_t m = g.cells();
  v.reserve(m * m + 1);
  v.push_back(0.0);
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t d = 0; d < m; ++d) v.push_back(symmetric ? g.pair_gap(c, d) : g.gap(c, d));
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > kGapMergeTolerance) out.push_back(x);
  return out;
}

// ---------------------------------------------------------------------------
// Exact minimization by face enumeration.
//
// For every support set F the quadratic restricted to aff(F) is minimized in
// closed form when its reduced Hessian is PSD; a feasible stationary point is
// a candidate. An inclusion-minimal-support global minimizer is the unique
// minimizer on the affine hull of its face, so the best candidate is the
// global minimum.

class FaceEnumerator {
 public:
  static constexpr std::size_t kMaxCells = 16;

  explicit FaceEnumerator(const CellGrid& g) : grid_(&g) {
    const std::size_t m = g.cells();
    if (m > kMaxCells) throw std::invalid_argument("face enumeration limited to 16 cells");
    const std::size_t r = g.num_rows(), s = g.num_cols();
    Eigen::VectorXd w(static_cast<Eigen::Index>(r + s));
    for (std::size_t i = 0; i < r; ++i) w(static_cast<Eigen::Index>(i)) = g.wa[i];
    for (std::size_t j = 0; j < s; ++j) w(static_cast<Eigen::Index>(r + j)) = g.wb[j];

    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << m); ++mask) {
      std::uint32_t row_cover = 0, col_cover = 0;
      std::vector<std::size_t> idx;
      for (std::size_t c = 0; c < m; ++c) {
        if (mask >> c & 1U) {
          idx.push_back(c);
          row_cover |= std::uint32_t{1} << g.row_of(c);
          col_cover |= std::uint32_t{1} << g.col_of(c);
        }
      }
      if (row_cover != (std::uint32_t{1} << r) - 1 || col_cover != (std::uint32_t{1} << s) - 1) continue;

      const auto f = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r + s), f);
      for (Eigen::Index k = 0; k < f; ++k) {
        const auto c = idx[static_cast<std::size_t>(k)];
        A(static_cast<Eigen::Index>(g.row_of(c)), k) = 1.0;
        A(static_cast<Eigen::Index>(r + g.col_of(c)), k) = 1.0;
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
      svd.setThreshold(1e-10);
      Eigen::VectorXd x0 = svd.solve(w);
      if ((A * x0 - w).cwiseAbs().maxCoeff() > 1e-10) continue;
      const auto rank = svd.rank();
      Face face;
      face.cells = std::move(idx);
      face.x0 = std::move(x0);
      face.null = svd.matrixV().rightCols(f - rank);
      if (face.null.cols() == 0) {
        peel(face);
        if (face.x0.minCoeff() < -1e-12) continue;
      }
      faces_.push_back(std::move(face));
    }
  }

  struct Minimum {
    double value = std::numeric_limits<double>::infinity();
    std::vector<double> pi;  // over grid cells
  };

  Minimum minimize(const Kernel& k) const {
    const CellGrid& g = *grid_;
    const std::size_t m = g.cells();
    Eigen::MatrixXd H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t c = 0; c < m; ++c)
      for (std::size_t d = 0; d < m; ++d)
        H(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d)) = h_entry(g, k, c, d);
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());

    Minimum best;
    for (const auto& face : faces_) {
      const auto f = static_cast<Eigen::Index>(face.cells.size());
      Eigen::MatrixXd HF(f, f);
      for (Eigen::Index x = 0; x < f; ++x)
        for (Eigen::Index y = 0; y < f; ++y)
          HF(x, y) = H(static_cast<Eigen::Index>(face.cells[static_cast<std::size_t>(x)]),
                       static_cast<Eigen::Index>(face.cells[static_cast<std::size_t>(y)]));
      Eigen::VectorXd x = face.x0;
      if (face.null.cols() > 0) {
        const Eigen::MatrixXd R = face.null.transpose() * HF * face.null;
        const Eigen::VectorXd grad = face.null.transpose() * HF * face.x0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(R);
        const auto& ev = eig.eigenvalues();
        if (ev.minCoeff() < -1e-10 * scale) continue;
        // Pseudo-inverse solve of R z = -grad; inconsistent means the
        // quadratic decreases linearly along a flat direction (no interior minimum).
        Eigen::VectorXd proj = eig.eigenvectors().transpose() * grad;
        Eigen::VectorXd z_eig = Eigen::VectorXd::Zero(proj.size());
        bool consistent = true;
        for (Eigen::Index t = 0; t < proj.size(); ++t) {
          if (ev(t) > 1e-10 * scale) {
            z_eig(t) = -proj(t) / ev(t);
          } else if (std::abs(proj(t)) > 1e-9 * scale) {
            consistent = false;
          }
        }
        if (!consistent) continue;
        x = face.x0 + face.null * (eig.eigenvectors() * z_eig);
      }
      if (x.minCoeff() < -1e-12) continue;
      std::vector<double> pi(m, 0.0);
      for (Eigen::Index t = 0; t < f; ++t)
        pi[face.cells[static_cast<std::size_t>(t)]] = std::max(0.0, x(t));
      const double value = quadratic_value(g, k, pi);
      if (value < best.value - 1e-15 ||
          (value <= best.value + 1e-15 && std::lexicographical_compare(pi.begin(), pi.end(),
                                                                        best.pi.begin(), best.pi.end()))) {
        best.value = value;
        best.pi = std::move(pi);
      }
    }
    return best;
  }

  std::size_t faces() const { return faces_.size(); }

 private:
  struct Face {
    std::vector<std::size_t> cells;
    Eigen::VectorXd x0;
    Eigen::MatrixXd null;
  };

  // A rigid support is a forest: solve it by repeatedly settling a cell at
  // a leaf, so that exact marginals give exact entries.
  void peel(Face& face) const {
    const CellGrid& g = *grid_;
    const std::size_t r = g.num_rows();
    std::vector<double> left(g.wa.begin(), g.wa.end());
    left.insert(left.end(), g.wb.begin(), g.wb.end());
    std::vector<std::size_t> degree(r + g.num_cols(), 0);
    std::vector<char> open(face.cells.size(), 1);
    for (std::size_t c : face.cells) ++degree[g.row_of(c)], ++degree[r + g.col_of(c)];
    for (std::size_t done = 0; done < face.cells.size(); ++done) {
      std::size_t pick = face.cells.size(), leaf = 0;
      for (std::size_t t = 0; t < face.cells.size() && pick == face.cells.size(); ++t) {
        if (!open[t]) continue;
        const std::size_t u = g.row_of(face.cells[t]), v = r + g.col_of(face.cells[t]);
        if (degree[u] == 1) pick = t, leaf = u;
        else if (degree[v] == 1) pick = t, leaf = v;
      }
      if (pick == face.cells.size()) return;
      const std::size_t u = g.row_of(face.cells[pick]), v = r + g.col_of(face.cells[pick]);
      const double x = left[leaf];
      face.x0(static_cast<Eigen::Index>(pick)) = x;
      left[u] -= x;
      left[v] -= x;
      --degree[u];
      --degree[v];
      open[pick] = 0;
    }
  }
  const CellGrid* grid_;
  std::vector<Face> faces_;
};

// ---------------------------------------------------------------------------
// Frank-Wolfe with exact line search. H pi is kept up to date incrementally;
// every linear-minimization vertex has at most rows + cols - 1 nonzeros, so an
// iteration costs O(cells * (rows + cols)) plus one transport solve.

struct LocalMinimum {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> pi;
  std::size_t iterations = 0;
};

inline void add_h_columns(const CellGrid& g, const Kernel& k, std::span<const double> v, double coef,
                          std::vector<double>& out) {
  const std::size_t m = g.cells();
  for (std::size_t d = 0; d < m; ++d) {
    if (v[d] == 0.0) continue;
    const double f = coef * v[d];
    for (std::size_t c = 0; c < m; ++c) out[c] += f * h_entry(g, k, c, d);
  }
}

inline LocalMinimum frank_wolfe(const CellGrid& g, const Kernel& k, std::vector<double> pi,
                                std::size_t max_iterations, double tol = 1e-12) {
  const std::size_t m = g.cells();
  std::vector<double> hpi(m, 0.0);
  add_h_columns(g, k, pi, 1.0, hpi);
  auto dot = [&](std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += x[c] * y[c];
    return s;
  };

  LocalMinimum out;
  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    const double f = dot(pi, hpi);
    const std::size_t cols = g.num_cols();
    const auto vertex = min_cost_transport(g.wa, g.wb, [&](std::size_t i, std::size_t j) {
      return 2.0 * hpi[i * cols + j];
    });
    std::vector<double> s = g.from_small(vertex);
    std::vector<double> hs(m, 0.0);
    add_h_columns(g, k, s, 1.0, hs);
    const double pis = dot(pi, hs);
    const double ss = dot(s, hs);
    const double b = pis - f;            // pi^T H d
    const double cq = ss - 2.0 * pis + f;  // d^T H d
    const double fw_gap = -2.0 * b;
    if (fw_gap <= tol) break;
    double t;
    if (cq > 0.0) {
      t = std::clamp(-b / cq, 0.0, 1.0);
    } else {
      t = (f + 2.0 * b + cq < f) ? 1.0 : 0.0;
    }
    if (t <= 0.0) break;
    for (std::size_t c = 0; c < m; ++c) {
      pi[c] += t * (s[c] - pi[c]);
      hpi[c] += t * (hs[c] - hpi[c]);
    }
  }
  out.iterations = it;
  for (auto& v : pi) v = std::max(v, 0.0);
  out.value = quadratic_value(g, k, pi);
  out.pi = std::move(pi);
  return out;
}

inline std::vector<double> random_vertex(const CellGrid& g, SplitMix64& rng) {
  const auto ro = random_permutation(g.num_rows(), rng);
  const auto co = random_permutation(g.num_cols(), rng);
  return g.from_small(north_west_corner(g.wa, g.wb, ro, co));
}

// ---------------------------------------------------------------------------
// Simulated annealing over north-west-corner vertices, moves are
// transpositions of the row or column order.

inline LocalMinimum anneal(const CellGrid& g,
                           const std::function<double(std::span<const double>)>& objective,
                           SplitMix64& rng, std::size_t steps) {
  auto ro = random_permutation(g.num_rows(), rng);
  auto co = random_permutation(g.num_cols(), rng);
  auto build = [&] { return g.from_small(north_west_corner(g.wa, g.wb, ro, co)); };
  std::vector<double> cur = build();
  double cur_val = objective(cur);
  LocalMinimum best{cur_val, cur, 0};
  const double t0 = std::max(1e-3, cur_val * 0.2);
  for (std::size_t step = 0; step < steps; ++step) {
    const double temp = t0 * std::pow(1e-4, static_cast<double>(step) / static_cast<double>(std::max<std::size_t>(1, steps)));
    const bool on_rows = g.num_cols() < 2 || (g.num_rows() >= 2 && rng.bernoulli(0.5));
    auto& order = on_rows ? ro : co;
    if (order.size() < 2) continue;
    const auto x = static_cast<std::size_t>(rng.below(order.size()));
    auto y = static_cast<std::size_t>(rng.below(order.size() - 1));
    if (y >= x) ++y;
    std::swap(order[x], order[y]);
    auto cand = build();
    const double val = objective(cand);
    if (val <= cur_val || rng.uniform() < std::exp((cur_val - val) / temp)) {
      cur = std::move(cand);
      cur_val = val;
      if (val < best.value) best = {val, cur, step + 1};
    } else {
      std::swap(order[x], order[y]);
    }
  }
  best.iterations = steps;
  return best;
}

}  // namespace lmms::detail
