#pragma once

// Couplings of two weight vectors and the per-coupling distortion
// functionals minimized by every distance in this library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "lmms/core.hpp"
#include "lmms/rng.hpp"

namespace lmms {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kGapMergeTolerance = 1e-12;

// Joint weight matrix pi(i, i') with prescribed marginals.
class Coupling : public Matrix {
 public:
  Coupling() = default;
  Coupling(std::size_t rows, std::size_t cols) : Matrix(rows, cols) {}
  explicit Coupling(Matrix m) : Matrix(std::move(m)) {}

  std::vector<double> row_sums() const {
    std::vector<double> out(rows(), 0.0);
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) out[i] += (*this)(i, j);
    return out;
  }
  std::vector<double> col_sums() const {
    std::vector<double> out(cols(), 0.0);
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) out[j] += (*this)(i, j);
    return out;
  }
};

inline bool is_coupling_of(const Coupling& pi, std::span<const double> wa,
                           std::span<const double> wb, double tol = kDefaultTolerance) {
  if (pi.rows() != wa.size() || pi.cols() != wb.size()) return false;
  for (double v : pi.data())
    if (!(v >= 0.0)) return false;
  const auto rs = pi.row_sums();
  const auto cs = pi.col_sums();
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (std::abs(rs[i] - wa[i]) > tol) return false;
  for (std::size_t j = 0; j < cs.size(); ++j)
    if (std::abs(cs[j] - wb[j]) > tol) return false;
  return true;
}

inline Coupling product_coupling(std::span<const double> wa, std::span<const double> wb) {
  Coupling pi(wa.size(), wb.size());
  for (std::size_t i = 0; i < wa.size(); ++i)
    for (std::size_t j = 0; j < wb.size(); ++j) pi(i, j) = wa[i] * wb[j];
  return pi;
}

inline Coupling product_coupling(const FiniteLMMS& a, const FiniteLMMS& b) {
  return product_coupling(a.weights, b.weights);
}

/// Composes pi12 (a to b) and pi23 (b to c) through the middle marginal:
/// pi13(i,k) = sum_j pi12(i,j) pi23(j,k) / mid(j) over mid(j) > 0.
inline Coupling glue(const Coupling& pi12, const Coupling& pi23, std::span<const double> mid,
                     double tol = kDefaultTolerance) {
  if (pi12.cols() != mid.size() || pi23.rows() != mid.size()) {
    throw StructuralError("glue: middle dimension mismatch");
  }
  const auto cs = pi12.col_sums();
  const auto rs = pi23.row_sums();
  for (std::size_t j = 0; j < mid.size(); ++j) {
    if (std::abs(cs[j] - mid[j]) > tol || std::abs(rs[j] - mid[j]) > tol) {
      throw std::invalid_argument("glue: middle marginals disagree at index " + std::to_string(j));
    }
  }
  Coupling out(pi12.rows(), pi23.cols());
  for (std::size_t j = 0; j < mid.size(); ++j) {
    if (!(mid[j] > 0.0)) continue;
    for (std::size_t i = 0; i < pi12.rows(); ++i) {
      const double left = pi12(i, j);
      if (left == 0.0) continue;
      const double f = left / mid[j];
      for (std::size_t k = 0; k < pi23.cols(); ++k) out(i, k) += f * pi23(j, k);
    }
  }
  return out;
}

/// Vertex of the transportation polytope from the north-west corner rule
/// after permuting rows and columns.
inline Coupling north_west_corner(std::span<const double> wa, std::span<const double> wb,
                                  std::span<const std::size_t> row_order,
                                  std::span<const std::size_t> col_order) {
  Coupling pi(wa.size(), wb.size());
  std::vector<double> ra(wa.begin(), wa.end()), rb(wb.begin(), wb.end());
  std::size_t r = 0, c = 0;
  while (r < row_order.size() && c < col_order.size()) {
    const std::size_t i = row_order[r], j = col_order[c];
    const double m = std::min(ra[i], rb[j]);
    pi(i, j) += std::max(m, 0.0);
    ra[i] -= m;
    rb[j] -= m;
    if (ra[i] <= rb[j]) {
      ++r;
    } else {
      ++c;
    }
  }
  return pi;
}

/// Random coupling: a random convex combination of `vertices` random
/// north-west-corner vertices.
inline Coupling random_coupling(std::span<const double> wa, std::span<const double> wb,
                                SplitMix64& rng, std::size_t vertices = 3) {
  Coupling out(wa.size(), wb.size());
  std::vector<double> lambdas(vertices);
  double total = 0.0;
  for (auto& l : lambdas) total += (l = -std::log(1.0 - rng.uniform()));
  for (std::size_t v = 0; v < vertices; ++v) {
    const auto ro = random_permutation(wa.size(), rng);
    const auto co = random_permutation(wb.size(), rng);
    const auto vert = north_west_corner(wa, wb, ro, co);
    const double l = lambdas[v] / total;
    for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] += l * vert.data()[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distortion profiles

struct ProfileAtom {
  double gap = 0.0;
  double mass = 0.0;
};

/// Law of |tau(x,y)^q - tau'(x',y')^q| under pi (x) pi, as sorted atoms with
/// strictly increasing gaps.
struct DistortionProfile {
  std::vector<ProfileAtom> atoms;

  double total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass;
    return s;
  }
  // Mass strictly above eps.
  double tail(double eps) const {
    double s = 0.0;
    for (auto it = atoms.rbegin(); it != atoms.rend() && it->gap > eps; ++it) s += it->mass;
    return s;
  }
};

inline DistortionProfile make_profile(std::vector<ProfileAtom> raw) {
  std::sort(raw.begin(), raw.end(),
            [](const ProfileAtom& x, const ProfileAtom& y) { return x.gap < y.gap; });
  DistortionProfile p;
  for (const auto& a : raw) {
    if (!(a.mass > 0.0)) continue;
    if (!p.atoms.empty() && a.gap - p.atoms.back().gap <= kGapMergeTolerance) {
      p.atoms.back().mass += a.mass;
    } else {
      p.atoms.push_back(a);
    }
  }
  return p;
}

inline double pow_q(double t, double q) { return q == 1.0 ? t : std::pow(t, q); }

inline DistortionProfile distortion_profile(const FiniteLMMS& a, const FiniteLMMS& b,
                                            const Coupling& pi, double q = 1.0) {
  if (pi.rows() != a.size() || pi.cols() != b.size()) {
    throw StructuralError("coupling dimensions do not match the spaces");
  }
  if (!(q >= 1.0)) throw std::invalid_argument("q must be >= 1");
  struct Cell {
    std::size_t i, j;
    double mass;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < pi.rows(); ++i)
    for (std::size_t j = 0; j < pi.cols(); ++j)
      if (pi(i, j) > 0.0) cells.push_back({i, j, pi(i, j)});

  std::vector<ProfileAtom> raw;
  raw.reserve(cells.size() * cells.size());
  for (const auto& c : cells) {
    for (const auto& d : cells) {
      const double gap = std::abs(pow_q(a.tau(c.i, d.i), q) - pow_q(b.tau(c.j, d.j), q));
      raw.push_back({gap, c.mass * d.mass});
    }
  }
  return make_profile(std::move(raw));
}

/// Smallest eps >= 0 whose tail mass (gaps > eps) is at most eps. The tail is
/// a right-continuous step function, so the optimum is either a gap value or
/// a tail value; both are scanned.
inline double eps_level(const DistortionProfile& p) {
  const auto& at = p.atoms;
  const std::size_t m = at.size();
  // suffix[k] = mass of atoms k..m-1; tail(eps) = suffix[first atom with gap > eps].
  std::vector<double> suffix(m + 1, 0.0);
  for (std::size_t k = m; k-- > 0;) suffix[k] = suffix[k + 1] + at[k].mass;

  std::vector<double> candidates{0.0};
  for (std::size_t k = 0; k < m; ++k) {
    candidates.push_back(at[k].gap);
    candidates.push_back(suffix[k]);
  }
  candidates.push_back(suffix[0]);
  std::sort(candidates.begin(), candidates.end());

  for (double c : candidates) {
    if (c < 0.0) continue;
    const auto it = std::upper_bound(at.begin(), at.end(), c,
                                     [](double v, const ProfileAtom& x) { return v < x.gap; });
    const double tail = suffix[static_cast<std::size_t>(it - at.begin())];
    if (tail <= c) return c;
  }
  return suffix[0];
}

/// (sum mass * gap^p)^(1/p); p = infinity gives the largest gap carrying mass.
inline double lp_distortion(const DistortionProfile& prof, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
  if (std::isinf(p)) {
    double g = 0.0;
    for (const auto& a : prof.atoms)
      if (a.mass > 0.0) g = std::max(g, a.gap);
    return g;
  }
  double s = 0.0;
  for (const auto& a : prof.atoms) s += a.mass * (p == 1.0 ? a.gap : std::pow(a.gap, p));
  return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

}  // namespace lmms
