#pragma once

// Matrix snapshots, matrix laws and the isomorphy decision procedure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lmms/core.hpp"
#include "lmms/rng.hpp"

namespace lmms {

inline Matrix matrix_snapshot(const FiniteLMMS& s, std::span<const std::size_t> idx) {
  const std::size_t k = idx.size();
  for (auto i : idx)
    if (i >= s.size()) throw std::out_of_range("snapshot index out of range");
  Matrix m(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) m(i, j) = s.tau(idx[i], idx[j]);
  return m;
}

/// Row-major "%.12g" entries, ',' between entries and ';' between rows.
inline std::string encode_matrix(const Matrix& m) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += ';';
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      std::snprintf(buf, sizeof buf, "%.12g", m(i, j) == 0.0 ? 0.0 : m(i, j));
      out += buf;
    }
  }
  return out;
}

/// Membership in G^k: nonnegative, zero diagonal, reverse triangle.
inline bool in_gk(const Matrix& m, double tol = kDefaultTolerance) {
  const std::size_t k = m.rows();
  if (m.cols() != k) return false;
  for (std::size_t i = 0; i < k; ++i) {
    if (m(i, i) != 0.0) return false;
    for (std::size_t j = 0; j < k; ++j)
      if (!(m(i, j) >= 0.0) || !std::isfinite(m(i, j))) return false;
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < k; ++l)
        if (m(i, j) > 0.0 && m(j, l) > 0.0 && m(i, j) + m(j, l) > m(i, l) + tol) return false;
  return true;
}

struct LawAtom {
  Matrix matrix;
  double mass = 0.0;
};

struct MatrixLaw {
  std::size_t k = 0;
  std::map<std::string, LawAtom> atoms;

  void add(const Matrix& m, double mass) {
    auto [it, fresh] = atoms.try_emplace(encode_matrix(m), LawAtom{m, 0.0});
    it->second.mass += mass;
  }
  double total() const {
    double s = 0.0;
    for (const auto& [key, a] : atoms) s += a.mass;
    return s;
  }
};

inline constexpr double kExactLawLimit = 1e7;

inline bool exact_law_feasible(const FiniteLMMS& s, std::size_t k) {
  return std::pow(static_cast<double>(support(s).size()), static_cast<double>(k)) <= kExactLawLimit;
}

/// Pushforward of m^k under the snapshot map, by enumeration of support tuples.
inline MatrixLaw exact_matrix_law(const FiniteLMMS& s, std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!exact_law_feasible(s, k)) throw std::invalid_argument("exact law needs n^k <= 1e7");
  const auto supp = support(s);
  MatrixLaw law{k, {}};
  std::vector<std::size_t> digit(k, 0), idx(k);
  for (;;) {
    double mass = 1.0;
    for (std::size_t t = 0; t < k; ++t) {
      idx[t] = supp[digit[t]];
      mass *= s.weights[idx[t]];
    }
    law.add(matrix_snapshot(s, idx), mass);
    std::size_t t = k;
    while (t > 0 && ++digit[t - 1] == supp.size()) digit[--t] = 0;
    if (t == 0) break;
  }
  return law;
}

/// Empirical law of `samples` i.i.d. snapshots.
inline MatrixLaw sample_matrix_law(const FiniteLMMS& s, std::size_t k, std::size_t samples, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  SplitMix64 rng(seed);
  const DiscreteSampler draw(s.weights);
  MatrixLaw law{k, {}};
  std::map<std::string, std::size_t> counts;
  std::vector<std::size_t> idx(k);
  for (std::size_t n = 0; n < samples; ++n) {
    for (auto& i : idx) i = draw(rng);
    const Matrix m = matrix_snapshot(s, idx);
    auto [it, fresh] = law.atoms.try_emplace(encode_matrix(m), LawAtom{m, 0.0});
    ++counts[it->first];
  }
  for (auto& [key, atom] : law.atoms)
    atom.mass = static_cast<double>(counts[key]) / static_cast<double>(samples);
  return law;
}

inline double integrate(const MatrixLaw& law, const std::function<double(const Matrix&)>& phi) {
  double s = 0.0;
  for (const auto& [key, a] : law.atoms) s += a.mass * phi(a.matrix);
  return s;
}

/// Polynomial of degree k: the integral of phi over the k-th matrix law.
inline double evaluate_polynomial(const FiniteLMMS& s, std::size_t k,
                                  const std::function<double(const Matrix&)>& phi) {
  return integrate(exact_matrix_law(s, k), phi);
}

inline double total_variation(const MatrixLaw& p, const MatrixLaw& q) {
  double s = 0.0;
  for (const auto& [key, a] : p.atoms) {
    const auto it = q.atoms.find(key);
    s += std::abs(a.mass - (it == q.atoms.end() ? 0.0 : it->second.mass));
  }
  for (const auto& [key, a] : q.atoms)
    if (!p.atoms.count(key)) s += a.mass;
  return 0.5 * s;
}

/// Same atoms with masses equal within tol.
inline bool laws_equal(const MatrixLaw& p, const MatrixLaw& q, double tol = 1e-12) {
  if (p.k != q.k || p.atoms.size() != q.atoms.size()) return false;
  for (const auto& [key, a] : p.atoms) {
    const auto it = q.atoms.find(key);
    if (it == q.atoms.end() || std::abs(it->second.mass - a.mass) > tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Bounded-Lipschitz test functions phi_B(A) = max(0, 1 - |A - B|_max).

inline double sup_distance(const Matrix& x, const Matrix& y) {
  double d = 0.0;
  for (std::size_t t = 0; t < x.data().size(); ++t) d = std::max(d, std::abs(x.data()[t] - y.data()[t]));
  return d;
}

struct TestFunctionFamily {
  std::size_t k = 0;
  std::vector<Matrix> centers;

  double operator()(std::size_t i, const Matrix& a) const {
    return std::max(0.0, 1.0 - sup_distance(a, centers.at(i)));
  }
  std::size_t size() const { return centers.size(); }
};

inline constexpr std::size_t kMaxCenters = 64;

/// Centers: the atoms of both laws, then the G^k matrices with entries in
/// {0, diam/2, diam}; deduplicated, capped at `cap`.
inline TestFunctionFamily make_test_family(const MatrixLaw& la, const MatrixLaw& lb, double diam,
                                           std::size_t cap = kMaxCenters) {
  TestFunctionFamily fam{la.k, {}};
  std::map<std::string, Matrix> seen;
  auto push = [&](const Matrix& m) {
    if (fam.centers.size() >= cap) return;
    if (seen.try_emplace(encode_matrix(m), m).second) fam.centers.push_back(m);
  };
  // Union in key order, so the family does not depend on argument order.
  std::map<std::string, const Matrix*> atoms;
  for (const auto& [key, a] : la.atoms) atoms.emplace(key, &a.matrix);
  for (const auto& [key, a] : lb.atoms) atoms.emplace(key, &a.matrix);
  for (const auto& [key, m] : atoms) push(*m);

  const std::size_t k = la.k;
  const std::size_t off = k * (k - 1);
  const double levels[3] = {0.0, diam / 2.0, diam};
  std::vector<std::size_t> digit(off, 0);
  for (bool more = true; more && fam.centers.size() < cap;) {
    Matrix m(k, k);
    std::size_t t = 0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        if (i != j) m(i, j) = levels[digit[t++]];
    if (in_gk(m)) push(m);
    std::size_t p = off;
    while (p > 0 && ++digit[p - 1] == 3) digit[--p] = 0;
    more = p > 0;
  }
  return fam;
}

/// sum_i 2^-(i+1) |int phi_i dP - int phi_i dQ|.
inline double family_gap(const MatrixLaw& p, const MatrixLaw& q, const TestFunctionFamily& fam) {
  double s = 0.0, w = 0.5;
  for (std::size_t i = 0; i < fam.size(); ++i, w *= 0.5) {
    auto phi = [&](const Matrix& a) { return fam(i, a); };
    s += w * std::abs(integrate(p, phi) - integrate(q, phi));
  }
  return s;
}

inline MatrixLaw law_of(const FiniteLMMS& s, std::size_t k, std::size_t samples, std::uint64_t seed) {
  return exact_law_feasible(s, k) ? exact_matrix_law(s, k) : sample_matrix_law(s, k, samples, seed);
}

/// Truncated intrinsic distance sum_{k <= k_max} 2^-k d_k over the
/// deterministic test family (sampled laws above the enumeration limit).
inline double intrinsic_D(const FiniteLMMS& a, const FiniteLMMS& b, std::size_t k_max = 3,
                          std::size_t family_size = kMaxCenters, std::uint64_t seed = 0,
                          std::size_t samples = 100000) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  const double diam = std::max(diameter(a), diameter(b));
  double total = 0.0, w = 0.5;
  for (std::size_t k = 1; k <= k_max; ++k, w *= 0.5) {
    const auto la = law_of(a, k, samples, SplitMix64(seed).fork(2 * k)());
    const auto lb = law_of(b, k, samples, SplitMix64(seed).fork(2 * k + 1)());
    total += w * family_gap(la, lb, make_test_family(la, lb, diam, family_size));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Isomorphy

struct IsomorphyResult {
  bool isomorphic = false;
  // (index in a, index in b) for one representative of each quotient class.
  std::vector<std::pair<std::size_t, std::size_t>> witness;
};

namespace detail {

inline bool close_sorted(std::vector<double> x, std::vector<double> y, double tol) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  for (std::size_t t = 0; t < x.size(); ++t)
    if (std::abs(x[t] - y[t]) > tol) return false;
  return true;
}

}  // namespace detail

/// Quotients both spaces, then searches for a weight- and tau-preserving
/// bijection by backtracking, pruned by per-point invariants.
inline IsomorphyResult isomorphy_test(const FiniteLMMS& a, const FiniteLMMS& b, double tol = kDefaultTolerance) {
  const auto qa = distance_quotient_map(a, tol);
  const auto qb = distance_quotient_map(b, tol);
  const FiniteLMMS& x = qa.space;
  const FiniteLMMS& y = qb.space;
  const std::size_t n = x.size();
  IsomorphyResult out;
  if (y.size() != n) return out;

  const Matrix nx = noldus_metric(x), ny = noldus_metric(y);
  std::vector<std::vector<char>> compatible(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(x.weights[i] - y.weights[j]) > tol) continue;
      std::vector<double> rx(x.tau.row(i).begin(), x.tau.row(i).end()), ry(y.tau.row(j).begin(), y.tau.row(j).end());
      std::vector<double> cx, cy;
      for (std::size_t t = 0; t < n; ++t) cx.push_back(x.tau(t, i)), cy.push_back(y.tau(t, j));
      std::vector<double> mx(nx.row(i).begin(), nx.row(i).end()), my(ny.row(j).begin(), ny.row(j).end());
      compatible[i][j] = detail::close_sorted(rx, ry, tol) && detail::close_sorted(cx, cy, tol) &&
                         detail::close_sorted(mx, my, tol);
    }
  }

  std::vector<std::size_t> image(n);
  std::vector<char> used(n, 0);
  std::function<bool(std::size_t)> extend = [&](std::size_t i) {
    if (i == n) return true;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j] || !compatible[i][j]) continue;
      bool ok = true;
      for (std::size_t p = 0; p < i && ok; ++p) {
        ok = std::abs(x.tau(i, p) - y.tau(j, image[p])) <= tol &&
             std::abs(x.tau(p, i) - y.tau(image[p], j)) <= tol;
      }
      if (!ok) continue;
      image[i] = j;
      used[j] = 1;
      if (extend(i + 1)) return true;
      used[j] = 0;
    }
    return false;
  };
  if (!extend(0)) return out;
  out.isomorphic = true;
  for (std::size_t i = 0; i < n; ++i)
    out.witness.emplace_back(qa.classes[i].front(), qb.classes[image[i]].front());
  std::sort(out.witness.begin(), out.witness.end());
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction experiment

struct BootstrapResult {
  double observed = 0.0, mean = 0.0, sd = 0.0;
  bool distinguishable = false;
};

/// Two-sample bootstrap of the TV gap under the pooled law: resample both
/// samples from the pooled law and flag the observed gap above mean + 3 sd.
inline BootstrapResult bootstrap_tv(const MatrixLaw& p, std::size_t np, const MatrixLaw& q, std::size_t nq,
                                    std::uint64_t seed, std::size_t resamples = 200) {
  BootstrapResult r;
  r.observed = total_variation(p, q);
  std::map<std::string, double> pooled;
  const double fp = static_cast<double>(np) / static_cast<double>(np + nq);
  for (const auto& [key, a] : p.atoms) pooled[key] += fp * a.mass;
  for (const auto& [key, a] : q.atoms) pooled[key] += (1.0 - fp) * a.mass;
  std::vector<double> w;
  for (const auto& [key, m] : pooled) w.push_back(m);
  const DiscreteSampler draw(w);
  SplitMix64 rng(seed);
  std::vector<double> gaps;
  std::vector<double> hp(w.size()), hq(w.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    std::fill(hp.begin(), hp.end(), 0.0);
    std::fill(hq.begin(), hq.end(), 0.0);
    for (std::size_t t = 0; t < np; ++t) hp[draw(rng)] += 1.0 / static_cast<double>(np);
    for (std::size_t t = 0; t < nq; ++t) hq[draw(rng)] += 1.0 / static_cast<double>(nq);
    double s = 0.0;
    for (std::size_t t = 0; t < w.size(); ++t) s += std::abs(hp[t] - hq[t]);
    gaps.push_back(0.5 * s);
  }
  for (double g : gaps) r.mean += g;
  r.mean /= static_cast<double>(gaps.size());
  for (double g : gaps) r.sd += (g - r.mean) * (g - r.mean);
  r.sd = std::sqrt(r.sd / static_cast<double>(gaps.size() > 1 ? gaps.size() - 1 : 1));
  r.distinguishable = r.observed > r.mean + 3.0 * r.sd;
  return r;
}

struct LawComparison {
  std::size_t k = 0;
  bool exact = true;
  double tv = 0.0;
  double family_gap = 0.0;
  bool equal = true;
  std::optional<BootstrapResult> bootstrap;
};

struct ReconstructionReport {
  std::vector<LawComparison> per_k;
  double intrinsic_D = 0.0;
  bool isomorphic = false;
  std::vector<std::pair<std::size_t, std::size_t>> witness;
  bool laws_agree = true;
  bool verdicts_agree = true;
};

inline ReconstructionReport reconstruction_experiment(const FiniteLMMS& a, const FiniteLMMS& b,
                                                      std::size_t k_max = 3, std::size_t samples = 10000,
                                                      std::uint64_t seed = 0) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  ReconstructionReport rep;
  const double diam = std::max(diameter(a), diameter(b));
  double w = 0.5;
  for (std::size_t k = 1; k <= k_max; ++k, w *= 0.5) {
    LawComparison c;
    c.k = k;
    c.exact = exact_law_feasible(a, k) && exact_law_feasible(b, k);
    MatrixLaw la, lb;
    if (c.exact) {
      la = exact_matrix_law(a, k);
      lb = exact_matrix_law(b, k);
      c.equal = laws_equal(la, lb);
    } else {
      SplitMix64 base(seed);
      la = sample_matrix_law(a, k, samples, base.fork(3 * k)());
      lb = sample_matrix_law(b, k, samples, base.fork(3 * k + 1)());
      c.bootstrap = bootstrap_tv(la, samples, lb, samples, base.fork(3 * k + 2)());
      c.equal = !c.bootstrap->distinguishable;
    }
    c.tv = total_variation(la, lb);
    c.family_gap = family_gap(la, lb, make_test_family(la, lb, diam));
    rep.intrinsic_D += w * c.family_gap;
    rep.laws_agree = rep.laws_agree && c.equal;
    rep.per_k.push_back(std::move(c));
  }
  const auto iso = isomorphy_test(a, b);
  rep.isomorphic = iso.isomorphic;
  rep.witness = iso.witness;
  rep.verdicts_agree = rep.isomorphic == rep.laws_agree;
  return rep;
}

}  // namespace lmms
