#pragma once

// Finite bounded Lorentzian metric measure spaces: a time-separation matrix,
// probability weights and an optional spacelike boundary point.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmms {

class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultTolerance = 1e-9;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
      if (rows[i].size() != c) {
        throw StructuralError("ragged matrix: row " + std::to_string(i) +
                              " has " + std::to_string(rows[i].size()) +
                              " entries, expected " + std::to_string(c));
      }
      std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + i * c);
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Square matrix of time separations; tau(i, j) > 0 means i chronologically
// precedes j.
class TimeMatrix : public Matrix {
 public:
  TimeMatrix() = default;
  explicit TimeMatrix(std::size_t n) : Matrix(n, n) {}
  explicit TimeMatrix(Matrix m) : Matrix(std::move(m)) {
    if (rows() != cols()) {
      throw StructuralError("time matrix must be square, got " + std::to_string(rows()) +
                            "x" + std::to_string(cols()));
    }
  }
  static TimeMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    return TimeMatrix(Matrix::from_rows(rows));
  }
  std::size_t size() const noexcept { return rows(); }
};

struct FiniteLMMS {
  TimeMatrix tau;
  std::vector<std::string> labels;
  std::vector<double> weights;
  std::optional<std::size_t> boundary;

  std::size_t size() const noexcept { return tau.size(); }

  bool operator==(const FiniteLMMS&) const = default;
};

inline std::vector<std::string> default_labels(std::size_t n, const std::string& prefix = "p") {
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = prefix + std::to_string(i);
  return out;
}

// Throws StructuralError unless labels, weights and boundary fit the matrix.
inline void check_shape(const FiniteLMMS& s) {
  const std::size_t n = s.size();
  if (n == 0) throw StructuralError("space has no points");
  if (s.labels.size() != n) {
    throw StructuralError("labels: expected " + std::to_string(n) + ", got " +
                          std::to_string(s.labels.size()));
  }
  if (s.weights.size() != n) {
    throw StructuralError("weights: expected " + std::to_string(n) + ", got " +
                          std::to_string(s.weights.size()));
  }
  if (s.boundary && *s.boundary >= n) {
    throw StructuralError("boundary index " + std::to_string(*s.boundary) + " out of range");
  }
  std::set<std::string> seen(s.labels.begin(), s.labels.end());
  if (seen.size() != n) throw StructuralError("labels are not distinct");
}

inline FiniteLMMS make_space(const std::vector<std::vector<double>>& tau,
                             std::vector<double> weights,
                             std::vector<std::string> labels = {},
                             std::optional<std::size_t> boundary = std::nullopt) {
  FiniteLMMS s;
  s.tau = TimeMatrix::from_rows(tau);
  if (labels.empty()) labels = default_labels(s.size());
  s.labels = std::move(labels);
  s.weights = std::move(weights);
  s.boundary = boundary;
  check_shape(s);
  return s;
}

inline FiniteLMMS make_uniform_space(const std::vector<std::vector<double>>& tau,
                                     std::vector<std::string> labels = {}) {
  const std::size_t n = tau.size();
  return make_space(tau, std::vector<double>(n, 1.0 / static_cast<double>(n)), std::move(labels));
}

inline std::vector<std::size_t> support(const FiniteLMMS& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.weights[i] > 0.0) out.push_back(i);
  return out;
}

// Reorders points: result point k is input point order[k].
inline FiniteLMMS permuted(const FiniteLMMS& s, std::span<const std::size_t> order) {
  const std::size_t n = order.size();
  FiniteLMMS out;
  out.tau = TimeMatrix(n);
  out.labels.resize(n);
  out.weights.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    out.labels[a] = s.labels[order[a]];
    out.weights[a] = s.weights[order[a]];
    for (std::size_t b = 0; b < n; ++b) out.tau(a, b) = s.tau(order[a], order[b]);
    if (s.boundary && *s.boundary == order[a]) out.boundary = a;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { error, warning };

enum class Axiom {
  structure,
  nonnegativity,
  zero_diagonal,
  reverse_triangle,
  normalization,
  boundary,
  point_distinction,
};

inline const char* to_string(Axiom a) {
  switch (a) {
    case Axiom::structure: return "structure";
    case Axiom::nonnegativity: return "nonnegativity";
    case Axiom::zero_diagonal: return "zero_diagonal";
    case Axiom::reverse_triangle: return "reverse_triangle";
    case Axiom::normalization: return "normalization";
    case Axiom::boundary: return "boundary";
    case Axiom::point_distinction: return "point_distinction";
  }
  return "unknown";
}

struct Violation {
  Severity severity = Severity::error;
  Axiom axiom = Axiom::structure;
  std::vector<std::size_t> indices;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  // Reverse-triangle failures beyond this count are tallied, not listed.
  std::size_t suppressed = 0;

  bool ok() const {
    return std::none_of(violations.begin(), violations.end(),
                        [](const Violation& v) { return v.severity == Severity::error; });
  }
  bool empty() const { return violations.empty() && suppressed == 0; }
  std::size_t count(Severity sev) const {
    return static_cast<std::size_t>(std::count_if(
        violations.begin(), violations.end(),
        [sev](const Violation& v) { return v.severity == sev; }));
  }
};

struct PointDistinctionReport {
  bool distinguished = true;
  std::vector<std::vector<std::size_t>> merge_classes;
};

namespace detail {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Classes of the relation x ~ y iff tau(x,z) = tau(y,z) and tau(z,x) = tau(z,y)
// for every witness z, closed transitively. Indices refer to `points`.
inline std::vector<std::vector<std::size_t>> indistinguishable_classes(
    const TimeMatrix& tau, std::span<const std::size_t> points, double tol) {
  const std::size_t m = points.size();
  DisjointSets sets(m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      bool same = true;
      for (std::size_t z : points) {
        if (std::abs(tau(points[a], z) - tau(points[b], z)) > tol ||
            std::abs(tau(z, points[a]) - tau(z, points[b])) > tol) {
          same = false;
          break;
        }
      }
      if (same) sets.unite(a, b);
    }
  }
  std::vector<std::vector<std::size_t>> classes;
  std::vector<std::ptrdiff_t> slot(m, -1);
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t root = sets.find(a);
    if (slot[root] < 0) {
      slot[root] = static_cast<std::ptrdiff_t>(classes.size());
      classes.emplace_back();
    }
    classes[static_cast<std::size_t>(slot[root])].push_back(points[a]);
  }
  return classes;
}

}  // namespace detail

inline PointDistinctionReport point_distinction(const FiniteLMMS& s, double tol = kDefaultTolerance) {
  std::vector<std::size_t> all(s.size());
  std::iota(all.begin(), all.end(), 0);
  PointDistinctionReport r;
  r.merge_classes = detail::indistinguishable_classes(s.tau, all, tol);
  r.distinguished = r.merge_classes.size() == s.size();
  return r;
}

inline ValidationReport validate(const FiniteLMMS& s, double tol = kDefaultTolerance) {
  constexpr std::size_t kMaxListed = 100;
  ValidationReport report;
  auto add = [&](Severity sev, Axiom ax, std::vector<std::size_t> idx, std::string msg) {
    report.violations.push_back({sev, ax, std::move(idx), std::move(msg)});
  };

  try {
    check_shape(s);
  } catch (const StructuralError& e) {
    add(Severity::error, Axiom::structure, {}, e.what());
    return report;
  }

  const std::size_t n = s.size();
  const auto& tau = s.tau;
  bool entries_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = tau(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        entries_ok = false;
        add(Severity::error, Axiom::nonnegativity, {i, j},
            "tau(" + s.labels[i] + "," + s.labels[j] + ") is negative or not finite");
      }
    }
    if (tau(i, i) != 0.0) {
      add(Severity::error, Axiom::zero_diagonal, {i, i},
          "tau(" + s.labels[i] + "," + s.labels[i] + ") must be 0");
    }
  }

  if (entries_ok) {
    std::size_t listed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double a = tau(i, j);
        if (a <= 0.0) continue;
        for (std::size_t l = 0; l < n; ++l) {
          const double b = tau(j, l);
          if (b <= 0.0) continue;
          if (a + b > tau(i, l) + tol) {
            if (listed < kMaxListed) {
              std::ostringstream msg;
              msg << "reverse triangle fails at (" << s.labels[i] << "," << s.labels[j] << ","
                  << s.labels[l] << "): " << a << " + " << b << " > " << tau(i, l);
              add(Severity::error, Axiom::reverse_triangle, {i, j, l}, msg.str());
              ++listed;
            } else {
              ++report.suppressed;
            }
          }
        }
      }
    }
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = s.weights[i];
    if (!std::isfinite(w) || w < 0.0) {
      add(Severity::error, Axiom::normalization, {i},
          "weight of " + s.labels[i] + " is negative or not finite");
    }
    total += w;
  }
  if (!(std::abs(total - 1.0) <= kDefaultTolerance)) {
    std::ostringstream msg;
    msg << "weights sum to " << total << ", expected 1";
    add(Severity::error, Axiom::normalization, {}, msg.str());
  }

  if (s.boundary) {
    const std::size_t b = *s.boundary;
    for (std::size_t j = 0; j < n; ++j) {
      if (tau(b, j) != 0.0 || tau(j, b) != 0.0) {
        add(Severity::error, Axiom::boundary, {b, j},
            "boundary " + s.labels[b] + " is causally related to " + s.labels[j]);
      }
    }
  }

  if (entries_ok) {
    for (const auto& cls : point_distinction(s, tol).merge_classes) {
      if (cls.size() < 2) continue;
      std::string names;
      for (std::size_t k = 0; k < cls.size(); ++k) names += (k ? "," : "") + s.labels[cls[k]];
      add(Severity::warning, Axiom::point_distinction, cls, "points " + names + " indistinguishable");
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Structural operations

inline double diameter(const FiniteLMMS& s) {
  double d = 0.0;
  const auto supp = support(s);
  for (std::size_t i : supp)
    for (std::size_t j : supp) d = std::max(d, s.tau(i, j));
  return d;
}

/// Distinction (Noldus) metric: the larger of the sup-gaps between the two
/// points' tau-rows and tau-columns, taken over every point of the space.
inline Matrix noldus_metric(const FiniteLMMS& s) {
  const std::size_t n = s.size();
  Matrix out(n, n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      double gap = 0.0;
      for (std::size_t z = 0; z < n; ++z) {
        gap = std::max(gap, std::abs(s.tau(x, z) - s.tau(y, z)));
        gap = std::max(gap, std::abs(s.tau(z, x) - s.tau(z, y)));
      }
      out(x, y) = out(y, x) = gap;
    }
  }
  return out;
}

namespace detail {

// Order-free sort key: weight descending, then the sorted tau-row and
// tau-column multisets, then the label.
inline std::vector<std::size_t> canonical_order(const FiniteLMMS& s) {
  const std::size_t n = s.size();
  std::vector<std::vector<double>> rows(n), cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      rows[i].push_back(s.tau(i, j));
      cols[i].push_back(s.tau(j, i));
    }
    std::sort(rows[i].begin(), rows[i].end());
    std::sort(cols[i].begin(), cols[i].end());
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (s.weights[a] != s.weights[b]) return s.weights[a] > s.weights[b];
    if (rows[a] != rows[b]) return rows[a] < rows[b];
    if (cols[a] != cols[b]) return cols[a] < cols[b];
    return s.labels[a] < s.labels[b];
  });
  return order;
}

}  // namespace detail

inline FiniteLMMS canonicalize(const FiniteLMMS& s) {
  const auto order = detail::canonical_order(s);
  return permuted(s, order);
}

struct QuotientMap {
  FiniteLMMS space;
  // classes[k] lists the original point indices merged into point k.
  std::vector<std::vector<std::size_t>> classes;
};

/// Restricts to the positive-weight support, merges indistinguishable points
/// (witnesses taken from the support), sums their weights and averages tau
/// over each class pair. Output points are in canonical order.
inline QuotientMap distance_quotient_map(const FiniteLMMS& s, double tol = kDefaultTolerance) {
  check_shape(s);
  const auto supp = support(s);
  if (supp.empty()) throw StructuralError("space has no positive-weight point");
  auto classes = detail::indistinguishable_classes(s.tau, supp, tol);
  const std::size_t m = classes.size();

  FiniteLMMS q;
  q.tau = TimeMatrix(m);
  q.labels.resize(m);
  q.weights.assign(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    q.labels[a] = s.labels[classes[a].front()];
    for (std::size_t i : classes[a]) {
      q.weights[a] += s.weights[i];
      if (s.boundary && *s.boundary == i) q.boundary = a;
    }
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      double sum = 0.0;
      for (std::size_t i : classes[a])
        for (std::size_t j : classes[b]) sum += s.tau(i, j);
      q.tau(a, b) = sum / static_cast<double>(classes[a].size() * classes[b].size());
    }
  }

  const auto order = detail::canonical_order(q);
  QuotientMap out;
  out.space = permuted(q, order);
  out.classes.reserve(m);
  for (std::size_t k : order) out.classes.push_back(classes[k]);
  return out;
}

inline FiniteLMMS distance_quotient(const FiniteLMMS& s, double tol = kDefaultTolerance) {
  return distance_quotient_map(s, tol).space;
}

inline std::string fresh_label(const std::vector<std::string>& taken, std::string base) {
  while (std::find(taken.begin(), taken.end(), base) != taken.end()) base += "'";
  return base;
}

/// Adjoins a zero-weight spacelike boundary point with all-zero tau row and
/// column. Throws if the space already has a boundary.
inline FiniteLMMS one_point_compactification(const FiniteLMMS& s) {
  check_shape(s);
  if (s.boundary) throw StructuralError("space already has a spacelike boundary point");
  const std::size_t n = s.size();
  FiniteLMMS out;
  out.tau = TimeMatrix(n + 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.tau(i, j) = s.tau(i, j);
  out.labels = s.labels;
  out.labels.push_back(fresh_label(s.labels, "i0"));
  out.weights = s.weights;
  out.weights.push_back(0.0);
  out.boundary = n;
  return out;
}

/// Glues two spaces along their spacelike boundaries (adjoining one where
/// missing). Points keep their side's tau, cross pairs are unrelated, and the
/// measure is the alpha-mixture of the two.
inline FiniteLMMS disjoint_union(const FiniteLMMS& a_in, const FiniteLMMS& b_in, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0,1]");
  }
  const FiniteLMMS a = a_in.boundary ? a_in : one_point_compactification(a_in);
  const FiniteLMMS b = b_in.boundary ? b_in : one_point_compactification(b_in);
  const std::size_t ia = *a.boundary, ib = *b.boundary;

  std::vector<std::size_t> a_pts, b_pts;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (i != ia) a_pts.push_back(i);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (i != ib) b_pts.push_back(i);

  const std::size_t na = a_pts.size(), nb = b_pts.size();
  const std::size_t n = na + nb + 1;
  FiniteLMMS out;
  out.tau = TimeMatrix(n);
  out.labels.resize(n);
  out.weights.resize(n);
  for (std::size_t x = 0; x < na; ++x) {
    out.labels[x] = "L:" + a.labels[a_pts[x]];
    out.weights[x] = alpha * a.weights[a_pts[x]];
    for (std::size_t y = 0; y < na; ++y) out.tau(x, y) = a.tau(a_pts[x], a_pts[y]);
  }
  for (std::size_t x = 0; x < nb; ++x) {
    out.labels[na + x] = "R:" + b.labels[b_pts[x]];
    out.weights[na + x] = (1.0 - alpha) * b.weights[b_pts[x]];
    for (std::size_t y = 0; y < nb; ++y) out.tau(na + x, na + y) = b.tau(b_pts[x], b_pts[y]);
  }
  out.labels[n - 1] = a.labels[ia];
  out.weights[n - 1] = alpha * a.weights[ia] + (1.0 - alpha) * b.weights[ib];
  out.boundary = n - 1;
  return out;
}

}  // namespace lmms
