#pragma once

// Distortion distances LΔ₀, LΔ_p and LΔ_∞ between finite spaces, minimized
// over couplings.
//
//   exact        certified optimum for small supports (face enumeration for
//                the quadratic programs, clique search for L∞)
//   frank_wolfe  multi-restart conditional gradient, an upper bound
//   anneal       simulated annealing over transport vertices, an upper bound
//   grid         lattice over the free coordinates of the polytope

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lmms/coupling.hpp"
#include "lmms/detail/cliques.hpp"
#include "lmms/detail/parallel.hpp"
#include "lmms/detail/quadratic.hpp"
#include "lmms/detail/transport.hpp"
#include "lmms/witness.hpp"

namespace lmms {

enum class Method { exact, frank_wolfe, anneal, grid, automatic };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::frank_wolfe: return "frank_wolfe";
    case Method::anneal: return "anneal";
    case Method::grid: return "grid";
    case Method::automatic: return "auto";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "exact") return Method::exact;
  if (s == "frank_wolfe" || s == "fw") return Method::frank_wolfe;
  if (s == "anneal") return Method::anneal;
  if (s == "grid") return Method::grid;
  if (s == "auto") return Method::automatic;
  throw std::invalid_argument("unknown solver '" + std::string(s) + "'");
}

struct Budget {
  std::size_t iterations = 400;       // per restart (FW steps, anneal moves)
  std::size_t restarts = 8;
  std::size_t node_limit = 2'000'000;  // search nodes / lattice points
  double grid_step = 1e-3;
  std::size_t exact_cells = 9;        // support cells allowed on the exact path
  unsigned threads = 1;
};

struct DistanceResult {
  double value = 0.0;
  Coupling coupling;
  Method method = Method::exact;
  bool certified = false;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::optional<BoxWitness> box;
  std::optional<Correspondence> correspondence;
};

namespace detail {

inline DistortionProfile grid_profile(const CellGrid& g, std::span<const double> pi) {
  std::vector<std::size_t> nz;
  for (std::size_t c = 0; c < pi.size(); ++c)
    if (pi[c] > 0.0) nz.push_back(c);
  std::vector<ProfileAtom> raw;
  raw.reserve(nz.size() * nz.size());
  for (auto c : nz)
    for (auto d : nz) raw.push_back({g.gap(c, d), pi[c] * pi[d]});
  return make_profile(std::move(raw));
}

struct Functional {
  enum Kind { l0, lp } kind = l0;
  double p = 1.0;  // infinity for L∞

  double operator()(const DistortionProfile& prof) const {
    return kind == l0 ? eps_level(prof) : lp_distortion(prof, p);
  }
};

inline double evaluate(const CellGrid& g, const Functional& f, std::span<const double> pi) {
  return f(grid_profile(g, pi));
}

struct Candidate {
  double value = kInfinity;
  std::vector<double> pi;
  std::size_t iterations = 0;
};

// Strict order on candidates: value first, then the lexicographically
// smaller coupling.
inline bool better(const Candidate& x, const Candidate& y) {
  if (x.value < y.value - 1e-12) return true;
  if (x.value > y.value + 1e-12) return false;
  if (y.pi.empty()) return !x.pi.empty();
  return std::lexicographical_compare(x.pi.begin(), x.pi.end(), y.pi.begin(), y.pi.end());
}

inline Candidate best_of(std::vector<Candidate> cs) {
  Candidate best;
  std::size_t its = 0;
  for (auto& c : cs) {
    its += c.iterations;
    if (better(c, best)) best = std::move(c);
  }
  best.iterations = its;
  return best;
}

inline DistanceResult finish(const FiniteLMMS& a, const FiniteLMMS& b, const CellGrid& g,
                             const Functional& f, const Candidate& c, Method m, bool certified,
                             std::uint64_t seed, double q) {
  DistanceResult r;
  r.coupling = g.expand(c.pi);
  r.value = f(distortion_profile(a, b, r.coupling, q));
  r.method = m;
  r.certified = certified;
  r.iterations = c.iterations;
  r.seed = seed;
  return r;
}

inline std::vector<double> levels_subset(const std::vector<double>& levels, std::size_t cap) {
  if (levels.size() <= cap) return levels;
  std::vector<double> out{levels.front()};
  for (std::size_t k = 1; k < cap; ++k) out.push_back(levels[k * (levels.size() - 1) / (cap - 1)]);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// min over k of max(g_k, min_pi Q_k(pi)), Q_k the mass of gaps above g_k.
inline Candidate exact_l0(const CellGrid& g) {
  FaceEnumerator faces(g);
  Candidate best;
  for (double level : gap_levels(g)) {
    if (level >= best.value) break;
    auto m = faces.minimize(threshold_kernel(level));
    Candidate c{std::max(level, m.value), std::move(m.pi), faces.faces()};
    best.iterations += faces.faces();
    if (better(c, best)) {
      c.iterations = best.iterations;
      best = std::move(c);
    }
  }
  // Report the functional of the witness itself.
  best.value = evaluate(g, Functional{}, best.pi);
  return best;
}

inline Candidate exact_lp(const CellGrid& g, double p) {
  FaceEnumerator faces(g);
  auto m = faces.minimize(power_kernel(p));
  return {std::pow(std::max(m.value, 0.0), 1.0 / p), std::move(m.pi), faces.faces()};
}

inline Candidate fw_restart(const CellGrid& g, const Functional& f, const std::vector<double>& levels,
                            std::uint64_t seed, std::size_t r, const Budget& budget) {
  SplitMix64 rng = SplitMix64(seed).fork(r);
  std::vector<double> start;
  if (r == 0) {
    start = g.from_small(product_coupling(g.wa, g.wb));
  } else {
    start = random_vertex(g, rng);
  }
  Candidate best;
  if (f.kind == Functional::lp) {
    auto lm = frank_wolfe(g, power_kernel(f.p), start, budget.iterations);
    best = {evaluate(g, f, lm.pi), std::move(lm.pi), lm.iterations};
    return best;
  }
  // LΔ₀: conditional gradient on the tail mass above a set of thresholds,
  // each local optimum re-scored by the exact eps-level.
  for (double level : levels) {
    if (level >= best.value) break;
    auto lm = frank_wolfe(g, threshold_kernel(level), start, budget.iterations);
    Candidate c{evaluate(g, f, lm.pi), std::move(lm.pi), lm.iterations};
    const std::size_t its = best.iterations + c.iterations;
    if (better(c, best)) best = std::move(c);
    best.iterations = its;
  }
  return best;
}

inline Candidate anneal_restart(const CellGrid& g, const Functional& f, std::uint64_t seed, std::size_t r,
                                const Budget& budget) {
  SplitMix64 rng = SplitMix64(seed).fork(r);
  auto lm = anneal(g, [&](std::span<const double> pi) { return evaluate(g, f, pi); }, rng,
                   budget.iterations * 4);
  return {lm.value, std::move(lm.pi), lm.iterations};
}

// Lattice over the free (rows-1) x (cols-1) block with step h; the last
// column and row are determined by the marginals.
class LatticeSearch {
 public:
  LatticeSearch(const CellGrid& g, const Functional& f, std::size_t node_limit)
      : g_(g), f_(f), limit_(node_limit), rows_(g.num_rows()), cols_(g.num_cols()) {}

  // Searches x with x_c in center_c + step * {-span..span} (or the full range
  // when center is empty). Returns false if the node limit was hit.
  bool run(double step, const std::vector<double>* center, int span) {
    step_ = step;
    center_ = center;
    span_ = span;
    free_.assign(rows_ * cols_, 0.0);
    row_left_ = g_.wa;
    col_left_ = g_.wb;
    return rec(0);
  }

  Candidate best;
  std::size_t nodes = 0;

 private:
  bool rec(std::size_t k) {
    const std::size_t nfree = (rows_ - 1) * (cols_ - 1);
    if (k == nfree) return leaf();
    const std::size_t i = k / (cols_ - 1), j = k % (cols_ - 1);
    const double cap = std::min(row_left_[i], col_left_[j]);
    double lo = 0.0, hi = cap;
    if (center_) {
      const double c = (*center_)[i * cols_ + j];
      lo = std::max(0.0, c - span_ * step_);
      hi = std::min(cap, c + span_ * step_);
    }
    const auto steps = static_cast<long>(std::floor((hi - lo) / step_ + 1e-9));
    for (long t = 0; t <= steps + 1; ++t) {
      double v = lo + static_cast<double>(t) * step_;
      if (t == steps + 1) {
        if (hi - (lo + static_cast<double>(steps) * step_) <= 1e-15) break;
        v = hi;  // include the boundary of the polytope
      }
      v = std::min(v, cap);
      free_[i * cols_ + j] = v;
      row_left_[i] -= v;
      col_left_[j] -= v;
      const bool ok = rec(k + 1);
      row_left_[i] += v;
      col_left_[j] += v;
      if (!ok) return false;
    }
    return true;
  }

  bool leaf() {
    if (limit_ && ++nodes > limit_) return false;
    std::vector<double> pi = free_;
    std::vector<double> cl = col_left_;
    for (std::size_t i = 0; i + 1 < rows_; ++i) {
      const double v = row_left_[i];
      if (v < -1e-12) return true;
      pi[i * cols_ + cols_ - 1] = std::max(v, 0.0);
      cl[cols_ - 1] -= v;
    }
    double last = g_.wa[rows_ - 1];
    for (std::size_t j = 0; j + 1 < cols_; ++j) {
      const double v = cl[j];
      if (v < -1e-12) return true;
      pi[(rows_ - 1) * cols_ + j] = std::max(v, 0.0);
      last -= v;
    }
    if (last < -1e-12 || std::abs(last - cl[cols_ - 1]) > 1e-9) return true;
    pi[(rows_ - 1) * cols_ + cols_ - 1] = std::max(last, 0.0);
    Candidate c{evaluate(g_, f_, pi), std::move(pi), 0};
    if (better(c, best)) best = std::move(c);
    return true;
  }

  const CellGrid& g_;
  Functional f_;
  std::size_t limit_;
  std::size_t rows_, cols_;
  double step_ = 0.0;
  const std::vector<double>* center_ = nullptr;
  int span_ = 0;
  std::vector<double> free_, row_left_, col_left_;
};

inline std::pair<Candidate, bool> grid_search(const CellGrid& g, const Functional& f, const Budget& budget) {
  if (g.num_rows() == 1 || g.num_cols() == 1) {
    std::vector<double> pi = g.from_small(product_coupling(g.wa, g.wb));
    return {{evaluate(g, f, pi), std::move(pi), 1}, true};
  }
  LatticeSearch search(g, f, budget.node_limit);
  bool complete = search.run(budget.grid_step, nullptr, 0);
  // Local refinement around the incumbent down to 1e-6.
  for (double h = budget.grid_step / 10; complete && h >= 1e-6 * (1 - 1e-9); h /= 10) {
    const std::vector<double> center = search.best.pi;
    complete = search.run(h, &center, 10);
  }
  search.best.iterations = search.nodes;
  return {search.best, complete};
}

inline Method resolve(Method m, const CellGrid& g, const Budget& budget) {
  if (m != Method::automatic) return m;
  return g.cells() <= budget.exact_cells ? Method::exact : Method::frank_wolfe;
}

inline DistanceResult solve_quadratic(const FiniteLMMS& a, const FiniteLMMS& b, const Functional& f,
                                      double q, Method method, const Budget& budget, std::uint64_t seed) {
  if (!(q >= 1.0)) throw std::invalid_argument("q must be >= 1");
  const CellGrid g = make_grid(a, b, q);
  if (g.cells() == 0) throw StructuralError("spaces must carry positive mass");
  method = resolve(method, g, budget);

  if (method == Method::exact) {
    if (g.cells() <= std::min(budget.exact_cells, FaceEnumerator::kMaxCells)) {
      const Candidate c = f.kind == Functional::l0 ? exact_l0(g) : exact_lp(g, f.p);
      return finish(a, b, g, f, c, Method::exact, true, seed, q);
    }
    method = Method::frank_wolfe;  // over budget: best effort, uncertified
  }
  if (method == Method::grid) {
    auto [c, complete] = grid_search(g, f, budget);
    (void)complete;
    return finish(a, b, g, f, c, Method::grid, false, seed, q);
  }
  const std::size_t restarts = std::max<std::size_t>(1, budget.restarts);
  std::vector<double> levels;
  if (method == Method::frank_wolfe && f.kind == Functional::l0) levels = levels_subset(gap_levels(g), 24);
  auto runs = parallel_map<Candidate>(restarts, budget.threads, [&](std::size_t r) {
    return method == Method::anneal ? anneal_restart(g, f, seed, r, budget)
                                    : fw_restart(g, f, levels, seed, r, budget);
  });
  return finish(a, b, g, f, best_of(std::move(runs)), method, false, seed, q);
}

// Largest partial transport supported on a set of cells (grid indices).
inline PartialTransport transport_on(const CellGrid& g, const Bitset& cells) {
  const std::size_t cols = g.num_cols();
  return max_partial_transport(g.wa, g.wb,
                               [&](std::size_t i, std::size_t j) { return cells.test(i * cols + j); });
}

inline std::vector<Bitset> compatibility(const CellGrid& g, double eps) {
  const std::size_t m = g.cells();
  std::vector<Bitset> adj(m, Bitset(m));
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t d = c + 1; d < m; ++d)
      if (g.pair_gap(c, d) <= eps) {
        adj[c].set(d);
        adj[d].set(c);
      }
  return adj;
}

inline bool covers(const CellGrid& g, const Bitset& cells) {
  std::vector<char> r(g.num_rows(), 0), s(g.num_cols(), 0);
  cells.for_each([&](std::size_t c) { r[g.row_of(c)] = s[g.col_of(c)] = 1; });
  return std::all_of(r.begin(), r.end(), [](char x) { return x; }) &&
         std::all_of(s.begin(), s.end(), [](char x) { return x; });
}

struct Feasibility {
  bool feasible = false;
  bool complete = true;
  std::vector<double> pi;
  std::size_t nodes = 0;
};

// Is there a coupling whose support is pairwise eps-compatible? Its support
// lies in some maximal clique of the compatibility graph, and a clique admits
// such a coupling iff it carries a full transport.
inline Feasibility linf_feasible(const CellGrid& g, double eps, std::size_t node_limit) {
  const auto adj = compatibility(g, eps);
  CliqueEnumerator en{&adj, node_limit};
  Feasibility out;
  auto status = en.run(
      [&](const Bitset& clique) {
        auto t = transport_on(g, clique);
        if (t.mass >= 1.0 - 1e-12) {
          out.feasible = true;
          out.pi = g.from_small(t.flow);
          return false;
        }
        return true;
      },
      [&](const Bitset& r, const Bitset& p) { return !covers(g, r | p); });
  out.complete = status != EnumerationStatus::budget_exhausted;
  out.nodes = en.nodes;
  return out;
}

}  // namespace detail

/// LΔ₀ with tau^q, the smallest eps-level over couplings.
inline DistanceResult solve_l0(const FiniteLMMS& a, const FiniteLMMS& b, double q = 1.0,
                               Method method = Method::automatic, const Budget& budget = {},
                               std::uint64_t seed = 0) {
  return detail::solve_quadratic(a, b, detail::Functional{}, q, method, budget, seed);
}

inline DistanceResult solve_lp(const FiniteLMMS& a, const FiniteLMMS& b, double p, double q = 1.0,
                               Method method = Method::automatic, const Budget& budget = {},
                               std::uint64_t seed = 0) {
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("p must lie in [1, inf)");
  return detail::solve_quadratic(a, b, detail::Functional{detail::Functional::lp, p}, q, method, budget,
                                 seed);
}

/// LΔ_∞ by bisection over the symmetric gap levels with an exhaustive clique
/// feasibility test. If the node budget trips, the best coupling from the
/// completed probes and an annealing pass is returned uncertified.
inline DistanceResult solve_linf(const FiniteLMMS& a, const FiniteLMMS& b, double q = 1.0,
                                 Method method = Method::automatic, const Budget& budget = {},
                                 std::uint64_t seed = 0) {
  if (!(q >= 1.0)) throw std::invalid_argument("q must be >= 1");
  const detail::CellGrid g = detail::make_grid(a, b, q);
  if (g.cells() == 0) throw StructuralError("spaces must carry positive mass");
  const detail::Functional f{detail::Functional::lp, kInfinity};

  detail::Candidate best{kInfinity, g.from_small(product_coupling(g.wa, g.wb)), 0};
  best.value = detail::evaluate(g, f, best.pi);
  std::size_t nodes = 0;
  bool complete = true;
  if (method != Method::frank_wolfe && method != Method::anneal && method != Method::grid) {
    const auto levels = detail::gap_levels(g, true);
    std::size_t lo = 0, hi = levels.size() - 1;  // levels[hi] is always feasible
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      auto feas = detail::linf_feasible(g, levels[mid], budget.node_limit);
      nodes += feas.nodes;
      if (feas.feasible) {
        hi = mid;
        detail::Candidate c{detail::evaluate(g, f, feas.pi), std::move(feas.pi), 0};
        if (detail::better(c, best)) best = std::move(c);
      } else {
        complete = complete && feas.complete;
        lo = mid + 1;
      }
    }
    best.iterations = nodes;
    if (complete) return detail::finish(a, b, g, f, best, Method::exact, true, seed, q);
  }
  const std::size_t restarts = std::max<std::size_t>(1, budget.restarts);
  auto runs = detail::parallel_map<detail::Candidate>(
      restarts, budget.threads, [&](std::size_t r) { return detail::anneal_restart(g, f, seed, r, budget); });
  runs.push_back(best);
  return detail::finish(a, b, g, f, detail::best_of(std::move(runs)), Method::anneal, false, seed, q);
}

}  // namespace lmms
