// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "lmms/lmms.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lmms;
using testing_support::i2a;
using testing_support::i2b;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void verdict(const char* id, bool ok, double secs, double limit, const std::string& detail) {
  const bool pass = ok && secs <= limit;
  if (!pass) ++failures;
  std::printf("%s [%s] %s (%.2fs, limit %.0fs)\n", pass ? "PASS" : "FAIL", id, detail.c_str(), secs, limit);
  std::fflush(stdout);
}

void info(const char* id, const std::string& detail) {
  std::printf("INFO [%s] %s\n", id, detail.c_str());
  std::fflush(stdout);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// A random space, or a relabeled copy of it possibly with one point split in two.
FiniteLMMS partner(const FiniteLMMS& a, bool copy, std::size_t max_n, SplitMix64& rng) {
  if (!copy) return testing_support::random_space(1 + rng.below(max_n), rng);
  FiniteLMMS b = a;
  if (a.size() < max_n && rng.bernoulli(0.5)) {
    const std::size_t n = a.size(), x = rng.below(n);
    b.tau = TimeMatrix(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j <= n; ++j) b.tau(i, j) = a.tau(i == n ? x : i, j == n ? x : j);
    b.tau(x, n) = b.tau(n, x) = 0.0;
    b.labels.push_back("dup");
    const double split = b.weights[x] * (0.2 + 0.6 * rng.uniform());
    b.weights[x] -= split;
    b.weights.push_back(split);
  }
  return testing_support::relabeled(b, rng);
}

// ---------------------------------------------------------------------------

void fixtures() {
  const auto a = i2a(), b = i2b();
  auto eps = [](const std::vector<oracle::Gap>& g) { return oracle::eps_bisect(g); };
  auto lp = [](double p) { return [p](const std::vector<oracle::Gap>& g) { return oracle::lp(g, p); }; };
  struct Case {
    std::string name;
    std::function<double()> solve;
    std::function<double()> reference;
    double expected;
  };
  const std::vector<Case> cases{
      {"L0", [&] { return solve_l0(a, b, 1.0, Method::exact).value; }, [&] { return oracle::grid_2x2(a, b, eps); }, 0.25},
      {"L1", [&] { return solve_lp(a, b, 1.0, 1.0, Method::exact).value; }, [&] { return oracle::grid_2x2(a, b, lp(1)); }, 0.25},
      {"L2", [&] { return solve_lp(a, b, 2.0, 1.0, Method::exact).value; }, [&] { return oracle::grid_2x2(a, b, lp(2)); }, 0.5},
      {"Linf", [&] { return solve_linf(a, b).value; }, [&] { return oracle::grid_2x2(a, b, lp(kInfinity)); }, 1.0},
      {"Lbox", [&] { return solve_box(a, b).value; }, [&] { return oracle::box_2x2(a, b, 1.0); }, 0.5},
      {"dLGH", [&] { return solve_lgh(a, b).value; }, [&] { return oracle::lgh(a, b); }, 1.0},
      {"diam(I2a)", [&] { return diameter(a); }, [&] { return a.tau(0, 1); }, 1.0},
      {"diam(I2b)", [&] { return diameter(b); }, [&] { return b.tau(0, 1); }, 2.0},
  };
  for (const auto& c : cases) {
    const auto t0 = Clock::now();
    const double v = c.solve();
    const double secs = seconds_since(t0);
    const double ref = c.reference();
    const bool ok = std::abs(v - c.expected) <= 1e-6 && std::abs(ref - c.expected) <= 1e-6;
    char buf[160];
    std::snprintf(buf, sizeof buf, "fixture %s = %.12g (oracle %.12g, expected %g)", c.name.c_str(), v, ref, c.expected);
    verdict("1", ok, secs, 1.0, buf);
  }
}

void zero_iff_isomorphic() {
  const auto t0 = Clock::now();
  SplitMix64 rng(2024);
  int iso = 0, non = 0, bad = 0;
  double worst_iso = 0.0, least_non = kInfinity;
  for (int t = 0; t < 100; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(3), rng);
    const auto b = partner(a, t % 2 == 0, 3, rng);
    const double l0 = solve_l0(a, b, 1.0, Method::exact).value;
    if (isomorphy_test(a, b).isomorphic) {
      ++iso;
      const double m = std::max({l0, solve_lp(a, b, 2.0, 1.0, Method::exact).value, solve_box(a, b).value});
      worst_iso = std::max(worst_iso, m);
      bad += m > 1e-9;
    } else {
      ++non;
      least_non = std::min(least_non, l0);
      bad += l0 < 1e-6;
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d isomorphic pairs, max exact value %.3g; %d non-isomorphic, min exact L0 %.3g",
                iso, worst_iso, non, least_non);
  verdict("2", bad == 0 && iso > 0 && non > 0, seconds_since(t0), 300.0, buf);
}

void per_coupling_suites() {
  const auto t0 = Clock::now();
  SplitMix64 rng(7);
  int markov = 0, mono = 0, glue_bad = 0, box_bad = 0, box_fixed_bad = 0, diam = 0, corr = 0;
  double box_excess = 0.0;
  for (int t = 0; t < 500; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(6), rng);
    const auto b = testing_support::random_space(1 + rng.below(6), rng);
    const auto c = testing_support::random_space(1 + rng.below(6), rng);
    const auto p12 = random_coupling(a.weights, b.weights, rng);
    const auto p23 = random_coupling(b.weights, c.weights, rng);
    const auto prof = distortion_profile(a, b, p12);
    const double e = eps_level(prof);

    for (double p : {1.0, 2.0, 4.0, kInfinity}) markov += e > std::sqrt(lp_distortion(prof, p)) + 1e-12;
    double prev = 0.0;
    for (double p : {1.0, 2.0, 4.0, 8.0, 16.0, kInfinity}) {
      const double v = lp_distortion(prof, p);
      mono += prev > v + 1e-12;
      prev = v;
    }
    const auto p13 = glue(p12, p23, b.weights);
    glue_bad += eps_level(distortion_profile(a, c, p13)) > e + eps_level(distortion_profile(b, c, p23)) + 1e-12;

    const auto pa = testing_support::random_parametrization(a, rng);
    const auto pb = testing_support::random_parametrization(b, rng);
    const double box = box_discrepancy(a, b, pa, pb);
    const double ep = eps_level(distortion_profile(a, b, induced_coupling(a, b, pa, pb)));
    if (ep > box + 1e-12) {
      ++box_bad;
      box_excess = std::max(box_excess, ep - box);
    }
    box_fixed_bad += ep > 2 * box - box * box + 1e-12;

    diam += std::abs(diameter(a) - diameter(b)) > lp_distortion(prof, kInfinity) + 1e-12;
    Correspondence r;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        if (p12(i, j) > 0.0) r.pairs.emplace_back(i, j);
    corr += !is_correspondence(r, a.size(), b.size()) ||
            std::abs(distortion(a, b, r) - lp_distortion(prof, kInfinity)) > 1e-12;
  }
  const double secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "Markov eps <= sqrt(Lp), p in {1,2,4,inf}: %d violations / 2000", markov);
  verdict("3", markov == 0, secs, 600.0, buf);
  std::snprintf(buf, sizeof buf, "exponent monotonicity p = 1..16, inf: %d violations / 2500", mono);
  verdict("3", mono == 0, secs, 600.0, buf);
  std::snprintf(buf, sizeof buf, "glued coupling triangle: %d violations / 500", glue_bad);
  verdict("3", glue_bad == 0, secs, 600.0, buf);
  std::snprintf(buf, sizeof buf, "parametrization pair eps(induced coupling) <= box: %d violations / 500, max excess %.4g",
                box_bad, box_excess);
  verdict("3", box_bad == 0, secs, 600.0, buf);
  std::snprintf(buf, sizeof buf, "same draws against 2*box - box^2: %d violations / 500", box_fixed_bad);
  info("3", buf);
  {
    const auto sa = make_space({{0, 1}, {0, 0}}, {0.1, 0.9});
    const auto sb = make_space({{0, 0}, {1, 0}}, {0.1, 0.9});
    std::snprintf(buf, sizeof buf, "opposite-orientation pair with weights (0.1, 0.9): Lbox = %.6g, L0 = %.6g",
                  solve_box(sa, sb).value, solve_l0(sa, sb, 1.0, Method::exact).value);
    info("3", buf);
  }
  std::snprintf(buf, sizeof buf, "diameter gap <= Linf distortion: %d violations / 500", diam);
  verdict("3", diam == 0, secs, 600.0, buf);
  std::snprintf(buf, sizeof buf, "dis(supp pi) equals profile max: %d violations / 500", corr);
  verdict("3", corr == 0, secs, 600.0, buf);
}

void reconstruction() {
  const auto t0 = Clock::now();
  SplitMix64 rng(99);
  int iso = 0, disagree = 0, findings = 0;
  for (int t = 0; t < 100; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(4), rng, 0.5);
    const auto b = partner(a, t % 2 == 0, 4, rng);
    const bool is_iso = isomorphy_test(a, b).isomorphic;
    bool equal = true;
    const std::size_t kmax = std::max(a.size(), b.size()) + 1;
    for (std::size_t k = 1; k <= kmax && equal; ++k) equal = laws_equal(exact_matrix_law(a, k), exact_matrix_law(b, k));
    if (is_iso) {
      ++iso;
      disagree += !equal;
    } else if (equal) {
      ++findings;
      info("4", "non-isomorphic pair with equal laws at trial " + std::to_string(t));
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d isomorphic pairs, %d law disagreements; %d non-isomorphic pairs with equal laws",
                iso, disagree, findings);
  verdict("4", disagree == 0 && iso > 0, seconds_since(t0), 600.0, buf);
}

void monte_carlo() {
  const auto t0 = Clock::now();
  const auto s = make_uniform_space(
      {{0, 1, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}});
  const auto exact = exact_matrix_law(s, 2);
  std::vector<double> med;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    std::vector<double> tv;
    for (std::uint64_t seed = 0; seed < 50; ++seed)
      tv.push_back(total_variation(sample_matrix_law(s, 2, n, SplitMix64(seed).fork(n)()), exact));
    med.push_back(median(tv));
  }
  const double r1 = med[0] / med[1], r2 = med[1] / med[2];
  char buf[200];
  std::snprintf(buf, sizeof buf, "median TV %.4g / %.4g / %.4g at N = 1e2 / 1e3 / 1e4; decade ratios %.3f, %.3f",
                med[0], med[1], med[2], r1, r2);
  const bool ok = med[2] <= 0.02 && r1 >= 2.2 && r1 <= 4.5 && r2 >= 2.2 && r2 <= 4.5;
  verdict("5", ok, seconds_since(t0), 120.0, buf);
}

void sprinkling() {
  const auto t0 = Clock::now();
  int invalid = 0;
  double max_diam = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SprinkleConfig c;
    c.n = 50;
    c.seed = seed;
    const auto s = sprinkle(c).space;
    invalid += !validate(s, 1e-9).ok();
    max_diam = std::max(max_diam, diameter(s));
  }
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    SprinkleConfig c;
    c.mode = SprinkleMode::poisson;
    c.intensity = 50;
    c.seed = seed;
    total += static_cast<double>(sprinkle(c).space.size());
  }
  const double expected = 50 * diamond_volume(1, 1.0), mean = total / 1000.0;
  const double sigma = std::sqrt(expected / 1000.0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d invalid of 100, max diameter %.6f; Poisson mean %.3f vs %.0f (3 sigma = %.3f)",
                invalid, max_diam, mean, expected, 3 * sigma);
  verdict("6", invalid == 0 && max_diam <= 2 + 1e-9 && std::abs(mean - expected) <= 3 * sigma, seconds_since(t0),
          120.0, buf);
}

void box_sandwich() {
  const auto t0 = Clock::now();
  SplitMix64 rng(31);
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(5), rng);
    const auto b = testing_support::random_space(1 + rng.below(5), rng);
    const auto pa = testing_support::random_parametrization(a, rng);
    const auto pb = testing_support::random_parametrization(b, rng);
    const double one = box_discrepancy(a, b, pa, pb);
    for (double lambda : {0.5, 2.0}) {
      const double v = box_discrepancy(a, b, pa, pb, lambda);
      bad += v < std::min(1.0, 1.0 / lambda) * one || v > std::max(1.0, 1.0 / lambda) * one;
    }
  }
  verdict("7", bad == 0, seconds_since(t0), 60.0, std::to_string(bad) + " sandwich violations / 200");
}

}  // namespace

int main() {
  fixtures();
  zero_iff_isomorphic();
  per_coupling_suites();
  reconstruction();
  monte_carlo();
  sprinkling();
  box_sandwich();
  std::printf("%s: %d failing line(s)\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
