#include <gtest/gtest.h>

#include <cmath>

#include "lmms/coupling.hpp"
#include "lmms/reconstruct.hpp"
#include "lmms/solvers.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lmms;
using testing_support::i2a;
using testing_support::i2b;

namespace {

double functional_on(const FiniteLMMS& a, const FiniteLMMS& b, const Coupling& pi, double p, double q = 1.0) {
  const auto prof = distortion_profile(a, b, pi, q);
  return p == 0.0 ? eps_level(prof) : lp_distortion(prof, p);
}

void expect_witness(const FiniteLMMS& a, const FiniteLMMS& b, const DistanceResult& r, double p, double q = 1.0) {
  ASSERT_TRUE(is_coupling_of(r.coupling, a.weights, b.weights));
  EXPECT_NEAR(r.value, functional_on(a, b, r.coupling, p, q), 1e-10);
  EXPECT_EQ(r.certified, r.method == Method::exact);
}

std::function<double(const std::vector<oracle::Gap>&)> oracle_functional(double p) {
  if (p == 0.0) return [](const std::vector<oracle::Gap>& g) { return oracle::eps_bisect(g); };
  return [p](const std::vector<oracle::Gap>& g) { return oracle::lp(g, p); };
}

double oracle_lattice(const FiniteLMMS& a, const FiniteLMMS& b, double p, double h) {
  const auto f = oracle_functional(p);
  double best = kInfinity;
  oracle::lattice(a.weights, b.weights, h, [&](const oracle::Couplings& pi) { best = std::min(best, f(oracle::gaps(a, b, pi))); });
  return best;
}

}  // namespace

TEST(SolveL0, Fixtures) {
  const auto self = solve_l0(i2a(), i2a());
  EXPECT_EQ(self.value, 0.0);
  EXPECT_TRUE(self.certified);
  EXPECT_DOUBLE_EQ(self.coupling(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(self.coupling(1, 1), 0.5);

  for (Method m : {Method::exact, Method::frank_wolfe, Method::anneal, Method::grid}) {
    const auto r = solve_l0(i2a(), i2b(), 1.0, m);
    EXPECT_NEAR(r.value, 0.25, 1e-9) << to_string(m);
    expect_witness(i2a(), i2b(), r, 0.0);
  }
  EXPECT_NEAR(oracle::grid_2x2(i2a(), i2b(), oracle_functional(0.0)), 0.25, 1e-9);
}

TEST(SolveLp, Fixtures) {
  for (double p : {1.0, 2.0, 3.0}) {
    const auto r = solve_lp(i2a(), i2b(), p, 1.0, Method::exact);
    EXPECT_NEAR(r.value, std::pow(0.25, 1.0 / p), 1e-9) << p;
    EXPECT_TRUE(r.certified);
    expect_witness(i2a(), i2b(), r, p);
    EXPECT_NEAR(oracle::grid_2x2(i2a(), i2b(), oracle_functional(p)), r.value, 1e-6);
    EXPECT_NEAR(solve_lp(i2a(), i2a(), p).value, 0.0, 1e-12);
  }
  EXPECT_THROW(solve_lp(i2a(), i2b(), 0.5), std::invalid_argument);
  EXPECT_THROW(solve_lp(i2a(), i2b(), kInfinity), std::invalid_argument);
  EXPECT_THROW(solve_l0(i2a(), i2b(), 0.5), std::invalid_argument);
}

TEST(SolveLp, ShiftedCopy) {
  SplitMix64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto a = testing_support::random_space(3, rng);
    auto b = a;
    const double c = 0.1 + rng.uniform();
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        if (b.tau(i, j) > 0) b.tau(i, j) += c;
    for (double p : {1.0, 2.0}) EXPECT_LE(solve_lp(a, b, p).value, c + 1e-12);
  }
}

TEST(SolveLinf, Fixtures) {
  const auto r = solve_linf(i2a(), i2b());
  EXPECT_EQ(r.value, 1.0);
  EXPECT_TRUE(r.certified);
  expect_witness(i2a(), i2b(), r, kInfinity);
  EXPECT_EQ(solve_linf(i2a(), i2a()).value, 0.0);
}

TEST(SolveLinf, DominatesLargeP) {
  SplitMix64 rng(9);
  for (int t = 0; t < 30; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(3), rng);
    const auto b = testing_support::random_space(1 + rng.below(3), rng);
    const auto inf = solve_linf(a, b);
    EXPECT_LE(functional_on(a, b, inf.coupling, 16.0), inf.value + 1e-12);
    EXPECT_LE(solve_lp(a, b, 16.0, 1.0, Method::exact).value, inf.value + 1e-9);
  }
}

TEST(SolveQ, ExponentTransformsTau) {
  const auto r = solve_lp(i2a(), i2b(), 1.0, 2.0, Method::exact);
  // gaps |1 - 4| = 3 on the diagonal witness
  EXPECT_NEAR(r.value, 0.75, 1e-9);
  expect_witness(i2a(), i2b(), r, 1.0, 2.0);
}

TEST(Solvers, ExactNeverAboveFeasibleLattice) {
  SplitMix64 rng(10);
  for (int t = 0; t < 12; ++t) {
    const auto a = testing_support::random_space(2 + rng.below(2), rng);
    const auto b = testing_support::random_space(2 + rng.below(2), rng);
    const double h = 0.05;
    for (double p : {0.0, 1.0, 2.0}) {
      const auto r = p == 0.0 ? solve_l0(a, b, 1.0, Method::exact) : solve_lp(a, b, p, 1.0, Method::exact);
      ASSERT_TRUE(r.certified);
      expect_witness(a, b, r, p);
      EXPECT_LE(r.value, oracle_lattice(a, b, p, h) + 1e-9) << "trial " << t << " p " << p;
    }
  }
}

TEST(Solvers, TwoByTwoAgainstFineOracle) {
  SplitMix64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto a = testing_support::random_space(2, rng);
    const auto b = testing_support::random_space(2, rng);
    for (double p : {1.0, 2.0}) {
      const double o = oracle::grid_2x2(a, b, oracle_functional(p), 1e-5);
      EXPECT_NEAR(solve_lp(a, b, p, 1.0, Method::exact).value, o, 1e-4) << t;
    }
    EXPECT_LE(solve_l0(a, b, 1.0, Method::exact).value, oracle::grid_2x2(a, b, oracle_functional(0.0), 1e-5) + 1e-9);
  }
}

TEST(Solvers, SymmetryOfExactValues) {
  SplitMix64 rng(13);
  for (int t = 0; t < 30; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(3), rng);
    const auto b = testing_support::random_space(1 + rng.below(3), rng);
    EXPECT_NEAR(solve_l0(a, b, 1.0, Method::exact).value, solve_l0(b, a, 1.0, Method::exact).value, 1e-9);
    EXPECT_NEAR(solve_lp(a, b, 2.0, 1.0, Method::exact).value, solve_lp(b, a, 2.0, 1.0, Method::exact).value, 1e-9);
    EXPECT_NEAR(solve_linf(a, b).value, solve_linf(b, a).value, 1e-12);
  }
}

TEST(Solvers, IsomorphicCopiesAreAtZero) {
  SplitMix64 rng(14);
  for (int t = 0; t < 100; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(3), rng);
    const auto b = testing_support::relabeled(a, rng);
    EXPECT_NEAR(solve_l0(a, b, 1.0, Method::exact).value, 0.0, 1e-9);
    EXPECT_NEAR(solve_lp(a, b, 1.0, 1.0, Method::exact).value, 0.0, 1e-9);
    EXPECT_EQ(solve_linf(a, b).value, 0.0);
  }
}

TEST(Solvers, RelabeledFourPointCopy) {
  SplitMix64 rng(15);
  const auto a = testing_support::random_space(4, rng);
  const auto b = testing_support::relabeled(a, rng);
  EXPECT_NEAR(solve_l0(a, b).value, 0.0, 1e-9);
  EXPECT_NEAR(solve_lp(a, b, 2.0).value, 0.0, 1e-9);
  EXPECT_EQ(solve_linf(a, b).value, 0.0);
}

TEST(Solvers, HeuristicsUpperBoundExact) {
  SplitMix64 rng(16);
  for (int t = 0; t < 25; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(3), rng);
    const auto b = testing_support::random_space(1 + rng.below(3), rng);
    const double e0 = solve_l0(a, b, 1.0, Method::exact).value;
    const double e2 = solve_lp(a, b, 2.0, 1.0, Method::exact).value;
    for (Method m : {Method::frank_wolfe, Method::anneal}) {
      const auto h0 = solve_l0(a, b, 1.0, m, {}, t);
      const auto h2 = solve_lp(a, b, 2.0, 1.0, m, {}, t);
      EXPECT_GE(h0.value, e0 - 1e-9);
      EXPECT_GE(h2.value, e2 - 1e-9);
      EXPECT_FALSE(h0.certified);
      expect_witness(a, b, h0, 0.0);
      expect_witness(a, b, h2, 2.0);
    }
  }
}

TEST(Solvers, SeedDeterminism) {
  SplitMix64 rng(17);
  const auto a = testing_support::random_space(5, rng);
  const auto b = testing_support::random_space(5, rng);
  Budget serial, parallel;
  parallel.threads = 4;
  const auto x = solve_lp(a, b, 2.0, 1.0, Method::frank_wolfe, serial, 42);
  const auto y = solve_lp(a, b, 2.0, 1.0, Method::frank_wolfe, parallel, 42);
  EXPECT_EQ(x.value, y.value);
  EXPECT_EQ(x.coupling, y.coupling);
}

TEST(Solvers, WitnessTriangle) {
  SplitMix64 rng(18);
  for (int t = 0; t < 100; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(3), rng);
    const auto b = testing_support::random_space(1 + rng.below(3), rng);
    const auto c = testing_support::random_space(1 + rng.below(3), rng);
    const auto r12 = solve_l0(a, b, 1.0, Method::exact);
    const auto r23 = solve_l0(b, c, 1.0, Method::exact);
    const auto p13 = glue(r12.coupling, r23.coupling, b.weights);
    EXPECT_LE(eps_level(distortion_profile(a, c, p13)), r12.value + r23.value + 1e-12);
    EXPECT_LE(solve_l0(a, c, 1.0, Method::exact).value, r12.value + r23.value + 1e-9);
  }
}

TEST(Solvers, MethodNames) {
  EXPECT_EQ(parse_method("fw"), Method::frank_wolfe);
  EXPECT_EQ(parse_method("exact"), Method::exact);
  EXPECT_STREQ(to_string(Method::automatic), "auto");
  EXPECT_THROW(parse_method("simplex"), std::invalid_argument);
}

TEST(IntrinsicD, Examples) {
  EXPECT_EQ(intrinsic_D(i2a(), i2a()), 0.0);
  SplitMix64 rng(19);
  const auto a = testing_support::random_space(4, rng);
  EXPECT_NEAR(intrinsic_D(a, testing_support::relabeled(a, rng)), 0.0, 1e-12);
  EXPECT_GT(intrinsic_D(i2a(), i2b()), 0.0);
}
