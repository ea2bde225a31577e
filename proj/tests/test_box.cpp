#include <gtest/gtest.h>

#include "lmms/box.hpp"
#include "lmms/solvers.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lmms;
using testing_support::i2a;
using testing_support::i2b;

namespace {

// Applies one permutation to the pieces of the common refinement of pa, pb.
std::pair<Parametrization, Parametrization> rearranged(const Parametrization& pa, const Parametrization& pb,
                                                       SplitMix64& rng) {
  auto pieces = detail::refine(pa, pb);
  shuffle(std::span<detail::Piece>(pieces), rng);
  std::pair<Parametrization, Parametrization> out;
  for (const auto& pc : pieces) {
    out.first.segments.push_back({pc.i, pc.length});
    out.second.segments.push_back({pc.j, pc.length});
  }
  return out;
}

FiniteLMMS skew_a() { return make_space({{0, 1}, {0, 0}}, {0.1, 0.9}); }
FiniteLMMS skew_b() { return make_space({{0, 0}, {1, 0}}, {0.1, 0.9}); }

}  // namespace

TEST(Parametrization, Canonical) {
  const auto p = canonical_parametrization(i2a());
  EXPECT_EQ(p.segments, (std::vector<Segment>{{0, 0.5}, {1, 0.5}}));
  const auto q = canonical_parametrization(make_space({{0, 1}, {0, 0}}, {1.0, 0.0}));
  EXPECT_EQ(q.segments, (std::vector<Segment>{{0, 1.0}}));
  SplitMix64 rng(1);
  const auto s = testing_support::random_space(5, rng);
  EXPECT_EQ(canonical_parametrization(s).pushforward(5), s.weights);
}

TEST(Parametrization, RejectsNonMeasurePreserving) {
  Parametrization p{{{0, 0.7}, {1, 0.3}}};
  EXPECT_THROW(check_parametrization(i2a(), p), std::invalid_argument);
  Parametrization q{{{0, 0.5}, {2, 0.5}}};
  EXPECT_THROW(check_parametrization(i2a(), q), StructuralError);
}

TEST(BoxDiscrepancy, Fixtures) {
  const auto pa = canonical_parametrization(i2a());
  EXPECT_EQ(box_discrepancy(i2a(), i2a(), pa, pa), 0.0);
  EXPECT_DOUBLE_EQ(box_discrepancy(i2a(), i2b(), pa, pa), 0.5);
  EXPECT_DOUBLE_EQ(box_discrepancy(i2a(), i2b(), pa, pa, 2.0), 0.25);
  const auto d = box_discrepancy_detail(i2a(), i2b(), pa, pa);
  ASSERT_EQ(d.deleted.size(), 1u);
  EXPECT_DOUBLE_EQ(d.deleted[0].hi - d.deleted[0].lo, 0.5);
  EXPECT_THROW(box_discrepancy(i2a(), i2b(), pa, pa, 0.0), std::invalid_argument);
}

TEST(BoxDiscrepancy, MatchesSubsetOracle) {
  SplitMix64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(4), rng);
    const auto b = testing_support::random_space(1 + rng.below(4), rng);
    const auto pa = testing_support::random_parametrization(a, rng);
    const auto pb = testing_support::random_parametrization(b, rng);
    const double lambda = t % 3 == 0 ? 1.0 : 0.25 + 2.0 * rng.uniform();
    const auto d = box_discrepancy_detail(a, b, pa, pb, lambda);
    ASSERT_TRUE(d.exact);
    const double o = oracle::box_of_coupling(a, b, induced_coupling(a, b, pa, pb).to_rows(), lambda);
    EXPECT_NEAR(d.value, o, 1e-12) << "trial " << t;
    double removed = 0.0;
    for (const auto& iv : d.deleted) removed += iv.hi - iv.lo;
    EXPECT_LE(removed, lambda * d.value + 1e-12);
  }
}

TEST(BoxDiscrepancy, RearrangementInvariance) {
  SplitMix64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(4), rng);
    const auto b = testing_support::random_space(1 + rng.below(4), rng);
    const auto pa = testing_support::random_parametrization(a, rng);
    const auto pb = testing_support::random_parametrization(b, rng);
    const auto [qa, qb] = rearranged(pa, pb, rng);
    EXPECT_EQ(box_discrepancy(a, b, pa, pb), box_discrepancy(a, b, qa, qb)) << "trial " << t;
  }
}

TEST(BoxDiscrepancy, ScalingSandwich) {
  SplitMix64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(4), rng);
    const auto b = testing_support::random_space(1 + rng.below(4), rng);
    const auto pa = testing_support::random_parametrization(a, rng);
    const auto pb = testing_support::random_parametrization(b, rng);
    const double one = box_discrepancy(a, b, pa, pb);
    for (double lambda : {0.5, 2.0, 0.1, 7.0}) {
      const double v = box_discrepancy(a, b, pa, pb, lambda);
      EXPECT_GE(v, std::min(1.0, 1.0 / lambda) * one - 1e-12);
      EXPECT_LE(v, std::max(1.0, 1.0 / lambda) * one + 1e-12);
    }
  }
}

// Keeping mass >= 1 - box leaves at most 1 - (1 - box)^2 of the product
// measure on pairs with a larger gap.
TEST(BoxDiscrepancy, InducedCouplingEpsLevelBound) {
  SplitMix64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(4), rng);
    const auto b = testing_support::random_space(1 + rng.below(4), rng);
    const auto pa = testing_support::random_parametrization(a, rng);
    const auto pb = testing_support::random_parametrization(b, rng);
    const double box = box_discrepancy(a, b, pa, pb);
    const double e = eps_level(distortion_profile(a, b, induced_coupling(a, b, pa, pb)));
    EXPECT_LE(e, 2 * box - box * box + 1e-12) << "trial " << t;
  }
}

TEST(SolveBox, Fixtures) {
  const auto self = solve_box(i2a(), i2a());
  EXPECT_EQ(self.value, 0.0);
  EXPECT_TRUE(self.certified);
  const auto r = solve_box(i2a(), i2b());
  EXPECT_DOUBLE_EQ(r.value, 0.5);
  EXPECT_TRUE(r.certified);
  ASSERT_TRUE(r.box);
  EXPECT_EQ(box_discrepancy(i2a(), i2b(), r.box->pa, r.box->pb), r.value);
  EXPECT_DOUBLE_EQ(solve_box(i2a(), i2b(), 2.0).value, 0.25);
  EXPECT_LE(solve_l0(i2a(), i2b()).value, r.value + 1e-12);
}

TEST(SolveBox, SelfDistanceIsZero) {
  SplitMix64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(6), rng);
    EXPECT_EQ(solve_box(a, a).value, 0.0);
    EXPECT_EQ(solve_box(a, testing_support::relabeled(a, rng)).value, 0.0);
  }
}

TEST(SolveBox, TwoByTwoAgainstLatticeOracle) {
  SplitMix64 rng(7);
  for (int t = 0; t < 30; ++t) {
    const auto a = testing_support::random_space(2, rng);
    const auto b = testing_support::random_space(2, rng);
    for (double lambda : {1.0, 0.5, 2.0}) {
      const auto r = solve_box(a, b, lambda);
      EXPECT_TRUE(r.certified);
      const double o = oracle::box_2x2(a, b, lambda, 1e-4);
      EXPECT_LE(r.value, o + 1e-12);
      EXPECT_GE(r.value, o - 1e-4 / std::min(1.0, lambda) - 1e-12);
    }
  }
}

TEST(SolveBox, WitnessIsConsistent) {
  SplitMix64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto a = testing_support::random_space(1 + rng.below(4), rng);
    const auto b = testing_support::random_space(1 + rng.below(4), rng);
    const auto r = solve_box(a, b);
    ASSERT_TRUE(r.box);
    EXPECT_EQ(box_discrepancy(a, b, r.box->pa, r.box->pb), r.value);
    EXPECT_TRUE(is_coupling_of(r.coupling, a.weights, b.weights));
    // no parametrization pair does better than the certified optimum
    for (int k = 0; k < 5; ++k) {
      const auto pa = testing_support::random_parametrization(a, rng);
      const auto pb = testing_support::random_parametrization(b, rng);
      EXPECT_LE(r.value, box_discrepancy(a, b, pa, pb) + 1e-12);
    }
  }
}

// Heavy points related in opposite directions: one light cell can be deleted
// for the box, but every coupling leaves more than that much product mass on
// mismatched pairs.
TEST(SolveBox, CanFallBelowL0) {
  const auto a = skew_a(), b = skew_b();
  const auto box = solve_box(a, b);
  const auto l0 = solve_l0(a, b, 1.0, Method::exact);
  EXPECT_NEAR(box.value, 0.1, 1e-12);
  EXPECT_NEAR(l0.value, 0.16, 1e-9);
  EXPECT_NEAR(oracle::box_2x2(a, b, 1.0, 1e-4), 0.1, 1e-9);
  EXPECT_NEAR(oracle::grid_2x2(a, b, [](const auto& g) { return oracle::eps_bisect(g); }, 1e-4), 0.16, 1e-6);
  EXPECT_LE(l0.value, 2 * box.value - box.value * box.value + 1e-12);
}
