#include <gtest/gtest.h>

#include "matchmarket/fair_matcher.hpp"
#include "matchmarket/online_matcher.hpp"
#include "matchmarket/poa.hpp"
#include "matchmarket/selfish_matcher.hpp"

using namespace matchmarket;

namespace {
const ReturnModel q0 = ReturnModel::parametric(0.0);
}

TEST(GreedyOnline, SingleUserEqualsOffline) {
  for (std::uint64_t t = 0; t < 10; ++t) {
    const auto inst = sample_instance({BetaDist{2, 2}, 8}, 1, 3, t);
    const auto on = greedy_online(ArrivalSequence::identity(inst), q0);
    EXPECT_NEAR(on.value, solve_selfish(inst, q0).value, 1e-9);
  }
}

TEST(GreedyOnline, SecondUserGetsLeftoverCapacity) {
  const auto inst = make_instance({{1.0}, {0.5}});
  const auto on = greedy_online(ArrivalSequence({0, 1}, inst), q0);
  EXPECT_NEAR(on.matching.u[0], 0.5, 1e-12);
  EXPECT_NEAR(on.matching.u[1], 0.25, 1e-12);
  EXPECT_NEAR(on.value, 0.2 + 0.1875 / 1.1875, 1e-12);
  EXPECT_NEAR(on.value, 0.35789, 1e-5);
}

TEST(GreedyOnline, ZeroWeights) {
  const auto on = greedy_online(ArrivalSequence::identity(make_instance(Matrix(3, 2))), q0);
  EXPECT_EQ(on.value, 0.0);
}

TEST(GreedyOnline, FeasibleAndNoBetterThanOffline) {
  for (std::uint64_t t = 0; t < 30; ++t) {
    const auto inst = sample_instance({BetaDist{2, 2}, 13}, 4, 4, t);
    const auto on = greedy_online(ArrivalSequence(random_order(4, t), inst), q0);
    EXPECT_TRUE(is_feasible(on.matching));
    EXPECT_LE(on.value, solve_selfish(inst, q0).value + 1e-7);
  }
}

TEST(ArrivalSequence, RejectsNonPermutations) {
  const auto inst = make_instance(Matrix(3, 3, 0.5));
  EXPECT_THROW(ArrivalSequence({0, 0, 1}, inst), Error);
  EXPECT_THROW(ArrivalSequence({0, 1}, inst), Error);
  EXPECT_THROW(ArrivalSequence({0, 1, 3}, inst), Error);
}

TEST(OnlinePoA, SingleUserRatioIsOneHalf) {
  const auto rep = online_poa_empirical({q0}, {ConstantDist{1.0}, 1}, 1, 1, 2);
  EXPECT_NEAR(rep.min_ratio, 0.5, 1e-12);
}

TEST(OnlinePoA, BoundHoldsForEveryOrder) {
  const double bound = theorem1_bound(q0).bound;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto inst = sample_instance({BetaDist{2, 2}, 21}, 5, 5, t);
    const double fair = solve_fair(inst).value;
    for (std::uint64_t r = 0; r < 10; ++r) {
      const auto on = greedy_online(ArrivalSequence(random_order(5, stream_seed(t, r)), inst), q0);
      EXPECT_GE(on.matching.total_utility() / fair, bound - 0.02);
    }
  }
  const auto rep = online_poa_empirical({q0}, {BetaDist{2, 2}, 21}, 5, 5, 100, Monopoly{}, 4);
  EXPECT_GE(rep.min_ratio, bound - 0.02);
  const auto again = online_poa_empirical({q0}, {BetaDist{2, 2}, 21}, 5, 5, 100, Monopoly{}, 1);
  EXPECT_EQ(rep.ratios, again.ratios);
}
