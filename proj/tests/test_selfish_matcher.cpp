#include <gtest/gtest.h>

#include <cmath>

#include "matchmarket/fair_matcher.hpp"
#include "matchmarket/selfish_matcher.hpp"
#include "oracles.hpp"

using namespace matchmarket;

namespace {
const ReturnModel q0 = ReturnModel::parametric(0.0);
}

TEST(SolveSelfish, SingleEdgeHalfUtility) {
  const auto inst = make_instance({{1.0}});
  const auto s = solve_selfish(inst, q0);
  EXPECT_NEAR(s.matching.u[0], 0.5, 1e-6);
  EXPECT_NEAR(s.matching.x(0, 0), 0.5, 1e-6);
  EXPECT_NEAR(s.value, 0.2, 1e-12);
  EXPECT_EQ(s.mode, SelfishMode::ConcaveExact);
  EXPECT_TRUE(s.converged);
}

TEST(SolveSelfish, OneUserTwoItems) {
  const auto s = solve_selfish(make_instance({{0.4, 1.0}}), q0);
  EXPECT_NEAR(s.matching.u[0], 0.5, 1e-6);
  EXPECT_NEAR(s.value, 0.2, 1e-12);
  EXPECT_NEAR(s.value, oracle::selfish_grid(make_instance({{0.4, 1.0}}).weights(), 0.0), 1e-6);
}

TEST(SolveSelfish, ZeroWeights) {
  const auto inst = make_instance(Matrix(2, 3));
  const auto s = solve_selfish(inst, q0);
  EXPECT_EQ(s.value, 0.0);
  EXPECT_TRUE(is_feasible(s.matching));
  const auto k = kkt_residual(inst, q0, s);
  EXPECT_LE(k.max(), 1e-12);
}

TEST(SolveSelfish, MatchesGridOracle) {
  const std::pair<std::size_t, std::size_t> shapes[] = {{1, 1}, {1, 2}, {1, 3}, {2, 2}};
  for (std::uint64_t t = 0; t < 8; ++t) {
    const auto [m, n] = shapes[t % 4];
    const auto inst = sample_instance({BetaDist{2, 2}, 77}, m, n, t);
    const auto s = solve_selfish(inst, q0);
    EXPECT_NEAR(s.value, oracle::selfish_grid(inst.weights(), 0.0), 2e-3);
    EXPECT_LE(s.fw_gap, 1e-7 * static_cast<double>(m));
  }
}

TEST(SolveSelfish, ConcaveSolutionsSatisfyKkt) {
  for (double alpha : {0.0, 0.5}) {
    const auto model = ReturnModel::parametric(alpha);
    for (std::uint64_t t = 0; t < 20; ++t) {
      const auto inst = sample_instance({BetaDist{2, 2}, 3}, 2 + t % 4, 2 + t % 3, t);
      const auto s = solve_selfish(inst, model);
      EXPECT_TRUE(is_feasible(s.matching));
      EXPECT_GE(s.fw_gap, 0.0);
      EXPECT_LE(s.fw_gap, 1e-7 * static_cast<double>(inst.m()));
      EXPECT_LE(kkt_residual(inst, model, s).max(), 1e-6);
      EXPECT_NEAR(s.value, selfish_objective(inst, {inst.m(), model}, s.matching.x), 1e-12);
    }
  }
}

TEST(SolveSelfish, BeatsTheFairMatchingOnItsOwnObjective) {
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto inst = sample_instance({BetaDist{2, 2}, 12}, 4, 4, t);
    const auto fair = solve_fair(inst);
    const auto s = solve_selfish(inst, q0);
    EXPECT_GE(s.value, selfish_objective(inst, {4, q0}, fair.matching.x) - 1e-12);
    EXPECT_LE(s.matching.total_utility(), fair.value + 1e-9);
  }
}

TEST(SolveSelfish, DeterministicUnderSeedInMultistartMode) {
  const auto inst = sample_instance({BetaDist{2, 2}, 4}, 4, 4);
  SelfishOptions opt;
  opt.seed = 99;
  const auto a = solve_selfish(inst, q0, Competition{0.01}, opt);
  const auto b = solve_selfish(inst, q0, Competition{0.01}, opt);
  EXPECT_EQ(a.mode, SelfishMode::MultistartLocal);
  EXPECT_EQ(a.matching.x, b.matching.x);
  opt.threads = 4;
  const auto c = solve_selfish(inst, q0, Competition{0.01}, opt);
  EXPECT_EQ(a.matching.x, c.matching.x);
}

TEST(SolveSelfish, RejectsModelCountMismatch) {
  EXPECT_THROW(solve_selfish(make_instance({{0.5}}), std::vector<ReturnModel>{}), Error);
}

TEST(KktResidual, HandBuiltPoints) {
  const auto inst = make_instance({{1.0}});
  SelfishSolution s;
  s.matching = FractionalMatching::from(inst, Matrix{{0.5}});
  s.multipliers = {{0.0}, {0.0}, Matrix(1, 1)};
  EXPECT_NEAR(kkt_residual(inst, q0, s).max(), 0.0, 1e-15);
  s.matching = FractionalMatching::from(inst, Matrix{{0.6}});
  EXPECT_NEAR(kkt_residual(inst, q0, s).stationarity, std::abs(pi_monopoly_prime(q0, 0.6)), 1e-15);
  EXPECT_GT(kkt_residual(inst, q0, s).stationarity, 0.0);
  SelfishSolution bare;
  bare.matching = s.matching;
  EXPECT_THROW(kkt_residual(inst, q0, bare), Error);
}

TEST(Gradient, MatchesFiniteDifferences) {
  const auto inst = sample_instance({BetaDist{2, 2}, 6}, 3, 4);
  const std::vector<ReturnModel> models{3, ReturnModel::parametric(0.3)};
  Matrix x(3, 4, 0.2);
  for (const Stationary& st : {Stationary{Monopoly{}}, Stationary{Competition{0.2}}}) {
    const Matrix g = selfish_gradient(inst, models, x, st);
    const double h = 1e-6;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        Matrix xp = x, xm = x;
        xp(i, j) += h;
        xm(i, j) -= h;
        const double fd =
            (selfish_objective(inst, models, xp, st) - selfish_objective(inst, models, xm, st)) / (2 * h);
        EXPECT_NEAR(g(i, j), fd, 1e-7);
      }
    }
  }
}

TEST(SolveSelfishIntegral, PrefersTheLowerUtilitySlot) {
  const auto s = solve_selfish_integral(make_instance({{0.4, 1.0}}), q0);
  EXPECT_EQ(s.matching.x, (Matrix{{1, 0}}));
  EXPECT_NEAR(s.value, 0.24 / 1.24, 1e-12);
  EXPECT_NEAR(s.value, 0.19355, 1e-5);
}

TEST(SolveSelfishIntegral, IdentityHasZeroValue) {
  const auto s = solve_selfish_integral(make_instance({{1, 0}, {0, 1}}), q0);
  EXPECT_EQ(s.value, 0.0);
  EXPECT_EQ(s.mode, SelfishMode::Integral);
}

TEST(SolveSelfishIntegral, HalfWeight) {
  const auto s = solve_selfish_integral(make_instance({{0.5}}), q0);
  EXPECT_EQ(s.matching.x(0, 0), 1.0);
  EXPECT_NEAR(s.value, 0.2, 1e-12);
}

TEST(SolveSelfishIntegral, NeverBeatsTheFractionalOptimum) {
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto inst = sample_instance({BetaDist{2, 2}, 31}, 3, 3, t);
    EXPECT_LE(solve_selfish_integral(inst, q0).value, solve_selfish(inst, q0).value + 1e-9);
  }
}
