#include <gtest/gtest.h>

#include <cmath>

#include "matchmarket/poa.hpp"

using namespace matchmarket;

namespace {
const ReturnModel q0 = ReturnModel::parametric(0.0);

// Independent evaluation: for alpha = 0, pi'(u) = (1-2u)/(1+u-u^2)^2 and
// c = u_bar/2 (H = 1), so u_bar solves (1-2u)/(1+u-u^2)^2 = u/2.
double bound_alpha0_reference() {
  double lo = 0.0, hi = 0.5;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double d = 1.0 + mid - mid * mid;
    ((1.0 - 2.0 * mid) / (d * d) - mid / 2.0 > 0 ? lo : hi) = mid;
  }
  return 0.5 * lo;
}
}  // namespace

TEST(Theorem1Bound, QuadraticReturnModel) {
  const auto b = theorem1_bound(q0);
  EXPECT_NEAR(b.L, 0.363, 1e-3);
  EXPECT_NEAR(b.bound, 0.1815, 1e-3);
  EXPECT_NEAR(b.c, b.L / 2.0, 1e-8);
  EXPECT_NEAR(b.bound, bound_alpha0_reference(), 1e-8);
  EXPECT_DOUBLE_EQ(b.H, 1.0);
}

TEST(Theorem1Bound, FixedPointAndRange) {
  for (double alpha : {0.0, 0.25, 0.5, 0.75}) {
    const auto m = ReturnModel::parametric(alpha);
    const auto b = theorem1_bound(m);
    EXPECT_NEAR(b.c, b.H / 2.0 * b.L, 1e-8);
    EXPECT_NEAR(pi_monopoly_prime(m, b.L), b.c, 1e-8);
    EXPECT_GT(b.bound, 0.0);
    EXPECT_LE(b.bound, 0.5);
  }
}

TEST(Theorem1Bound, IndependentOfUserCount) {
  EXPECT_NEAR(theorem1_bound(q0, 50).bound, theorem1_bound(q0, 1).bound, 1e-12);
}

TEST(Theorem1Bound, HeterogeneousUsersUseTheWorstUbar) {
  const std::vector<ReturnModel> models{ReturnModel::parametric(0.0), ReturnModel::parametric(0.5)};
  const auto b = theorem1_bound(models);
  ASSERT_EQ(b.u_bars.size(), 2u);
  EXPECT_NEAR(b.L, std::min(b.u_bars[0], b.u_bars[1]), 1e-15);
  EXPECT_NEAR(b.c, b.H / 2.0 * b.L, 1e-8);
}

TEST(EmpiricalPoA, SingleUserRatioIsOneHalf) {
  const InstanceSampler s{ConstantDist{1.0}, 1};
  const auto rep = empirical_poa({q0}, s, 1, 1, 3);
  EXPECT_NEAR(rep.min_ratio, 0.5, 1e-6);
  EXPECT_NEAR(rep.mean_ratio, 0.5, 1e-6);
}

TEST(EmpiricalPoA, ZeroSamplerIsDegenerate) {
  const InstanceSampler s{ConstantDist{0.0}, 1};
  EXPECT_THROW(empirical_poa({q0}, s, 2, 2, 4), Error);
}

TEST(EmpiricalPoA, DominatesTheBoundAndIsDeterministic) {
  const InstanceSampler s{BetaDist{2, 2}, 1};
  const auto a = empirical_poa({q0}, s, 5, 5, 60, Monopoly{}, {4, {}});
  const auto b = empirical_poa({q0}, s, 5, 5, 60, Monopoly{}, {1, {}});
  EXPECT_GE(a.min_ratio, 0.1815 - 0.02);
  EXPECT_LE(a.min_ratio, 1.0);
  EXPECT_EQ(a.ratios, b.ratios);
  EXPECT_EQ(a.degenerate, 0u);
}

TEST(CompetitionSweep, TinyEpsPushesSingleUserToFullUtility) {
  const InstanceSampler s{ConstantDist{1.0}, 1};
  const auto pts = competition_sweep({q0}, s, 1, 1, 1, {1e-4});
  EXPECT_GE(pts[0].report.records[0].selfish_value, 0.99);
}

TEST(CompetitionSweep, EpsOneStaysNearMonopoly) {
  // Grid comparison of the two single-user optima.
  double best_c = 0.0, best_m = 0.0, uc = 0.0, um = 0.0;
  for (double u = 0.0; u <= 1.0; u += 1e-4) {
    if (pi_competition(q0, u, 1.0) > best_c) best_c = pi_competition(q0, u, 1.0), uc = u;
    if (pi_monopoly(q0, u) > best_m) best_m = pi_monopoly(q0, u), um = u;
  }
  EXPECT_NEAR(uc, um, 0.1);
  const InstanceSampler s{ConstantDist{1.0}, 1};
  const auto pts = competition_sweep({q0}, s, 1, 1, 1, {1.0});
  EXPECT_NEAR(pts[0].report.records[0].selfish_value, uc, 1e-3);
}

TEST(CompetitionSweep, RejectsInvalidEps) {
  const InstanceSampler s{BetaDist{2, 2}, 1};
  EXPECT_THROW(competition_sweep({q0}, s, 2, 2, 2, {0.1, 0.0}), Error);
}
