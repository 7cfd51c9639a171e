#include <gtest/gtest.h>

#include <cmath>

#include "matchmarket/market.hpp"
#include "matchmarket/rng.hpp"

using namespace matchmarket;

TEST(MakeInstance, AcceptsIdentityAndScalar) {
  const auto a = make_instance({{1, 0}, {0, 1}});
  EXPECT_EQ(a.m(), 2u);
  EXPECT_EQ(a.n(), 2u);
  const auto b = make_instance({{0.5}});
  EXPECT_EQ(b.m(), 1u);
  EXPECT_DOUBLE_EQ(b.w(0, 0), 0.5);
}

TEST(MakeInstance, RejectsOutOfRangeAndNaN) {
  try {
    make_instance({{1.2}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
  }
  EXPECT_THROW(make_instance({{-0.1, 0.2}}), Error);
  EXPECT_THROW(make_instance({{std::nan("")}}), Error);
  EXPECT_THROW(make_instance(Matrix(0, 3)), Error);
}

TEST(Utilities, HandEvaluations) {
  const auto id = make_instance({{1, 0}, {0, 1}});
  EXPECT_EQ(utilities(id, Matrix(2, 2)), (std::vector<double>{0, 0}));
  EXPECT_EQ(utilities(id, Matrix{{1, 0}, {0, 1}}), (std::vector<double>{1, 1}));
  const auto row = make_instance({{0.8, 0.7}});
  EXPECT_NEAR(utilities(row, Matrix{{0.5, 0.5}})[0], 0.75, 1e-15);
  EXPECT_THROW(utilities(row, Matrix(2, 2)), Error);
}

TEST(Feasibility, DetectsRowColumnAndSignViolations) {
  EXPECT_TRUE(is_feasible(FractionalMatching::from(make_instance({{0.5, 0.5}}), Matrix{{0.5, 0.5}})));
  EXPECT_NEAR(feasibility_violation(Matrix{{0.7, 0.5}}), 0.2, 1e-12);
  EXPECT_NEAR(feasibility_violation(Matrix{{0.7}, {0.6}}), 0.3, 1e-12);
  EXPECT_NEAR(feasibility_violation(Matrix{{-0.1}}), 0.1, 1e-12);
}

TEST(SampleInstance, DeterministicUnderSeed) {
  const InstanceSampler s{BetaDist{2, 2}, 7};
  EXPECT_EQ(sample_instance(s, 3, 3).weights(), sample_instance(s, 3, 3).weights());
  EXPECT_NE(sample_instance(s, 3, 3, 0).weights(), sample_instance(s, 3, 3, 1).weights());
}

double beta_sample_mean(double a, double b) {
  RandomEngine rng = make_engine(3, 0);
  double s = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) s += sample_beta(rng, a, b);
  return s / n;
}

TEST(SampleInstance, BetaMeansMatchAnalyticValues) {
  EXPECT_NEAR(beta_sample_mean(2, 2), 0.5, 0.01);
  EXPECT_NEAR(beta_sample_mean(1, 2), 1.0 / 3.0, 0.01);
  EXPECT_NEAR(beta_sample_mean(2, 1), 2.0 / 3.0, 0.01);
}

TEST(SampleInstance, OtherDistributionsAndErrors) {
  const auto c = sample_instance({ConstantDist{0.25}, 1}, 2, 3);
  for (double v : c.weights().values()) EXPECT_EQ(v, 0.25);
  const auto u = sample_instance({UniformDist{}, 1}, 4, 4);
  for (double v : u.weights().values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(sample_instance({BetaDist{0, 1}, 1}, 2, 2), Error);
}

TEST(Rng, StreamsAreIndependentAndStable) {
  EXPECT_EQ(stream_seed(1, 2), stream_seed(1, 2));
  EXPECT_NE(stream_seed(1, 2), stream_seed(1, 3));
  EXPECT_NE(stream_seed(1, 2), stream_seed(2, 2));
  auto a = make_engine(5, 9), b = make_engine(5, 9);
  EXPECT_EQ(a(), b());
}
