#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "matchmarket/error.hpp"
#include "matchmarket/matrix.hpp"
#include "matchmarket/rng.hpp"

namespace matchmarket {

/// Absolute feasibility tolerance for row/column sums and utilities.
inline constexpr double kFeasibilityTol = 1e-9;
/// Lower bound accepted for an assignment probability.
inline constexpr double kNonnegTol = 1e-12;

/// Match qualities w_ij in [0,1] between m side-M users (rows) and n side-W
/// users (columns). Immutable once constructed.
class MarketInstance {
 public:
  explicit MarketInstance(Matrix weights) : w_(std::move(weights)) {
    if (w_.rows() == 0 || w_.cols() == 0) {
      throw Error(ErrorCode::DimensionMismatch, "market needs m >= 1 and n >= 1");
    }
    for (std::size_t i = 0; i < w_.rows(); ++i) {
      for (std::size_t j = 0; j < w_.cols(); ++j) {
        const double v = w_(i, j);
        if (std::isnan(v)) {
          throw Error(ErrorCode::OutOfRange,
                      "w(" + std::to_string(i) + "," + std::to_string(j) + ") is NaN");
        }
        if (v < 0.0 || v > 1.0) {
          throw Error(ErrorCode::OutOfRange, "w(" + std::to_string(i) + "," +
                                                 std::to_string(j) + ") = " +
                                                 std::to_string(v) + " not in [0,1]");
        }
      }
    }
  }

  std::size_t m() const noexcept { return w_.rows(); }
  std::size_t n() const noexcept { return w_.cols(); }
  double w(std::size_t i, std::size_t j) const { return w_(i, j); }
  const Matrix& weights() const noexcept { return w_; }

  bool operator==(const MarketInstance&) const = default;

 private:
  Matrix w_;
};

inline MarketInstance make_instance(Matrix w) { return MarketInstance(std::move(w)); }


/// u_i = sum_j w_ij x_ij.
inline std::vector<double> utilities(const MarketInstance& inst, const Matrix& x) {
  if (x.rows() != inst.m() || x.cols() != inst.n()) {
    throw Error(ErrorCode::DimensionMismatch, "matching is " + std::to_string(x.rows()) + "x" +
                                                  std::to_string(x.cols()) + ", market is " +
                                                  std::to_string(inst.m()) + "x" +
                                                  std::to_string(inst.n()));
  }
  std::vector<double> u(inst.m(), 0.0);
  for (std::size_t i = 0; i < inst.m(); ++i)
    for (std::size_t j = 0; j < inst.n(); ++j) u[i] += inst.w(i, j) * x(i, j);
  return u;
}

/// Doubly-substochastic allocation x together with the utilities it induces.
struct FractionalMatching {
  Matrix x;
  std::vector<double> u;

  static FractionalMatching from(const MarketInstance& inst, Matrix x) {
    auto u = utilities(inst, x);
    return {std::move(x), std::move(u)};
  }

  double total_utility() const {
    double s = 0.0;
    for (double v : u) s += v;
    return s;
  }
};

/// Largest violation of the row/column/nonnegativity constraints; 0 when feasible.
inline double feasibility_violation(const Matrix& x) {
  double worst = 0.0;
  std::vector<double> col(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      row += x(i, j);
      col[j] += x(i, j);
      worst = std::max(worst, -x(i, j));
    }
    worst = std::max(worst, row - 1.0);
  }
  for (double c : col) worst = std::max(worst, c - 1.0);
  return worst;
}

inline bool is_feasible(const FractionalMatching& fm) {
  std::vector<double> col(fm.x.cols(), 0.0);
  for (std::size_t i = 0; i < fm.x.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < fm.x.cols(); ++j) {
      if (fm.x(i, j) < -kNonnegTol) return false;
      row += fm.x(i, j);
      col[j] += fm.x(i, j);
    }
    if (row > 1.0 + kFeasibilityTol) return false;
  }
  for (double c : col)
    if (c > 1.0 + kFeasibilityTol) return false;
  for (double v : fm.u)
    if (v < -kFeasibilityTol || v > 1.0 + kFeasibilityTol) return false;
  return true;
}

// --- sampling ---------------------------------------------------------------

struct BetaDist {
  double a = 2.0;
  double b = 2.0;
};
struct UniformDist {};
struct ConstantDist {
  double value = 0.0;
};
struct ExplicitDist {
  Matrix w;
};

using WeightDistribution = std::variant<BetaDist, UniformDist, ConstantDist, ExplicitDist>;

inline std::string describe(const WeightDistribution& d) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BetaDist>)
          return "beta(" + std::to_string(v.a) + "," + std::to_string(v.b) + ")";
        else if constexpr (std::is_same_v<T, UniformDist>)
          return "uniform";
        else if constexpr (std::is_same_v<T, ConstantDist>)
          return "constant(" + std::to_string(v.value) + ")";
        else
          return "explicit";
      },
      d);
}

/// Beta(a,b) draw through the Gamma ratio.
inline double sample_beta(RandomEngine& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double s = x + y;
  return s > 0.0 ? x / s : 0.5;
}

struct InstanceSampler {
  WeightDistribution distribution = BetaDist{};
  std::uint64_t seed = 0;
};

/// Draws an m x n instance for the given trial. Pure in (sampler, m, n, trial).
inline MarketInstance sample_instance(const InstanceSampler& sampler, std::size_t m, std::size_t n,
                                      std::uint64_t trial = 0) {
  if (m == 0 || n == 0) throw Error(ErrorCode::DimensionMismatch, "m and n must be >= 1");
  RandomEngine rng = make_engine(sampler.seed, trial);
  Matrix w(m, n);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, BetaDist>) {
          if (!(d.a > 0.0) || !(d.b > 0.0)) {
            throw Error(ErrorCode::InvalidParameter, "Beta parameters must be > 0");
          }
          for (double& v : w.values()) v = sample_beta(rng, d.a, d.b);
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          std::uniform_real_distribution<double> unif(0.0, 1.0);
          for (double& v : w.values()) v = unif(rng);
        } else if constexpr (std::is_same_v<T, ConstantDist>) {
          for (double& v : w.values()) v = d.value;
        } else {
          if (d.w.rows() != m || d.w.cols() != n) {
            throw Error(ErrorCode::DimensionMismatch, "explicit matrix does not match m x n");
          }
          w = d.w;
        }
      },
      sampler.distribution);
  return MarketInstance(std::move(w));
}

}  // namespace matchmarket
