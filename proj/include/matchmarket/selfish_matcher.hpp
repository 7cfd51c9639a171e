#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "matchmarket/assignment.hpp"
#include "matchmarket/error.hpp"
#include "matchmarket/fair_matcher.hpp"
#include "matchmarket/market.hpp"
#include "matchmarket/parallel.hpp"
#include "matchmarket/return_model.hpp"
#include "matchmarket/rng.hpp"

namespace matchmarket {

enum class SelfishMode { ConcaveExact, MultistartLocal, Integral };

inline const char* to_string(SelfishMode mode) {
  switch (mode) {
    case SelfishMode::ConcaveExact: return "concave-exact";
    case SelfishMode::MultistartLocal: return "multistart-local";
    case SelfishMode::Integral: return "integral";
  }
  return "unknown";
}

struct SelfishOptions {
  /// Stop when the Frank-Wolfe gap drops to gap_tol_per_user * m.
  double gap_tol_per_user = 1e-7;
  int max_iterations = 10000;
  /// Random vertex starts in multistart mode (the fair vertex is always added).
  int restarts = 16;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Lagrange multipliers of the row (beta), column (sigma) and nonnegativity
/// (mu) constraints.
struct KktMultipliers {
  std::vector<double> beta;
  std::vector<double> sigma;
  Matrix mu;

  bool empty() const { return beta.empty() && sigma.empty(); }
};

struct SelfishSolution {
  FractionalMatching matching;
  double value = 0.0;  // sum_i pi_i(u_i)
  double fw_gap = 0.0;
  int iterations = 0;
  KktMultipliers multipliers;
  SelfishMode mode = SelfishMode::ConcaveExact;
  Stationary stationary = Monopoly{};
  bool converged = false;
};

struct KktReport {
  double stationarity = 0.0;
  double complementary_slackness = 0.0;
  double dual_feasibility = 0.0;
  double primal_feasibility = 0.0;

  double max() const {
    return std::max({stationarity, complementary_slackness, dual_feasibility, primal_feasibility});
  }
};

namespace detail {

inline void check_models(const MarketInstance& inst, const std::vector<ReturnModel>& models) {
  if (models.size() != inst.m()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(inst.m()) +
                                                  " return models, got " +
                                                  std::to_string(models.size()));
  }
}

inline double objective(const std::vector<ReturnModel>& models, const std::vector<double>& u,
                        const Stationary& s) {
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) total += pi(models[i], u[i], s);
  return total;
}

inline Matrix edge_gradient(const MarketInstance& inst, const std::vector<ReturnModel>& models,
                            const std::vector<double>& u, const Stationary& s) {
  Matrix g(inst.m(), inst.n());
  for (std::size_t i = 0; i < inst.m(); ++i) {
    const double d = pi_prime(models[i], u[i], s);
    for (std::size_t j = 0; j < inst.n(); ++j) g(i, j) = d * inst.w(i, j);
  }
  return g;
}

inline double vertex_dot(const Matrix& g, const std::vector<int>& cols) {
  double s = 0.0;
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (cols[i] >= 0) s += g(i, static_cast<std::size_t>(cols[i]));
  return s;
}

struct Vertex {
  std::vector<int> cols;
  double weight;
};

// One conditional-gradient run with away steps from a given vertex.
class FrankWolfe {
 public:
  FrankWolfe(const MarketInstance& inst, const std::vector<ReturnModel>& models,
             const Stationary& stationary, bool concave)
      : inst_(inst), models_(models), stationary_(stationary), concave_(concave) {}

  SelfishSolution run(std::vector<int> start, const SelfishOptions& opt) {
    active_.clear();
    active_.push_back({std::move(start), 1.0});
    rebuild();

    const double tol = opt.gap_tol_per_user * static_cast<double>(inst_.m());
    SelfishSolution sol;
    sol.stationary = stationary_;
    sol.mode = concave_ ? SelfishMode::ConcaveExact : SelfishMode::MultistartLocal;
    int it = 0;
    double gap = 0.0;
    for (;; ++it) {
      const Matrix g = edge_gradient(inst_, models_, u_, stationary_);
      const Assignment s = max_weight_matching(g);
      double gx = 0.0;
      for (std::size_t i = 0; i < inst_.m(); ++i)
        for (std::size_t j = 0; j < inst_.n(); ++j) gx += g(i, j) * x_(i, j);
      gap = std::max(0.0, s.value - gx);
      if (gap <= tol) {
        sol.converged = true;
        break;
      }
      if (it >= opt.max_iterations) break;

      std::size_t away = 0;
      double away_dot = vertex_dot(g, active_[0].cols);
      for (std::size_t a = 1; a < active_.size(); ++a) {
        const double d = vertex_dot(g, active_[a].cols);
        if (d < away_dot) {
          away_dot = d;
          away = a;
        }
      }
      const double away_gap = gx - away_dot;

      // Pairwise step: move mass from the away vertex straight to the
      // Frank-Wolfe vertex. Falls back to a plain step when the away vertex is
      // the FW vertex itself or the active set is a single vertex.
      const bool fw_step = active_.size() == 1 || active_[away].cols == s.row_to_col ||
                           away_gap <= 0.0;
      std::vector<double> du(inst_.m(), 0.0);
      double gamma_max = 1.0;
      for (std::size_t i = 0; i < inst_.m(); ++i) {
        const int j = s.row_to_col[i];
        du[i] = (j >= 0 ? inst_.w(i, static_cast<std::size_t>(j)) : 0.0);
      }
      if (fw_step) {
        for (std::size_t i = 0; i < inst_.m(); ++i) du[i] -= u_[i];
      } else {
        const auto& v = active_[away].cols;
        for (std::size_t i = 0; i < inst_.m(); ++i)
          du[i] -= (v[i] >= 0 ? inst_.w(i, static_cast<std::size_t>(v[i])) : 0.0);
        gamma_max = active_[away].weight;
      }

      const double gamma = line_search(du, gamma_max);
      if (gamma <= 0.0) {
        // No progress along the chosen direction: only possible for
        // non-concave objectives at a local maximum of the slice.
        break;
      }
      auto found = std::find_if(active_.begin(), active_.end(),
                                [&](const Vertex& v) { return v.cols == s.row_to_col; });
      if (fw_step) {
        for (auto& v : active_) v.weight *= (1.0 - gamma);
      } else {
        active_[away].weight = gamma >= gamma_max ? 0.0 : active_[away].weight - gamma;
      }
      if (found == active_.end()) {
        active_.push_back({s.row_to_col, gamma});
      } else {
        found->weight += gamma;
      }
      if (fw_step && gamma >= 1.0) active_ = {{s.row_to_col, 1.0}};
      std::erase_if(active_, [](const Vertex& v) { return v.weight <= 0.0; });
      rebuild();
      correct(0.1 * tol);
    }

    sol.iterations = it;
    sol.fw_gap = gap;
    sol.matching = FractionalMatching{x_, u_};
    sol.value = objective(models_, u_, stationary_);
    sol.multipliers = recover_multipliers();
    return sol;
  }

 private:
  void rebuild() {
    double total = 0.0;
    for (const auto& v : active_) total += v.weight;
    x_ = Matrix(inst_.m(), inst_.n());
    for (auto& v : active_) {
      v.weight /= total;
      for (std::size_t i = 0; i < inst_.m(); ++i)
        if (v.cols[i] >= 0) x_(i, static_cast<std::size_t>(v.cols[i])) += v.weight;
    }
    u_ = utilities(inst_, x_);
  }

  double pi_second(std::size_t i, double u) const {
    constexpr double h = 1e-6;
    const double lo = std::max(0.0, u - h);
    const double hi = std::min(1.0, u + h);
    return (pi_prime(models_[i], hi, stationary_) - pi_prime(models_[i], lo, stationary_)) / (hi - lo);
  }

  // Re-optimizes the weights of the active vertices (fully-corrective step)
  // with an active-set Newton method on the simplex. Vertices whose weight
  // reaches zero leave the active set. Curvature is clipped to be concave so
  // the model step is always an ascent direction.
  void correct(double tol) {
    for (int pass = 0; pass < 50 && active_.size() > 1; ++pass) {
      const std::size_t k = active_.size();
      const std::size_t m = inst_.m();
      Eigen::MatrixXd U(m, k);
      Eigen::VectorXd lambda(k);
      for (std::size_t v = 0; v < k; ++v) {
        lambda(v) = active_[v].weight;
        for (std::size_t i = 0; i < m; ++i) {
          const int j = active_[v].cols[i];
          U(i, v) = j >= 0 ? inst_.w(i, static_cast<std::size_t>(j)) : 0.0;
        }
      }
      Eigen::VectorXd d1(m), d2(m);
      for (std::size_t i = 0; i < m; ++i) {
        d1(i) = pi_prime(models_[i], u_[i], stationary_);
        d2(i) = std::min(0.0, pi_second(i, u_[i]));
      }
      const Eigen::VectorXd grad = U.transpose() * d1;
      if (grad.maxCoeff() - grad.minCoeff() <= tol) return;

      const Eigen::MatrixXd neg_hess = -(U.transpose() * d2.asDiagonal() * U);
      const double ridge = 1e-10 * (1.0 + neg_hess.diagonal().maxCoeff());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
      kkt.topLeftCorner(k, k) = neg_hess + ridge * Eigen::MatrixXd::Identity(k, k);
      kkt.block(0, k, k, 1).setOnes();
      kkt.block(k, 0, 1, k).setOnes();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
      rhs.head(k) = grad;
      const Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
      Eigen::VectorXd step = sol.head(k);
      step.array() -= step.mean();
      if (!step.allFinite() || grad.dot(step) <= 0.0) return;

      double t_max = std::numeric_limits<double>::infinity();
      std::size_t blocking = k;
      for (std::size_t v = 0; v < k; ++v) {
        if (step(v) < 0.0 && -lambda(v) / step(v) < t_max) {
          t_max = -lambda(v) / step(v);
          blocking = v;
        }
      }
      if (!(t_max > 0.0) || blocking == k) return;

      std::vector<double> du(m);
      const Eigen::VectorXd dU = U * step;
      for (std::size_t i = 0; i < m; ++i) du[i] = dU(i);
      const double t = line_search(du, t_max);
      if (t <= 0.0) return;
      for (std::size_t v = 0; v < k; ++v) active_[v].weight = lambda(v) + t * step(v);
      if (t >= t_max) active_[blocking].weight = 0.0;
      std::erase_if(active_, [](const Vertex& v) { return v.weight <= 0.0; });
      rebuild();
    }
  }

  double slice_value(const std::vector<double>& du, double gamma) const {
    double total = 0.0;
    for (std::size_t i = 0; i < u_.size(); ++i)
      total += pi(models_[i], std::clamp(u_[i] + gamma * du[i], 0.0, 1.0), stationary_);
    return total;
  }

  double slice_slope(const std::vector<double>& du, double gamma) const {
    double total = 0.0;
    for (std::size_t i = 0; i < u_.size(); ++i) {
      if (du[i] == 0.0) continue;
      total += pi_prime(models_[i], std::clamp(u_[i] + gamma * du[i], 0.0, 1.0), stationary_) * du[i];
    }
    return total;
  }

  // Maximizer of a concave slice via bisection on its slope.
  double slope_root(const std::vector<double>& du, double lo, double hi) const {
    if (slice_slope(du, hi) >= 0.0) return hi;
    for (int k = 0; k < 80 && hi - lo > 0.0; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (slice_slope(du, mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  double line_search(const std::vector<double>& du, double gamma_max) const {
    if (concave_) {
      if (slice_slope(du, 0.0) <= 0.0) return 0.0;
      return slope_root(du, 0.0, gamma_max);
    }
    // Non-concave slice: best of a coarse scan (refined) and the first local
    // maximum reached from 0.
    const double base = slice_value(du, 0.0);
    double best = maximize_scan([&](double t) { return slice_value(du, t); }, 0.0, gamma_max, 33);
    double best_v = slice_value(du, best);
    if (slice_slope(du, 0.0) > 0.0) {
      const double step = gamma_max / 32.0;
      double hi = step;
      while (hi < gamma_max && slice_slope(du, hi) > 0.0) hi = std::min(gamma_max, hi + step);
      const double local = slope_root(du, 0.0, hi);
      const double local_v = slice_value(du, local);
      if (local_v > best_v) {
        best = local;
        best_v = local_v;
      }
    }
    return best_v > base ? best : 0.0;
  }

  KktMultipliers recover_multipliers() const {
    const Matrix g = edge_gradient(inst_, models_, u_, stationary_);
    const Assignment s = max_weight_matching(g);
    const AssignmentDuals d = matching_duals(g, s);
    KktMultipliers mult;
    mult.beta = d.row;
    mult.sigma = d.col;
    mult.mu = Matrix(inst_.m(), inst_.n());
    for (std::size_t i = 0; i < inst_.m(); ++i)
      for (std::size_t j = 0; j < inst_.n(); ++j)
        mult.mu(i, j) = std::max(0.0, d.row[i] + d.col[j] - g(i, j));
    return mult;
  }

  const MarketInstance& inst_;
  const std::vector<ReturnModel>& models_;
  Stationary stationary_;
  bool concave_;
  std::vector<Vertex> active_;
  Matrix x_;
  std::vector<double> u_;
};

inline std::vector<int> random_vertex(std::size_t m, std::size_t n, RandomEngine& rng) {
  std::vector<int> cols(std::max(m, n));
  std::iota(cols.begin(), cols.end(), 0);
  std::shuffle(cols.begin(), cols.end(), rng);
  std::vector<int> out(m, -1);
  for (std::size_t i = 0; i < m; ++i)
    if (cols[i] < static_cast<int>(n)) out[i] = cols[i];
  return out;
}

inline bool lexicographically_less(const Matrix& a, const Matrix& b) {
  const auto va = a.values();
  const auto vb = b.values();
  return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
}

}  // namespace detail

/// True when the selfish objective is concave for these models, so a single
/// conditional-gradient run is globally optimal.
inline bool selfish_is_concave(const std::vector<ReturnModel>& models, const Stationary& s) {
  if (!is_monopoly(s)) return false;
  return std::all_of(models.begin(), models.end(),
                     [](const ReturnModel& m) { return is_strictly_concave(m); });
}

/// Maximizes sum_i pi_i(u_i) over the matching polytope by conditional
/// gradient with away steps. Each linear subproblem is an assignment problem
/// on the edge gradient pi_i'(u_i) w_ij.
///
/// With a monopoly chain and strictly concave q's the objective is concave and
/// the run starts from the empty matching. Otherwise the objective may have
/// several local maxima; the solver then runs from the fair vertex plus
/// opt.restarts random vertices and keeps the best result.
inline SelfishSolution solve_selfish(const MarketInstance& inst,
                                     const std::vector<ReturnModel>& models,
                                     const Stationary& stationary = Monopoly{},
                                     const SelfishOptions& opt = {}) {
  detail::check_models(inst, models);
  for (const auto& model : models) {
    const auto rep = check_assumptions(model, 101);
    if (!rep.a1_ok) throw Error(ErrorCode::InvalidParameter, "return model violates q(0)=q(1)=0");
  }
  if (const auto* c = std::get_if<Competition>(&stationary)) check_eps(c->eps);

  if (selfish_is_concave(models, stationary)) {
    detail::FrankWolfe fw(inst, models, stationary, true);
    return fw.run(std::vector<int>(inst.m(), -1), opt);
  }

  std::vector<std::vector<int>> starts;
  starts.push_back(solve_fair(inst).assignment.row_to_col);
  for (int r = 0; r < opt.restarts; ++r) {
    RandomEngine rng = make_engine(opt.seed, static_cast<std::uint64_t>(r));
    starts.push_back(detail::random_vertex(inst.m(), inst.n(), rng));
  }
  std::vector<SelfishSolution> runs(starts.size());
  parallel_for(starts.size(), opt.threads, [&](std::size_t k) {
    detail::FrankWolfe fw(inst, models, stationary, false);
    runs[k] = fw.run(starts[k], opt);
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k) {
    const double a = runs[k].value;
    const double b = runs[best].value;
    if (a > b || (a == b && detail::lexicographically_less(runs[k].matching.x,
                                                            runs[best].matching.x))) {
      best = k;
    }
  }
  return runs[best];
}

inline SelfishSolution solve_selfish(const MarketInstance& inst, const ReturnModel& model,
                                     const Stationary& stationary = Monopoly{},
                                     const SelfishOptions& opt = {}) {
  return solve_selfish(inst, std::vector<ReturnModel>(inst.m(), model), stationary, opt);
}

/// Residuals of the first-order optimality system of the selfish program at
/// the returned point and multipliers:
///   -pi_i'(u_i) w_ij + beta_i + sigma_j - mu_ij = 0,
///   mu_ij x_ij = 0, beta_i (sum_j x_ij - 1) = 0, sigma_j (sum_i x_ij - 1) = 0,
///   beta, sigma, mu >= 0.
inline KktReport kkt_residual(const MarketInstance& inst, const std::vector<ReturnModel>& models,
                              const SelfishSolution& sol) {
  detail::check_models(inst, models);
  const auto& mult = sol.multipliers;
  if (mult.beta.size() != inst.m() || mult.sigma.size() != inst.n() ||
      mult.mu.rows() != inst.m() || mult.mu.cols() != inst.n()) {
    throw Error(ErrorCode::InvalidParameter, "solution carries no KKT multipliers");
  }
  const Matrix& x = sol.matching.x;
  const auto u = utilities(inst, x);
  const Matrix g = detail::edge_gradient(inst, models, u, sol.stationary);

  KktReport r;
  std::vector<double> col(inst.n(), 0.0);
  for (std::size_t i = 0; i < inst.m(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < inst.n(); ++j) {
      r.stationarity = std::max(
          r.stationarity, std::abs(-g(i, j) + mult.beta[i] + mult.sigma[j] - mult.mu(i, j)));
      r.complementary_slackness =
          std::max(r.complementary_slackness, std::abs(mult.mu(i, j) * x(i, j)));
      r.dual_feasibility = std::max(r.dual_feasibility, -mult.mu(i, j));
      row += x(i, j);
      col[j] += x(i, j);
    }
    r.complementary_slackness =
        std::max(r.complementary_slackness, std::abs(mult.beta[i] * (row - 1.0)));
    r.dual_feasibility = std::max(r.dual_feasibility, -mult.beta[i]);
  }
  for (std::size_t j = 0; j < inst.n(); ++j) {
    r.complementary_slackness =
        std::max(r.complementary_slackness, std::abs(mult.sigma[j] * (col[j] - 1.0)));
    r.dual_feasibility = std::max(r.dual_feasibility, -mult.sigma[j]);
  }
  r.primal_feasibility = feasibility_violation(x);
  return r;
}

inline KktReport kkt_residual(const MarketInstance& inst, const ReturnModel& model,
                              const SelfishSolution& sol) {
  return kkt_residual(inst, std::vector<ReturnModel>(inst.m(), model), sol);
}

/// Per-edge gradient of the selfish objective at x (exposed for checks).
inline Matrix selfish_gradient(const MarketInstance& inst, const std::vector<ReturnModel>& models,
                               const Matrix& x, const Stationary& s = Monopoly{}) {
  detail::check_models(inst, models);
  return detail::edge_gradient(inst, models, utilities(inst, x), s);
}

inline double selfish_objective(const MarketInstance& inst, const std::vector<ReturnModel>& models,
                                const Matrix& x, const Stationary& s = Monopoly{}) {
  detail::check_models(inst, models);
  return detail::objective(models, utilities(inst, x), s);
}

/// Selfish program restricted to integral matchings. With u_i equal to the
/// chosen edge weight the objective separates, so this is a maximum-weight
/// matching on v_ij = pi_i(w_ij).
inline SelfishSolution solve_selfish_integral(const MarketInstance& inst,
                                              const std::vector<ReturnModel>& models,
                                              const Stationary& stationary = Monopoly{}) {
  detail::check_models(inst, models);
  Matrix v(inst.m(), inst.n());
  for (std::size_t i = 0; i < inst.m(); ++i)
    for (std::size_t j = 0; j < inst.n(); ++j) v(i, j) = pi(models[i], inst.w(i, j), stationary);
  const Assignment a = max_weight_matching(v);
  SelfishSolution sol;
  sol.mode = SelfishMode::Integral;
  sol.stationary = stationary;
  sol.converged = true;
  sol.matching = FractionalMatching::from(inst, a.to_matrix(inst.n()));
  sol.value = detail::objective(models, sol.matching.u, stationary);
  return sol;
}

inline SelfishSolution solve_selfish_integral(const MarketInstance& inst, const ReturnModel& model,
                                              const Stationary& stationary = Monopoly{}) {
  return solve_selfish_integral(inst, std::vector<ReturnModel>(inst.m(), model), stationary);
}

}  // namespace matchmarket
