#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "matchmarket/error.hpp"

namespace matchmarket {

/// Number of nodes of a grid (learned) return model on [0,1].
inline constexpr std::size_t kGridNodes = 21;
/// Step of the central difference used for grid-model derivatives.
inline constexpr double kGridDerivativeStep = 1e-4;
/// Utilities within this distance outside [0,1] are clamped rather than rejected.
inline constexpr double kDomainSlack = 1e-9;
/// Derivatives are evaluated at min(u, 1 - kDerivativeEdge); q' diverges at u=1 for alpha > 0.
inline constexpr double kDerivativeEdge = 1e-12;

enum class ModelKind { ParametricAlpha, Grid };

/// Return probability q(u): the chance that a user who received utility u comes
/// back to the matching service.
///
/// Two kinds are supported. The parametric family q(u) = u (1-u)^(1-alpha_exponent)
/// with alpha_exponent in [0,1) satisfies q(0) = q(1) = 0 and is strictly
/// concave. A grid model holds values on kGridNodes uniform nodes with linear
/// interpolation; its endpoints are always pinned to 0.
class ReturnModel {
 public:
  static ReturnModel parametric(double alpha_exponent) {
    if (!(alpha_exponent >= 0.0 && alpha_exponent < 1.0)) {
      throw Error(ErrorCode::InvalidParameter,
                  "alpha exponent must lie in [0,1), got " + std::to_string(alpha_exponent));
    }
    ReturnModel m;
    m.kind_ = ModelKind::ParametricAlpha;
    m.alpha_ = alpha_exponent;
    return m;
  }

  static ReturnModel grid(std::vector<double> nodes) {
    if (nodes.size() != kGridNodes) {
      throw Error(ErrorCode::DimensionMismatch, "grid model needs " + std::to_string(kGridNodes) +
                                                    " nodes, got " + std::to_string(nodes.size()));
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (!(nodes[k] >= 0.0 && nodes[k] <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "grid node " + std::to_string(k) + " not in [0,1]");
      }
    }
    nodes.front() = 0.0;
    nodes.back() = 0.0;
    ReturnModel m;
    m.kind_ = ModelKind::Grid;
    m.nodes_ = std::move(nodes);
    return m;
  }

  /// Grid model sampled from f at the nodes.
  static ReturnModel grid_from(const std::function<double(double)>& f) {
    std::vector<double> nodes(kGridNodes);
    for (std::size_t k = 0; k < kGridNodes; ++k) nodes[k] = f(node_utility(k));
    return grid(std::move(nodes));
  }

  static constexpr double node_utility(std::size_t k) {
    return static_cast<double>(k) / static_cast<double>(kGridNodes - 1);
  }

  ModelKind kind() const noexcept { return kind_; }
  double alpha_exponent() const noexcept { return alpha_; }
  const std::vector<double>& nodes() const noexcept { return nodes_; }

  double q(double u) const {
    u = clamp_domain(u);
    if (kind_ == ModelKind::ParametricAlpha) return u * std::pow(1.0 - u, 1.0 - alpha_);
    const double pos = u * static_cast<double>(kGridNodes - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(pos), kGridNodes - 2);
    const double t = pos - static_cast<double>(k);
    return (1.0 - t) * nodes_[k] + t * nodes_[k + 1];
  }

  double q_prime(double u) const {
    u = clamp_domain(u);
    if (kind_ == ModelKind::ParametricAlpha) {
      u = std::min(u, 1.0 - kDerivativeEdge);
      const double a = 1.0 - alpha_;
      return std::pow(1.0 - u, a) - a * u * std::pow(1.0 - u, -alpha_);
    }
    const double h = kGridDerivativeStep;
    const double lo = std::max(0.0, u - h);
    const double hi = std::min(1.0, u + h);
    return (q(hi) - q(lo)) / (hi - lo);
  }

  bool operator==(const ReturnModel&) const = default;

 private:
  static double clamp_domain(double u) {
    if (!(u >= -kDomainSlack && u <= 1.0 + kDomainSlack)) {
      throw Error(ErrorCode::OutOfRange, "utility " + std::to_string(u) + " outside [0,1]");
    }
    return std::clamp(u, 0.0, 1.0);
  }

  ModelKind kind_ = ModelKind::ParametricAlpha;
  double alpha_ = 0.0;
  std::vector<double> nodes_;
};

inline double eval_q(const ReturnModel& model, double u) { return model.q(u); }
inline double eval_q_prime(const ReturnModel& model, double u) { return model.q_prime(u); }

// --- stationary probabilities ------------------------------------------------

/// Two-state chain: in system / out of system.
struct Monopoly {};
/// Three-state chain with a rival site; eps is the probability of coming back
/// from the rival per step.
struct Competition {
  double eps = 1.0;
};
using Stationary = std::variant<Monopoly, Competition>;

inline bool is_monopoly(const Stationary& s) { return std::holds_alternative<Monopoly>(s); }

inline void check_eps(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "eps must lie in (0,1], got " + std::to_string(eps));
  }
}

/// Long-run probability of the in-system state: q / (1 + q).
inline double pi_monopoly(const ReturnModel& model, double u) {
  const double q = model.q(u);
  return q / (1.0 + q);
}

inline double pi_monopoly_prime(const ReturnModel& model, double u) {
  const double q = model.q(u);
  const double d = 1.0 + q;
  return model.q_prime(u) / (d * d);
}

/// In-system probability with competition: q / (1 + q + (q/eps)(1-u)).
inline double pi_competition(const ReturnModel& model, double u, double eps) {
  check_eps(eps);
  const double q = model.q(u);
  const double uc = std::clamp(u, 0.0, 1.0);
  return q / (1.0 + q + (q / eps) * (1.0 - uc));
}

/// d/du of pi_competition; the numerator reduces to q' + q^2/eps.
inline double pi_competition_prime(const ReturnModel& model, double u, double eps) {
  check_eps(eps);
  const double q = model.q(u);
  const double uc = std::clamp(u, 0.0, 1.0);
  const double d = 1.0 + q + (q / eps) * (1.0 - uc);
  return (model.q_prime(u) + q * q / eps) / (d * d);
}

inline double pi(const ReturnModel& model, double u, const Stationary& s) {
  if (const auto* c = std::get_if<Competition>(&s)) return pi_competition(model, u, c->eps);
  return pi_monopoly(model, u);
}

inline double pi_prime(const ReturnModel& model, double u, const Stationary& s) {
  if (const auto* c = std::get_if<Competition>(&s)) return pi_competition_prime(model, u, c->eps);
  return pi_monopoly_prime(model, u);
}

// --- assumption checks ---------------------------------------------------------

struct AssumptionReport {
  bool a1_ok = false;  // q(0) = q(1) = 0
  bool a2_ok = false;  // finite values and second differences, q in [0,1]
  bool a3_ok = false;  // strictly negative second differences
  double max_second_diff = 0.0;
  // The same concavity test applied to the monopoly stationary probability.
  bool pi_concave_ok = false;
  double pi_max_second_diff = 0.0;

  bool all_ok() const { return a1_ok && a2_ok && a3_ok; }
};

inline AssumptionReport check_assumptions(const ReturnModel& model, std::size_t grid_size = 101) {
  if (grid_size < 11) throw Error(ErrorCode::InvalidParameter, "grid_size must be >= 11");
  AssumptionReport r;
  const double h = 1.0 / static_cast<double>(grid_size - 1);
  std::vector<double> q(grid_size), p(grid_size);
  bool finite = true;
  bool bounded = true;
  for (std::size_t k = 0; k < grid_size; ++k) {
    const double u = k == grid_size - 1 ? 1.0 : static_cast<double>(k) * h;
    q[k] = model.q(u);
    p[k] = q[k] / (1.0 + q[k]);
    finite = finite && std::isfinite(q[k]);
    bounded = bounded && q[k] >= 0.0 && q[k] <= 1.0;
  }
  r.a1_ok = std::abs(q.front()) <= 1e-12 && std::abs(q.back()) <= 1e-12;
  r.max_second_diff = -std::numeric_limits<double>::infinity();
  r.pi_max_second_diff = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < grid_size; ++k) {
    const double d2 = q[k - 1] - 2.0 * q[k] + q[k + 1];
    const double p2 = p[k - 1] - 2.0 * p[k] + p[k + 1];
    finite = finite && std::isfinite(d2);
    r.max_second_diff = std::max(r.max_second_diff, d2);
    r.pi_max_second_diff = std::max(r.pi_max_second_diff, p2);
  }
  r.a2_ok = finite && bounded;
  r.a3_ok = r.a2_ok && r.max_second_diff < 0.0;
  r.pi_concave_ok = r.a2_ok && r.pi_max_second_diff < 0.0;
  return r;
}

/// True when q is strictly concave: always for the parametric family, by
/// sampled second differences for grid models.
inline bool is_strictly_concave(const ReturnModel& model) {
  if (model.kind() == ModelKind::ParametricAlpha) return true;
  return check_assumptions(model).a3_ok;
}

// --- maximizers ------------------------------------------------------------------

/// Bisection for the sign change of a function that is positive at lo and
/// nonpositive at hi.
template <typename F>
double bisect_sign_change(F&& f, double lo, double hi, double tol, int max_iter = 200) {
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Stationary point u' of q (where q' = 0) for a concave model.
inline double q_peak(const ReturnModel& model) {
  if (model.kind() == ModelKind::ParametricAlpha) return 1.0 / (2.0 - model.alpha_exponent());
  return bisect_sign_change([&](double u) { return model.q_prime(u); }, 0.0, 1.0, 1e-12);
}

/// Utility maximizing pi_competition for a strictly concave q: the root in
/// [u', 1] of eps = -q(u)^2 / q'(u), where u' is the peak of q.
inline double argmax_pi_competition(const ReturnModel& model, double eps) {
  check_eps(eps);
  if (!is_strictly_concave(model)) {
    throw Error(ErrorCode::NonConcave, "argmax_pi_competition needs a strictly concave q");
  }
  const double lo = q_peak(model);
  auto excess = [&](double u) {
    const double qp = model.q_prime(u);
    if (qp >= 0.0) return std::numeric_limits<double>::infinity();
    const double q = model.q(u);
    return -q * q / qp - eps;
  };
  if (excess(1.0) > 0.0) return 1.0;
  return bisect_sign_change(excess, lo, 1.0, 1e-10);
}

/// Maximizer of a scalar function over [lo, hi] by a dense scan followed by
/// golden-section refinement around the best sample. Used for objectives that
/// need not be concave.
template <typename F>
double maximize_scan(F&& f, double lo, double hi, std::size_t samples = 2001) {
  if (hi <= lo) return lo;
  double best_u = lo;
  double best_v = f(lo);
  const double step = (hi - lo) / static_cast<double>(samples - 1);
  for (std::size_t k = 1; k < samples; ++k) {
    const double u = k == samples - 1 ? hi : lo + static_cast<double>(k) * step;
    const double v = f(u);
    if (v > best_v) {
      best_v = v;
      best_u = u;
    }
  }
  double a = std::max(lo, best_u - step);
  double b = std::min(hi, best_u + step);
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double refined = 0.5 * (a + b);
  return f(refined) >= best_v ? refined : best_u;
}

/// Unconstrained maximizer of the stationary in-system probability over [0,1].
inline double argmax_pi(const ReturnModel& model, const Stationary& s) {
  const bool concave = is_strictly_concave(model);
  if (concave && is_monopoly(s)) return q_peak(model);
  if (concave) return argmax_pi_competition(model, std::get<Competition>(s).eps);
  return maximize_scan([&](double u) { return pi(model, u, s); }, 0.0, 1.0);
}

}  // namespace matchmarket
