#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "matchmarket/error.hpp"
#include "matchmarket/fair_matcher.hpp"
#include "matchmarket/market.hpp"
#include "matchmarket/parallel.hpp"
#include "matchmarket/return_model.hpp"
#include "matchmarket/rng.hpp"
#include "matchmarket/selfish_matcher.hpp"

namespace matchmarket {

/// Worst-case welfare guarantee of a selfish (engagement-maximizing) matcher
/// that depends only on the users' return functions.
struct PoABoundReport {
  double H = 0.0;  // max_i q_i'(0)
  double h = 0.0;  // min_i q_i'(0), upper end of the search interval for c
  double c = 0.0;
  double L = 0.0;  // min_i u_bar_i(c)
  double bound = 0.0;
  std::vector<double> u_bars;
  double residual = 0.0;  // c - (H/2) L at the returned c
  int iterations = 0;
};

/// The utility at which pi_i' equals c. pi' is strictly decreasing for
/// concave q, so the root is unique; 0 when pi'(0) <= c.
inline double u_bar(const ReturnModel& model, double c) {
  if (pi_monopoly_prime(model, 0.0) <= c) return 0.0;
  return bisect_sign_change([&](double u) { return pi_monopoly_prime(model, u) - c; }, 0.0, 1.0,
                            1e-15);
}

/// L(q, c) = min_i u_bar_i(c); identical models are solved once.
inline double min_u_bar(const std::vector<ReturnModel>& models, double c,
                        std::vector<double>* per_user = nullptr) {
  double L = std::numeric_limits<double>::infinity();
  if (per_user) per_user->assign(models.size(), 0.0);
  for (std::size_t i = 0; i < models.size(); ++i) {
    double v = 0.0;
    bool cached = false;
    for (std::size_t k = 0; k < i; ++k) {
      if (models[k] == models[i] && per_user) {
        v = (*per_user)[k];
        cached = true;
        break;
      }
    }
    if (!cached) v = u_bar(models[i], c);
    if (per_user) (*per_user)[i] = v;
    L = std::min(L, v);
  }
  return L;
}

inline PoABoundReport theorem1_bound(const std::vector<ReturnModel>& models) {
  if (models.empty()) throw Error(ErrorCode::InvalidParameter, "need at least one return model");
  PoABoundReport r;
  r.H = -std::numeric_limits<double>::infinity();
  r.h = std::numeric_limits<double>::infinity();
  for (const auto& model : models) {
    const auto rep = check_assumptions(model);
    if (!rep.all_ok()) {
      throw Error(ErrorCode::NonConcave, "return model fails q(0)=q(1)=0 / smoothness / concavity");
    }
    const double d0 = model.q_prime(0.0);
    r.H = std::max(r.H, d0);
    r.h = std::min(r.h, d0);
  }
  if (!(r.h > 0.0)) throw Error(ErrorCode::InvalidParameter, "q'(0) must be positive");

  // c - (H/2) L(c) increases from negative (c -> 0) to positive (c -> h).
  std::vector<double> scratch;
  auto residual = [&](double c) { return c - 0.5 * r.H * min_u_bar(models, c, &scratch); };
  double lo = 1e-12;
  double hi = r.h - 1e-12;
  int it = 0;
  for (; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  r.iterations = it;
  r.c = 0.5 * (lo + hi);
  r.L = min_u_bar(models, r.c, &r.u_bars);
  r.residual = r.c - 0.5 * r.H * r.L;
  r.bound = 0.5 * r.L;
  return r;
}

inline PoABoundReport theorem1_bound(const ReturnModel& model, std::size_t users = 1) {
  return theorem1_bound(std::vector<ReturnModel>(users, model));
}

// --- Monte Carlo ---------------------------------------------------------------

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double fair_value = 0.0;
  double selfish_value = 0.0;  // sum of utilities under the selfish matching
  double ratio = 0.0;
  bool degenerate = false;
};

struct EmpiricalPoAReport {
  std::size_t trials = 0;
  std::size_t degenerate = 0;
  std::vector<TrialRecord> records;
  std::vector<double> ratios;  // non-degenerate trials, in trial order
  double min_ratio = 0.0;
  double mean_ratio = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::string sampler;
  std::string stationary;
};

struct MonteCarloOptions {
  unsigned threads = 1;
  SelfishOptions selfish;
};

inline std::string describe(const Stationary& s) {
  if (const auto* c = std::get_if<Competition>(&s)) return "competition(" + std::to_string(c->eps) + ")";
  return "monopoly";
}

namespace detail {

inline void summarize(EmpiricalPoAReport& rep) {
  rep.ratios.clear();
  rep.degenerate = 0;
  for (const auto& r : rep.records) {
    if (r.degenerate)
      ++rep.degenerate;
    else
      rep.ratios.push_back(r.ratio);
  }
  if (rep.ratios.empty()) throw Error(ErrorCode::Degenerate, "every trial had a zero fair optimum");
  rep.min_ratio = *std::min_element(rep.ratios.begin(), rep.ratios.end());
  double s = 0.0;
  for (double v : rep.ratios) s += v;
  rep.mean_ratio = s / static_cast<double>(rep.ratios.size());
}

inline std::vector<ReturnModel> expand_models(const std::vector<ReturnModel>& models, std::size_t m) {
  if (models.size() == 1 && m > 1) return std::vector<ReturnModel>(m, models.front());
  if (models.size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "need one return model or one per user");
  }
  return models;
}

}  // namespace detail

/// Ratio of selfish to fair welfare over random instances. Trial t uses the
/// instance stream (sampler.seed, t); zero-valued fair optima are counted as
/// degenerate and left out of min/mean.
inline EmpiricalPoAReport empirical_poa(const std::vector<ReturnModel>& models,
                                        const InstanceSampler& sampler, std::size_t m,
                                        std::size_t n, std::size_t trials,
                                        const Stationary& stationary = Monopoly{},
                                        const MonteCarloOptions& opt = {}) {
  if (trials == 0) throw Error(ErrorCode::InvalidParameter, "trials must be >= 1");
  const auto per_user = detail::expand_models(models, m);
  EmpiricalPoAReport rep;
  rep.trials = trials;
  rep.m = m;
  rep.n = n;
  rep.sampler = describe(sampler.distribution);
  rep.stationary = describe(stationary);
  rep.records.resize(trials);
  parallel_for(trials, opt.threads, [&](std::size_t t) {
    TrialRecord& rec = rep.records[t];
    rec.trial = t;
    rec.seed = stream_seed(sampler.seed, t);
    const auto inst = sample_instance(sampler, m, n, t);
    const auto fair = solve_fair(inst);
    rec.fair_value = fair.value;
    if (fair.value <= 1e-12) {
      rec.degenerate = true;
      return;
    }
    SelfishOptions so = opt.selfish;
    so.seed = rec.seed;
    so.threads = 1;
    const auto selfish = solve_selfish(inst, per_user, stationary, so);
    rec.selfish_value = selfish.matching.total_utility();
    rec.ratio = rec.selfish_value / rec.fair_value;
  });
  detail::summarize(rep);
  return rep;
}

struct SweepPoint {
  double eps = 0.0;
  EmpiricalPoAReport report;
};

/// empirical_poa under the competition chain for each eps, on the same
/// instances.
inline std::vector<SweepPoint> competition_sweep(const std::vector<ReturnModel>& models,
                                                 const InstanceSampler& sampler, std::size_t m,
                                                 std::size_t n, std::size_t trials,
                                                 const std::vector<double>& eps_list,
                                                 const MonteCarloOptions& opt = {}) {
  for (double eps : eps_list) check_eps(eps);
  std::vector<SweepPoint> out;
  out.reserve(eps_list.size());
  for (double eps : eps_list) {
    out.push_back({eps, empirical_poa(models, sampler, m, n, trials, Competition{eps}, opt)});
  }
  return out;
}

}  // namespace matchmarket
