#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "matchmarket/error.hpp"
#include "matchmarket/fair_matcher.hpp"
#include "matchmarket/market.hpp"
#include "matchmarket/parallel.hpp"
#include "matchmarket/poa.hpp"
#include "matchmarket/return_model.hpp"
#include "matchmarket/rng.hpp"

namespace matchmarket {

/// Side-M users arriving one at a time, in `order`.
struct ArrivalSequence {
  std::vector<std::size_t> order;
  MarketInstance instance;

  ArrivalSequence(std::vector<std::size_t> arrival_order, MarketInstance inst)
      : order(std::move(arrival_order)), instance(std::move(inst)) {
    std::vector<char> seen(instance.m(), 0);
    if (order.size() != instance.m()) {
      throw Error(ErrorCode::InvalidParameter, "arrival order must be a permutation of the users");
    }
    for (std::size_t i : order) {
      if (i >= instance.m() || seen[i]) {
        throw Error(ErrorCode::InvalidParameter, "arrival order must be a permutation of the users");
      }
      seen[i] = 1;
    }
  }

  static ArrivalSequence identity(MarketInstance inst) {
    std::vector<std::size_t> order(inst.m());
    std::iota(order.begin(), order.end(), std::size_t{0});
    return ArrivalSequence(std::move(order), std::move(inst));
  }
};

struct OnlineResult {
  FractionalMatching matching;
  double value = 0.0;  // sum_i pi_i(u_i)
};

/// Columns with less residual capacity than this are exhausted.
inline constexpr double kCapacityTol = 1e-9;

/// Greedy selfish policy: each arriving user gets the distribution over the
/// remaining column capacity that maximizes its own in-system probability.
/// Since that depends only on u_i and the reachable utilities form an interval
/// [0, U_max], the user receives the reachable u closest to its unconstrained
/// maximizer (concave case) or the scanned best in [0, U_max] otherwise. The
/// utility is realized with the highest-weight columns first, lowest index on
/// ties.
inline OnlineResult greedy_online(const ArrivalSequence& seq, const std::vector<ReturnModel>& models,
                                  const Stationary& stationary = Monopoly{}) {
  const auto& inst = seq.instance;
  if (models.size() != inst.m()) {
    throw Error(ErrorCode::DimensionMismatch, "need one return model per user");
  }
  const std::size_t n = inst.n();
  std::vector<double> capacity(n, 1.0);
  Matrix x(inst.m(), n);

  for (std::size_t i : seq.order) {
    std::vector<std::size_t> cols(n);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    std::stable_sort(cols.begin(), cols.end(),
                     [&](std::size_t a, std::size_t b) { return inst.w(i, a) > inst.w(i, b); });

    double mass = 0.0;
    double u_max = 0.0;
    for (std::size_t j : cols) {
      if (capacity[j] < kCapacityTol || inst.w(i, j) <= 0.0) continue;
      const double take = std::min(capacity[j], 1.0 - mass);
      if (take <= 0.0) break;
      mass += take;
      u_max += take * inst.w(i, j);
    }
    u_max = std::min(u_max, 1.0);

    const auto& model = models[i];
    double target;
    if (is_strictly_concave(model)) {
      target = std::min(argmax_pi(model, stationary), u_max);
    } else {
      target = maximize_scan([&](double u) { return pi(model, u, stationary); }, 0.0, u_max);
    }

    double acc = 0.0;
    mass = 0.0;
    for (std::size_t j : cols) {
      if (acc >= target) break;
      if (capacity[j] < kCapacityTol || inst.w(i, j) <= 0.0) continue;
      const double take =
          std::min({capacity[j], 1.0 - mass, (target - acc) / inst.w(i, j)});
      if (take <= 0.0) break;
      x(i, j) = take;
      capacity[j] -= take;
      mass += take;
      acc += take * inst.w(i, j);
    }
  }

  OnlineResult out;
  out.matching = FractionalMatching::from(inst, x);
  for (std::size_t i = 0; i < inst.m(); ++i) out.value += pi(models[i], out.matching.u[i], stationary);
  return out;
}

inline OnlineResult greedy_online(const ArrivalSequence& seq, const ReturnModel& model,
                                  const Stationary& stationary = Monopoly{}) {
  return greedy_online(seq, std::vector<ReturnModel>(seq.instance.m(), model), stationary);
}

/// Uniformly random arrival order for trial t, keyed by (seed, t) on its own
/// stream so it does not consume the instance stream.
inline std::vector<std::size_t> random_order(std::size_t m, std::uint64_t order_seed) {
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomEngine rng(order_seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

inline std::uint64_t order_seed(std::uint64_t seed, std::size_t trial) {
  return stream_seed(stream_seed(seed, trial), 1);
}

/// Online welfare ratio f(u^greedy) / f(u_fair) over random instances and
/// random arrival orders. TrialRecord::seed holds the arrival-order seed.
inline EmpiricalPoAReport online_poa_empirical(const std::vector<ReturnModel>& models,
                                               const InstanceSampler& sampler, std::size_t m,
                                               std::size_t n, std::size_t trials,
                                               const Stationary& stationary = Monopoly{},
                                               unsigned threads = 1) {
  if (trials == 0) throw Error(ErrorCode::InvalidParameter, "trials must be >= 1");
  const auto per_user = detail::expand_models(models, m);
  EmpiricalPoAReport rep;
  rep.trials = trials;
  rep.m = m;
  rep.n = n;
  rep.sampler = describe(sampler.distribution);
  rep.stationary = describe(stationary);
  rep.records.resize(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    TrialRecord& rec = rep.records[t];
    rec.trial = t;
    rec.seed = order_seed(sampler.seed, t);
    auto inst = sample_instance(sampler, m, n, t);
    rec.fair_value = solve_fair(inst).value;
    if (rec.fair_value <= 1e-12) {
      rec.degenerate = true;
      return;
    }
    const ArrivalSequence seq(random_order(m, rec.seed), std::move(inst));
    const auto online = greedy_online(seq, per_user, stationary);
    rec.selfish_value = online.matching.total_utility();
    rec.ratio = rec.selfish_value / rec.fair_value;
  });
  detail::summarize(rep);
  return rep;
}

}  // namespace matchmarket
