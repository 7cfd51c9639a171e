#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "matchmarket/assignment.hpp"
#include "matchmarket/error.hpp"
#include "matchmarket/market.hpp"
#include "matchmarket/matrix.hpp"
#include "matchmarket/parallel.hpp"
#include "matchmarket/return_model.hpp"
#include "matchmarket/rng.hpp"

// Round-based slot-machine market with synthetic players. A Fair designer
// maximizes welfare, a Selfish one maximizes expected re-match requests; each
// round players keep their slot, ask for another one or leave for a fixed
// outside payment.

namespace matchmarket::sim {

enum class Study { A, B, C };
enum class Condition { Fair, Selfish };
enum class Action { Continue, Rematch, Exit };
/// What the Selfish designer maximizes per edge: the stationary in-system
/// probability q/(1+q) or the immediate return probability q.
enum class SelfishObjective { Stationary, Immediate };

inline const char* to_string(Study s) {
  switch (s) {
    case Study::A: return "A";
    case Study::B: return "B";
    case Study::C: return "C";
  }
  return "?";
}
inline const char* to_string(Condition c) { return c == Condition::Fair ? "fair" : "selfish"; }
inline const char* to_string(Action a) {
  switch (a) {
    case Action::Continue: return "continue";
    case Action::Rematch: return "rematch";
    case Action::Exit: return "exit";
  }
  return "?";
}

/// Slot payoff distribution of each study (before scaling to cents).
inline BetaDist study_distribution(Study s) {
  switch (s) {
    case Study::A: return {1.0, 2.0};
    case Study::B: return {2.0, 2.0};
    case Study::C: return {2.0, 1.0};
  }
  return {2.0, 2.0};
}

struct StudyConfig {
  Study study = Study::A;
  std::size_t players = 3;  // per condition
  std::size_t slots = 13;
  std::size_t rounds = 10;
  double outside_per_round = 6.0;  // cents
  double payoff_scale = 20.0;      // cents; slot means are Beta draws times this
  double offset_sd = std::sqrt(3.0);
  double noise_sd = std::sqrt(3.0);
  double alpha_learn = 0.7;
  SelfishObjective selfish_objective = SelfishObjective::Stationary;
  std::uint64_t seed = 1;

  void validate() const {
    if (players == 0) throw Error(ErrorCode::InvalidParameter, "players must be >= 1");
    if (slots < players) throw Error(ErrorCode::InvalidParameter, "slots must be >= players");
    if (rounds == 0) throw Error(ErrorCode::InvalidParameter, "rounds must be >= 1");
    if (!(payoff_scale > 0.0)) throw Error(ErrorCode::InvalidParameter, "payoff_scale must be > 0");
    if (!(noise_sd >= 0.0) || !(offset_sd >= 0.0))
      throw Error(ErrorCode::InvalidParameter, "standard deviations must be >= 0");
    if (!(alpha_learn >= 0.0 && alpha_learn <= 1.0))
      throw Error(ErrorCode::InvalidParameter, "alpha_learn must lie in [0,1]");
    if (!(outside_per_round >= 0.0))
      throw Error(ErrorCode::InvalidParameter, "outside_per_round must be >= 0");
  }
};

/// Synthetic player behavior.
///   switch_curve(p) = clamp(switch_intercept - switch_slope * p, switch_min, switch_max)
///   P(rematch | no exit) = switch_curve(p) * risk_decay^round
///   P(exit) = drop_base + drop_low_mean * [running mean payoff < outside option]
struct BehaviorModel {
  double switch_intercept = 0.9;
  double switch_slope = 0.04;
  double switch_min = 0.05;
  double switch_max = 0.9;
  double risk_decay = 0.93;
  double drop_base = 0.02;
  double drop_low_mean = 0.10;

  void validate() const {
    if (!(switch_slope >= 0.0)) throw Error(ErrorCode::InvalidParameter, "switch_slope must be >= 0");
    if (!(switch_min >= 0.0 && switch_max <= 1.0 && switch_min <= switch_max))
      throw Error(ErrorCode::InvalidParameter, "need 0 <= switch_min <= switch_max <= 1");
    if (!(risk_decay > 0.0 && risk_decay <= 1.0))
      throw Error(ErrorCode::InvalidParameter, "risk_decay must lie in (0,1]");
    if (!(drop_base >= 0.0 && drop_low_mean >= 0.0 && drop_base + drop_low_mean <= 1.0))
      throw Error(ErrorCode::InvalidParameter, "drop probabilities must stay in [0,1]");
  }

  double switch_curve(double payoff) const {
    return std::clamp(switch_intercept - switch_slope * payoff, switch_min, switch_max);
  }

  double rematch_probability(double payoff, std::size_t round) const {
    return std::clamp(switch_curve(payoff) * std::pow(risk_decay, static_cast<double>(round)), 0.0,
                      1.0);
  }

  double drop_probability(std::optional<double> running_mean, double outside) const {
    const bool low = running_mean && *running_mean < outside;
    return std::clamp(drop_base + (low ? drop_low_mean : 0.0), 0.0, 1.0);
  }

  static BehaviorModel inert() {
    BehaviorModel b;
    b.switch_intercept = b.switch_slope = b.switch_min = b.switch_max = 0.0;
    b.drop_base = b.drop_low_mean = 0.0;
    return b;
  }
};

// --- market ----------------------------------------------------------------------

struct Market {
  std::vector<double> slot_means;  // w_j, cents
  std::vector<double> offsets;     // eps_i, cents
  Matrix mean_payoff;              // E[p_ij] = w_j + eps_i, players x slots

  double mean(std::size_t player, std::size_t slot) const { return mean_payoff(player, slot); }
};

/// Slot means and player offsets shared by both conditions.
inline Market generate_market(const StudyConfig& cfg) {
  cfg.validate();
  RandomEngine rng = make_engine(cfg.seed, 0);
  const auto dist = study_distribution(cfg.study);
  Market mk;
  mk.slot_means.resize(cfg.slots);
  for (double& w : mk.slot_means) w = sample_beta(rng, dist.a, dist.b) * cfg.payoff_scale;
  std::normal_distribution<double> offset(0.0, cfg.offset_sd);
  mk.offsets.resize(cfg.players);
  for (double& e : mk.offsets) e = offset(rng);
  mk.mean_payoff = Matrix(cfg.players, cfg.slots);
  for (std::size_t i = 0; i < cfg.players; ++i)
    for (std::size_t j = 0; j < cfg.slots; ++j) mk.mean_payoff(i, j) = mk.slot_means[j] + mk.offsets[i];
  return mk;
}

// --- learned return probability ------------------------------------------------------

/// Width in cents of the payoff bins used for observed switch fractions.
inline constexpr double kSwitchBinCents = 2.0;
inline constexpr std::size_t kSwitchBins = 10;

/// Empirical re-match fractions on the return-model grid. Each 2-cent payoff
/// bin b feeds grid nodes 2b and 2b+1; count == 0 marks an empty bin.
struct FractionGrid {
  std::vector<double> value = std::vector<double>(kGridNodes, 0.0);
  std::vector<std::size_t> count = std::vector<std::size_t>(kGridNodes, 0);
};

struct SwitchObservation {
  double payoff = 0.0;  // cents, realized in the previous round
  bool rematch = false;
};

inline FractionGrid bin_switch_fractions(const std::vector<SwitchObservation>& obs,
                                         double payoff_scale = 20.0) {
  std::array<std::size_t, kSwitchBins> total{};
  std::array<std::size_t, kSwitchBins> rematch{};
  const double bin_width = kSwitchBinCents * payoff_scale / 20.0;
  for (const auto& o : obs) {
    const double p = std::max(0.0, o.payoff);
    const auto b = std::min(kSwitchBins - 1, static_cast<std::size_t>(p / bin_width));
    ++total[b];
    if (o.rematch) ++rematch[b];
  }
  FractionGrid f;
  for (std::size_t k = 0; k < kGridNodes; ++k) {
    const std::size_t b = std::min(k / 2, kSwitchBins - 1);
    f.count[k] = total[b];
    f.value[k] = total[b] ? static_cast<double>(rematch[b]) / static_cast<double>(total[b]) : 0.0;
  }
  return f;
}

/// q_next = alpha q + (1 - alpha) f on observed nodes; empty nodes keep q;
/// endpoints stay pinned to 0.
inline ReturnModel q_update(const ReturnModel& q, const FractionGrid& f, double alpha_learn) {
  if (q.kind() != ModelKind::Grid) throw Error(ErrorCode::InvalidParameter, "q_update needs a grid model");
  if (f.value.size() != q.nodes().size() || f.count.size() != q.nodes().size()) {
    throw Error(ErrorCode::DimensionMismatch, "switch fractions not aligned with the q grid");
  }
  if (!(alpha_learn >= 0.0 && alpha_learn <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "alpha_learn must lie in [0,1]");
  }
  std::vector<double> nodes = q.nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (f.count[k] > 0) nodes[k] = alpha_learn * nodes[k] + (1.0 - alpha_learn) * f.value[k];
  }
  return ReturnModel::grid(std::move(nodes));
}

inline ReturnModel prior_q() {
  return ReturnModel::grid_from([](double u) { return u * (1.0 - u); });
}

// --- one round ------------------------------------------------------------------------

struct AssignmentRequest {
  std::vector<std::size_t> players;          // players to (re)assign
  std::vector<char> slot_free;               // slots not held by continuing players
  std::vector<std::set<std::size_t>> banned;  // per player: slots they switched away from
};

/// Integral assignment of the requesting players to free slots. Every
/// requesting player gets a slot when one is available to them; among such
/// matchings the Fair designer maximizes total normalized mean payoff and the
/// Selfish designer the total (stationary) return probability under q.
inline std::vector<int> assign_round(Condition condition, const Market& market,
                                     const AssignmentRequest& req, const ReturnModel& q,
                                     const StudyConfig& cfg) {
  const std::size_t rows = req.players.size();
  const std::size_t cols = market.mean_payoff.cols();
  if (req.slot_free.size() != cols) {
    throw Error(ErrorCode::DimensionMismatch, "slot availability does not match slot count");
  }
  Matrix weights(rows, cols);
  EdgeMask allowed(rows * cols, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t i = req.players[r];
    for (std::size_t j = 0; j < cols; ++j) {
      const double u = std::clamp(market.mean(i, j) / cfg.payoff_scale, 0.0, 1.0);
      if (condition == Condition::Fair) {
        weights(r, j) = u;
      } else if (cfg.selfish_objective == SelfishObjective::Stationary) {
        weights(r, j) = pi_monopoly(q, u);
      } else {
        weights(r, j) = q.q(u);
      }
      const bool banned = i < req.banned.size() && req.banned[i].count(j) > 0;
      allowed[r * cols + j] = req.slot_free[j] && !banned;
    }
  }
  const auto a = max_weight_matching(weights, allowed, {.cardinality_first = true});
  return a.row_to_col;
}

struct PlayerState {
  bool active = true;
  int slot = -1;
  std::optional<double> last_payoff;
  double payoff_sum = 0.0;
  std::size_t rounds_played = 0;

  std::optional<double> running_mean() const {
    if (rounds_played == 0) return std::nullopt;
    return payoff_sum / static_cast<double>(rounds_played);
  }
};

/// One decision. Exactly two uniforms are drawn so paired conditions sharing a
/// stream stay aligned. Without a previous payoff only exit is possible.
inline Action agent_step(const PlayerState& state, std::size_t round, const BehaviorModel& behavior,
                         double outside_per_round, RandomEngine& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u_exit = unif(rng);
  const double u_switch = unif(rng);
  if (u_exit < behavior.drop_probability(state.running_mean(), outside_per_round)) return Action::Exit;
  if (!state.last_payoff) return Action::Continue;
  const double payoff = std::max(0.0, *state.last_payoff);
  if (u_switch < behavior.rematch_probability(payoff, round)) return Action::Rematch;
  return Action::Continue;
}

// --- a paired run ----------------------------------------------------------------------

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::size_t player = 0;
  Action action = Action::Continue;
  int slot = -1;         // slot played this round; -1 if none or exited
  double payoff = 0.0;   // realized payoff, clamped at 0; 0 when no slot was played
};

struct ConditionResult {
  Condition condition = Condition::Fair;
  std::vector<RoundRecord> log;
  std::vector<double> payments;            // per player, cents
  std::vector<double> round_mean_utility;  // per round, mean cents per player (outside included)
  std::vector<double> round_welfare;       // per round, total cents
  std::vector<double> round_engagement;    // per round, NaN when nobody decided on a payoff
  std::vector<std::size_t> round_drops;
  std::vector<double> realized_payoffs;    // payoffs of played (player, slot) pairs
  std::vector<ReturnModel> q_snapshots;    // learned q after each round (Selfish only)
  std::size_t rematch_count = 0;
  std::size_t decision_count = 0;  // decisions taken after a payoff was observed
  std::size_t exits = 0;
  double mean_utility = 0.0;  // mean payment per player and round
  double engagement_rate = 0.0;
  double drop_rate = 0.0;
};

struct RunResult {
  std::uint64_t seed = 0;
  Market market;
  ConditionResult fair;
  ConditionResult selfish;
  std::vector<double> universal_payoffs;  // random assignment on the same market
  std::vector<double> round_poa;          // selfish welfare / fair welfare, per round
  bool poa_above_one = false;
};

namespace detail {

inline double realized_payoff(double mean, double sd, std::uint64_t seed, std::size_t key) {
  RandomEngine rng = make_engine(seed, key);
  std::normal_distribution<double> noise(0.0, 1.0);
  return std::max(0.0, mean + sd * noise(rng));
}

inline ConditionResult simulate_condition(Condition condition, const Market& market,
                                          const StudyConfig& cfg, const BehaviorModel& behavior) {
  const std::size_t P = cfg.players;
  const std::size_t R = cfg.rounds;
  const std::uint64_t agent_seed = stream_seed(cfg.seed, 1);
  const std::uint64_t noise_seed = stream_seed(cfg.seed, 2);

  ConditionResult res;
  res.condition = condition;
  res.payments.assign(P, 0.0);
  res.round_mean_utility.assign(R, 0.0);
  res.round_welfare.assign(R, 0.0);
  res.round_engagement.assign(R, std::numeric_limits<double>::quiet_NaN());
  res.round_drops.assign(R, 0);

  std::vector<PlayerState> players(P);
  std::vector<std::set<std::size_t>> banned(P);
  std::vector<int> holder(cfg.slots, -1);
  ReturnModel q = prior_q();

  for (std::size_t r = 1; r <= R; ++r) {
    std::vector<Action> actions(P, Action::Continue);
    std::vector<SwitchObservation> observations;
    std::size_t deciders = 0;
    std::size_t rematches = 0;
    for (std::size_t i = 0; i < P; ++i) {
      if (!players[i].active) continue;
      RandomEngine rng = make_engine(agent_seed, (r - 1) * P + i);
      Action a = agent_step(players[i], r, behavior, cfg.outside_per_round, rng);
      if (a == Action::Continue && r > 1 && players[i].slot < 0) a = Action::Rematch;
      actions[i] = a;
      if (players[i].last_payoff) {
        ++deciders;
        if (a == Action::Rematch) ++rematches;
        observations.push_back({*players[i].last_payoff, a == Action::Rematch});
      }
    }
    if (deciders > 0) {
      res.round_engagement[r - 1] = static_cast<double>(rematches) / static_cast<double>(deciders);
    }
    res.decision_count += deciders;
    res.rematch_count += rematches;

    AssignmentRequest req;
    req.banned = banned;
    for (std::size_t i = 0; i < P; ++i) {
      if (!players[i].active) continue;
      const Action a = actions[i];
      const int slot = players[i].slot;
      if (a == Action::Exit) {
        players[i].active = false;
        if (slot >= 0) holder[static_cast<std::size_t>(slot)] = -1;
        players[i].slot = -1;
        const double outside = cfg.outside_per_round * static_cast<double>(R - r + 1);
        res.payments[i] += outside;
        ++res.exits;
        ++res.round_drops[r - 1];
        res.log.push_back({r, i, a, -1, 0.0});
        continue;
      }
      if (a == Action::Rematch && slot >= 0) {
        banned[i].insert(static_cast<std::size_t>(slot));
        req.banned[i].insert(static_cast<std::size_t>(slot));
        holder[static_cast<std::size_t>(slot)] = -1;
        players[i].slot = -1;
      }
      if (players[i].slot < 0) req.players.push_back(i);
    }

    if (condition == Condition::Selfish && !observations.empty()) {
      q = q_update(q, bin_switch_fractions(observations, cfg.payoff_scale), cfg.alpha_learn);
    }

    if (!req.players.empty()) {
      req.slot_free.resize(cfg.slots);
      for (std::size_t j = 0; j < cfg.slots; ++j) req.slot_free[j] = holder[j] < 0;
      const auto slots = assign_round(condition, market, req, q, cfg);
      for (std::size_t k = 0; k < req.players.size(); ++k) {
        if (slots[k] < 0) continue;
        players[req.players[k]].slot = slots[k];
        holder[static_cast<std::size_t>(slots[k])] = static_cast<int>(req.players[k]);
      }
    }

    double welfare = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      if (!players[i].active) {
        welfare += cfg.outside_per_round;
        continue;
      }
      double payoff = 0.0;
      const int slot = players[i].slot;
      if (slot >= 0) {
        payoff = realized_payoff(market.mean(i, static_cast<std::size_t>(slot)), cfg.noise_sd,
                                 noise_seed, (r - 1) * P + i);
        res.realized_payoffs.push_back(payoff);
      }
      players[i].last_payoff = payoff;
      players[i].payoff_sum += payoff;
      ++players[i].rounds_played;
      res.payments[i] += payoff;
      welfare += payoff;
      res.log.push_back({r, i, actions[i], slot, payoff});
    }
    res.round_welfare[r - 1] = welfare;
    res.round_mean_utility[r - 1] = welfare / static_cast<double>(P);
    if (condition == Condition::Selfish) res.q_snapshots.push_back(q);
  }

  double total = 0.0;
  for (double p : res.payments) total += p;
  res.mean_utility = total / static_cast<double>(P * R);
  res.engagement_rate = res.decision_count
                            ? static_cast<double>(res.rematch_count) /
                                  static_cast<double>(res.decision_count)
                            : 0.0;
  res.drop_rate = static_cast<double>(res.exits) / static_cast<double>(P);
  return res;
}

// Random assignment baseline: each round, players get distinct uniformly random slots.
inline std::vector<double> universal_payoffs(const Market& market, const StudyConfig& cfg) {
  RandomEngine rng = make_engine(cfg.seed, 3);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::size_t> perm(cfg.slots);
  std::vector<double> out;
  out.reserve(cfg.rounds * cfg.players);
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < cfg.players; ++i) {
      out.push_back(std::max(0.0, market.mean(i, perm[i]) + cfg.noise_sd * noise(rng)));
    }
  }
  return out;
}

}  // namespace detail

/// Both conditions on the same market, decision uniforms and payoff noise.
inline RunResult run_study(const StudyConfig& cfg, const BehaviorModel& behavior) {
  cfg.validate();
  behavior.validate();
  RunResult run;
  run.seed = cfg.seed;
  run.market = generate_market(cfg);
  run.fair = detail::simulate_condition(Condition::Fair, run.market, cfg, behavior);
  run.selfish = detail::simulate_condition(Condition::Selfish, run.market, cfg, behavior);
  run.universal_payoffs = detail::universal_payoffs(run.market, cfg);
  run.round_poa.resize(cfg.rounds);
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    const double fair = run.fair.round_welfare[r];
    run.round_poa[r] = fair > 0.0 ? run.selfish.round_welfare[r] / fair
                                  : std::numeric_limits<double>::quiet_NaN();
    if (run.round_poa[r] > 1.0) run.poa_above_one = true;
  }
  return run;
}

/// Seed of paired run k in a batch.
inline std::uint64_t pair_seed(std::uint64_t base, std::size_t k) { return stream_seed(base, k); }

inline std::vector<RunResult> run_pairs(const StudyConfig& cfg, const BehaviorModel& behavior,
                                        std::size_t pairs, unsigned threads = 1) {
  std::vector<RunResult> runs(pairs);
  parallel_for(pairs, threads, [&](std::size_t k) {
    StudyConfig c = cfg;
    c.seed = pair_seed(cfg.seed, k);
    runs[k] = run_study(c, behavior);
  });
  return runs;
}

// --- metrics -----------------------------------------------------------------------------

struct Histogram {
  double bin_width = 2.0;
  std::vector<std::size_t> fair;
  std::vector<std::size_t> selfish;
  std::vector<std::size_t> universal;
  double fair_mean = 0.0;
  double selfish_mean = 0.0;
  double universal_mean = 0.0;

  std::size_t bins() const { return fair.size(); }
};

/// Histogram of realized payoffs of matched pairs per condition plus the
/// random-assignment baseline. Bins of bin_width cents from 0; the last bin
/// collects overflow.
inline Histogram realized_payoff_histogram(const std::vector<RunResult>& runs, double bin_width = 2.0,
                                           std::size_t bins = 15) {
  if (runs.empty()) throw Error(ErrorCode::InvalidParameter, "no runs to summarize");
  Histogram h;
  h.bin_width = bin_width;
  h.fair.assign(bins, 0);
  h.selfish.assign(bins, 0);
  h.universal.assign(bins, 0);
  auto fill = [&](const std::vector<double>& values, std::vector<std::size_t>& counts, double& sum,
                  std::size_t& n) {
    for (double v : values) {
      const auto b = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, v) / bin_width));
      ++counts[b];
      sum += v;
      ++n;
    }
  };
  double sf = 0, ss = 0, su = 0;
  std::size_t nf = 0, ns = 0, nu = 0;
  for (const auto& run : runs) {
    fill(run.fair.realized_payoffs, h.fair, sf, nf);
    fill(run.selfish.realized_payoffs, h.selfish, ss, ns);
    fill(run.universal_payoffs, h.universal, su, nu);
  }
  h.fair_mean = nf ? sf / static_cast<double>(nf) : 0.0;
  h.selfish_mean = ns ? ss / static_cast<double>(ns) : 0.0;
  h.universal_mean = nu ? su / static_cast<double>(nu) : 0.0;
  return h;
}

struct RoundStat {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct StudySummary {
  Study study = Study::A;
  std::size_t pairs = 0;
  double fair_utility = 0.0;  // mean over runs of mean payment per player-round
  double selfish_utility = 0.0;
  double fair_engagement = 0.0;  // pooled rematch / decisions
  double selfish_engagement = 0.0;
  double fair_drop = 0.0;
  double selfish_drop = 0.0;
  std::size_t drop_fair_higher = 0;  // pairs where the fair drop rate is higher
  std::size_t drop_selfish_higher = 0;
  std::size_t poa_above_one = 0;  // pairs with some round where selfish beat fair
  std::vector<double> fair_round_utility;
  std::vector<double> selfish_round_utility;
  std::vector<double> fair_round_engagement;
  std::vector<double> selfish_round_engagement;
  std::vector<RoundStat> round_poa;
  Histogram histogram;

  /// Relative welfare loss of the Selfish designer, 1 - selfish/fair.
  double relative_gap() const { return fair_utility > 0.0 ? 1.0 - selfish_utility / fair_utility : 0.0; }
};

inline StudySummary summarize(Study study, const std::vector<RunResult>& runs) {
  if (runs.empty()) throw Error(ErrorCode::InvalidParameter, "no runs to summarize");
  StudySummary s;
  s.study = study;
  s.pairs = runs.size();
  const std::size_t R = runs.front().fair.round_mean_utility.size();
  s.fair_round_utility.assign(R, 0.0);
  s.selfish_round_utility.assign(R, 0.0);
  std::vector<std::size_t> fr(R), fd(R), sr(R), sd(R);
  s.round_poa.assign(R, {std::numeric_limits<double>::infinity(), 0.0,
                         -std::numeric_limits<double>::infinity()});
  std::vector<std::size_t> poa_n(R, 0);
  std::size_t fair_rematch = 0, fair_dec = 0, selfish_rematch = 0, selfish_dec = 0;
  const double n = static_cast<double>(runs.size());
  for (const auto& run : runs) {
    s.fair_utility += run.fair.mean_utility / n;
    s.selfish_utility += run.selfish.mean_utility / n;
    s.fair_drop += run.fair.drop_rate / n;
    s.selfish_drop += run.selfish.drop_rate / n;
    if (run.fair.drop_rate > run.selfish.drop_rate) ++s.drop_fair_higher;
    if (run.selfish.drop_rate > run.fair.drop_rate) ++s.drop_selfish_higher;
    if (run.poa_above_one) ++s.poa_above_one;
    fair_rematch += run.fair.rematch_count;
    fair_dec += run.fair.decision_count;
    selfish_rematch += run.selfish.rematch_count;
    selfish_dec += run.selfish.decision_count;
    for (std::size_t r = 0; r < R; ++r) {
      s.fair_round_utility[r] += run.fair.round_mean_utility[r] / n;
      s.selfish_round_utility[r] += run.selfish.round_mean_utility[r] / n;
      const double poa = run.round_poa[r];
      if (!std::isnan(poa)) {
        s.round_poa[r].min = std::min(s.round_poa[r].min, poa);
        s.round_poa[r].max = std::max(s.round_poa[r].max, poa);
        s.round_poa[r].mean += poa;
        ++poa_n[r];
      }
    }
    for (const auto& rec : run.fair.log) {
      if (rec.round > 1) ++fd[rec.round - 1];
      if (rec.round > 1 && rec.action == Action::Rematch) ++fr[rec.round - 1];
    }
    for (const auto& rec : run.selfish.log) {
      if (rec.round > 1) ++sd[rec.round - 1];
      if (rec.round > 1 && rec.action == Action::Rematch) ++sr[rec.round - 1];
    }
  }
  s.fair_engagement = fair_dec ? static_cast<double>(fair_rematch) / static_cast<double>(fair_dec) : 0.0;
  s.selfish_engagement =
      selfish_dec ? static_cast<double>(selfish_rematch) / static_cast<double>(selfish_dec) : 0.0;
  s.fair_round_engagement.resize(R);
  s.selfish_round_engagement.resize(R);
  for (std::size_t r = 0; r < R; ++r) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    s.fair_round_engagement[r] = fd[r] ? static_cast<double>(fr[r]) / static_cast<double>(fd[r]) : nan;
    s.selfish_round_engagement[r] = sd[r] ? static_cast<double>(sr[r]) / static_cast<double>(sd[r]) : nan;
    if (poa_n[r]) {
      s.round_poa[r].mean /= static_cast<double>(poa_n[r]);
    } else {
      s.round_poa[r] = {nan, nan, nan};
    }
  }
  s.histogram = realized_payoff_histogram(runs);
  return s;
}

}  // namespace matchmarket::sim
