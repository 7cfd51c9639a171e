#include <gtest/gtest.h>

#include <map>
#include <set>

#include "matchmarket/experiment.hpp"
#include "matchmarket/fair_matcher.hpp"

using namespace matchmarket;
using namespace matchmarket::sim;

TEST(GenerateMarket, SharedAcrossConditionsAndSeeded) {
  StudyConfig c;
  c.seed = 5;
  const auto a = generate_market(c);
  const auto b = generate_market(c);
  EXPECT_EQ(a.slot_means, b.slot_means);
  EXPECT_EQ(a.offsets, b.offsets);
  const auto run = run_study(c, BehaviorModel{});
  EXPECT_EQ(run.market.slot_means, a.slot_means);
  for (std::size_t i = 0; i < c.players; ++i)
    for (std::size_t j = 0; j < c.slots; ++j)
      EXPECT_DOUBLE_EQ(a.mean(i, j), a.slot_means[j] + a.offsets[i]);
}

double slot_mean(Study s) {
  StudyConfig c;
  c.study = s;
  c.slots = 100000;
  c.seed = 17;
  const auto m = generate_market(c);
  double sum = 0.0;
  for (double w : m.slot_means) sum += w;
  return sum / static_cast<double>(m.slot_means.size());
}

TEST(GenerateMarket, SlotMeansFollowTheStudyDistribution) {
  EXPECT_NEAR(slot_mean(Study::B), 10.0, 0.2);
  EXPECT_NEAR(slot_mean(Study::A), 20.0 / 3.0, 0.2);
  EXPECT_NEAR(slot_mean(Study::C), 40.0 / 3.0, 0.2);
}

TEST(StudyConfig, Validation) {
  StudyConfig c;
  c.slots = 2;
  EXPECT_THROW(c.validate(), Error);
  c = StudyConfig{};
  c.rounds = 0;
  EXPECT_THROW(c.validate(), Error);
  c = StudyConfig{};
  c.alpha_learn = 1.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(QUpdate, MixesObservedNodesOnly) {
  const auto prior = prior_q();
  FractionGrid f;
  EXPECT_EQ(q_update(prior, f, 0.0).nodes(), prior.nodes());
  f.value[10] = 0.75;
  f.count[10] = 4;
  const auto mixed = q_update(prior, f, 0.5);
  EXPECT_NEAR(mixed.nodes()[10], 0.5, 1e-15);
  EXPECT_EQ(mixed.nodes()[9], prior.nodes()[9]);
  EXPECT_EQ(q_update(prior, f, 1.0).nodes(), prior.nodes());
}

TEST(QUpdate, ZeroFractionsZeroTheObservedNodes) {
  FractionGrid f;
  for (std::size_t k = 0; k < 5; ++k) f.count[k] = 1;
  const auto q = q_update(prior_q(), f, 0.0);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(q.nodes()[k], 0.0);
  EXPECT_GT(q.nodes()[5], 0.0);
  EXPECT_EQ(q.nodes().front(), 0.0);
  EXPECT_EQ(q.nodes().back(), 0.0);
}

TEST(QUpdate, RejectsMisalignedOrParametric) {
  FractionGrid f;
  f.value.resize(5);
  EXPECT_THROW(q_update(prior_q(), f, 0.5), Error);
  EXPECT_THROW(q_update(ReturnModel::parametric(0.0), FractionGrid{}, 0.5), Error);
  EXPECT_THROW(q_update(prior_q(), FractionGrid{}, 1.5), Error);
}

TEST(BinSwitchFractions, TwoCentBinsFeedNodePairs) {
  const auto f = bin_switch_fractions({{1.0, true}, {1.5, false}, {19.0, true}, {25.0, true}});
  EXPECT_EQ(f.count[0], 2u);
  EXPECT_EQ(f.count[1], 2u);
  EXPECT_DOUBLE_EQ(f.value[0], 0.5);
  EXPECT_EQ(f.count[2], 0u);
  EXPECT_EQ(f.count[18], 2u);
  EXPECT_EQ(f.count[20], 2u);
  EXPECT_DOUBLE_EQ(f.value[19], 1.0);
}

TEST(AssignRound, FairRoundOneIsTheOfflineOptimum) {
  StudyConfig c;
  c.seed = 3;
  const auto mk = generate_market(c);
  AssignmentRequest req{{0, 1, 2}, std::vector<char>(c.slots, 1), {}};
  const auto slots = assign_round(Condition::Fair, mk, req, prior_q(), c);
  Matrix w(3, c.slots);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < c.slots; ++j) w(i, j) = std::clamp(mk.mean(i, j) / 20.0, 0.0, 1.0);
  double v = 0.0;
  for (std::size_t i = 0; i < 3; ++i) v += w(i, static_cast<std::size_t>(slots[i]));
  EXPECT_NEAR(v, solve_fair(make_instance(w)).value, 1e-12);
}

TEST(AssignRound, SelfishPicksTheModerateSlot) {
  StudyConfig c;
  c.players = 1;
  c.slots = 2;
  Market mk;
  mk.slot_means = {8.0, 20.0};
  mk.offsets = {0.0};
  mk.mean_payoff = Matrix{{8.0, 20.0}};
  AssignmentRequest req{{0}, {1, 1}, {}};
  EXPECT_EQ(assign_round(Condition::Selfish, mk, req, prior_q(), c)[0], 0);
  EXPECT_EQ(assign_round(Condition::Fair, mk, req, prior_q(), c)[0], 1);
}

TEST(AssignRound, LastSlotIsAlwaysUsedAndBansHold) {
  StudyConfig c;
  c.players = 1;
  c.slots = 2;
  Market mk;
  mk.slot_means = {8.0, 20.0};
  mk.offsets = {0.0};
  mk.mean_payoff = Matrix{{8.0, 20.0}};
  for (auto cond : {Condition::Fair, Condition::Selfish}) {
    AssignmentRequest only_second{{0}, {0, 1}, {}};
    EXPECT_EQ(assign_round(cond, mk, only_second, prior_q(), c)[0], 1);
    AssignmentRequest banned{{0}, {1, 1}, {{0}}};
    EXPECT_EQ(assign_round(cond, mk, banned, prior_q(), c)[0], 1);
    AssignmentRequest none{{0}, {0, 1}, {{1}}};
    EXPECT_EQ(assign_round(cond, mk, none, prior_q(), c)[0], -1);
  }
}

TEST(AgentStep, InertBehaviorAlwaysContinues) {
  const auto b = BehaviorModel::inert();
  PlayerState s;
  s.last_payoff = 1.0;
  s.rounds_played = 1;
  s.payoff_sum = 1.0;
  RandomEngine rng = make_engine(1, 1);
  for (int k = 0; k < 200; ++k) EXPECT_EQ(agent_step(s, 3, b, 6.0, rng), Action::Continue);
}

TEST(AgentStep, SwitchCurveDecreasesAndDecays) {
  const BehaviorModel b;
  EXPECT_GT(b.rematch_probability(2.0, 1), b.rematch_probability(18.0, 1));
  EXPECT_GT(b.rematch_probability(10.0, 1), b.rematch_probability(10.0, 9));
  for (double p = 0; p <= 40; p += 0.5) {
    EXPECT_GE(b.switch_curve(p), 0.0);
    EXPECT_LE(b.switch_curve(p), 1.0);
  }
  EXPECT_DOUBLE_EQ(b.drop_probability(std::nullopt, 6.0), 0.02);
  EXPECT_DOUBLE_EQ(b.drop_probability(3.0, 6.0), 0.12);
}

TEST(RunStudy, CertainDropPaysTheOutsideOptionForEveryRound) {
  StudyConfig c;
  BehaviorModel b = BehaviorModel::inert();
  b.drop_base = 1.0;
  const auto run = run_study(c, b);
  for (const auto* cond : {&run.fair, &run.selfish}) {
    for (double p : cond->payments) EXPECT_DOUBLE_EQ(p, 60.0);
    EXPECT_DOUBLE_EQ(cond->drop_rate, 1.0);
    EXPECT_EQ(cond->log.size(), c.players);
  }
}

TEST(RunStudy, NoSwitchingRepeatsTheFirstAssignment) {
  StudyConfig c;
  c.seed = 8;
  c.noise_sd = 0.0;
  const auto run = run_study(c, BehaviorModel::inert());
  for (const auto* cond : {&run.fair, &run.selfish}) {
    for (std::size_t r = 1; r < c.rounds; ++r) {
      EXPECT_DOUBLE_EQ(cond->round_welfare[r], cond->round_welfare[0]);
    }
    EXPECT_EQ(cond->rematch_count, 0u);
  }
}

TEST(RunStudy, LogInvariants) {
  StudyConfig c;
  c.seed = 12;
  const auto run = run_study(c, BehaviorModel{});
  for (const auto* cond : {&run.fair, &run.selfish}) {
    std::map<std::size_t, std::set<int>> left;
    std::set<std::size_t> exited;
    std::map<std::size_t, int> prev;
    for (std::size_t r = 1; r <= c.rounds; ++r) {
      std::set<int> held;
      std::size_t active = 0;
      for (const auto& rec : cond->log) {
        if (rec.round != r) continue;
        ++active;
        EXPECT_FALSE(exited.count(rec.player)) << "exited player reappeared";
        if (rec.action == Action::Exit) {
          exited.insert(rec.player);
          continue;
        }
        if (rec.slot >= 0) {
          EXPECT_TRUE(held.insert(rec.slot).second) << "slot held twice";
          EXPECT_FALSE(left[rec.player].count(rec.slot)) << "returned to an abandoned slot";
          EXPECT_GE(rec.payoff, 0.0);
        }
        if (rec.action == Action::Rematch && prev.count(rec.player) && prev[rec.player] >= 0) {
          left[rec.player].insert(prev[rec.player]);
          EXPECT_NE(rec.slot, prev[rec.player]);
        }
        if (rec.action == Action::Continue && r > 1 && prev.count(rec.player)) {
          EXPECT_EQ(rec.slot, prev[rec.player]);
        }
        prev[rec.player] = rec.slot;
      }
      EXPECT_EQ(active + (exited.size() - cond->round_drops[r - 1]) , c.players) << r;
    }
  }
  for (const auto& q : run.selfish.q_snapshots) {
    EXPECT_EQ(q.nodes().front(), 0.0);
    EXPECT_EQ(q.nodes().back(), 0.0);
    for (double v : q.nodes()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(RunStudy, ExitedPlayersGetSixCentsPerRemainingRound) {
  StudyConfig c;
  c.seed = 21;
  BehaviorModel b;
  b.drop_base = 0.3;
  const auto run = run_study(c, b);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < c.players; ++i) {
    double played = 0.0;
    std::size_t exit_round = 0;
    for (const auto& rec : run.fair.log) {
      if (rec.player != i) continue;
      if (rec.action == Action::Exit) exit_round = rec.round;
      else played += rec.payoff;
    }
    if (exit_round) {
      ++checked;
      EXPECT_NEAR(run.fair.payments[i] - played, 6.0 * static_cast<double>(c.rounds - exit_round + 1), 1e-9);
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(RunStudy, BitReproducible) {
  StudyConfig c;
  c.seed = 4;
  const auto a = run_study(c, BehaviorModel{});
  const auto b = run_study(c, BehaviorModel{});
  ASSERT_EQ(a.selfish.log.size(), b.selfish.log.size());
  for (std::size_t k = 0; k < a.selfish.log.size(); ++k) {
    EXPECT_EQ(a.selfish.log[k].slot, b.selfish.log[k].slot);
    EXPECT_EQ(a.selfish.log[k].payoff, b.selfish.log[k].payoff);
  }
  const auto p1 = run_pairs(c, BehaviorModel{}, 6, 1);
  const auto p4 = run_pairs(c, BehaviorModel{}, 6, 4);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(p1[k].fair.payments, p4[k].fair.payments);
}

TEST(Histogram, CountsEveryPlayedRound) {
  StudyConfig c;
  c.seed = 2;
  const auto runs = run_pairs(c, BehaviorModel{}, 10);
  const auto h = realized_payoff_histogram(runs);
  std::size_t total = 0, played = 0;
  for (auto v : h.fair) total += v;
  for (const auto& r : runs) played += r.fair.realized_payoffs.size();
  EXPECT_EQ(total, played);
  std::size_t uni = 0;
  for (auto v : h.universal) uni += v;
  EXPECT_EQ(uni, 10 * c.players * c.rounds);
  EXPECT_THROW(realized_payoff_histogram({}), Error);
}

TEST(Summary, FairEarnsMoreAndSelfishEngagesMoreInStudyA) {
  StudyConfig c;
  c.seed = 1;
  const auto s = summarize(Study::A, run_pairs(c, BehaviorModel{}, 200, 4));
  EXPECT_GE(s.fair_utility, s.selfish_utility);
  EXPECT_GT(s.selfish_engagement, s.fair_engagement);
  EXPECT_GE(s.histogram.fair_mean, s.histogram.universal_mean);
}
