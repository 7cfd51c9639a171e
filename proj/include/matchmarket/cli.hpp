#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "matchmarket/error.hpp"
#include "matchmarket/experiment.hpp"
#include "matchmarket/fair_matcher.hpp"
#include "matchmarket/io/config.hpp"
#include "matchmarket/io/csv.hpp"
#include "matchmarket/io/svg.hpp"
#include "matchmarket/market.hpp"
#include "matchmarket/online_matcher.hpp"
#include "matchmarket/parallel.hpp"
#include "matchmarket/poa.hpp"
#include "matchmarket/return_model.hpp"
#include "matchmarket/selfish_matcher.hpp"

namespace matchmarket::cli {

namespace fs = std::filesystem;
using io::Json;

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;  // bad input file, config or flag
inline constexpr int kExitModel = 2;  // return model violates its assumptions

/// Raised for problems with the return model given to `bound`.
struct ModelError : Error {
  using Error::Error;
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  unsigned threads = 0;  // 0: MATCHMARKET_THREADS or hardware concurrency
};

inline unsigned thread_count(const Globals& g) { return g.threads ? g.threads : default_threads(); }

inline fs::path prepare_out_dir(const Globals& g) {
  const fs::path dir(g.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidParameter, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

// --- shared option groups ----------------------------------------------------------

/// Return model selected on the command line or in a config.
struct ModelArgs {
  std::optional<double> alpha;
  std::string model_file;

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "parametric return model q(u) = u(1-u)^(1-alpha)");
    cmd->add_option("--model", model_file, "JSON return model: {\"alpha\": a} or {\"q\": [21 values]}");
  }

  /// Flags override the config's "model" entry; default alpha = 0.
  Json resolve(const Json& config) const {
    if (alpha) return Json{{"alpha", *alpha}};
    if (!model_file.empty()) return io::load_json(model_file);
    if (config.contains("model")) return config.at("model");
    return Json{{"alpha", 0.0}};
  }
};

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Malformed, what + ": cannot parse '" + tok + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::Malformed, what + ": empty list");
  return out;
}

/// Monte-Carlo settings shared by poa, sweep and online.
struct TrialArgs {
  std::string config_file;
  std::optional<std::size_t> m, n, trials;
  std::string beta;  // "a,b"
  std::optional<double> eps;
  ModelArgs model;

  void attach(CLI::App* cmd, bool with_eps) {
    cmd->add_option("--config", config_file, "JSON config (flags override it)");
    cmd->add_option("--m", m, "users per instance");
    cmd->add_option("--n", n, "items per instance");
    cmd->add_option("--trials", trials, "number of random instances");
    cmd->add_option("--beta", beta, "Beta(a,b) weight distribution, as a,b");
    if (with_eps) cmd->add_option("--eps", eps, "competition return rate (monopoly when absent)");
    model.attach(cmd);
  }
};

struct TrialConfig {
  std::vector<ReturnModel> models;
  std::size_t m = 5, n = 5, trials = 500;
  double beta_a = 2.0, beta_b = 2.0;
  std::optional<double> eps;
  std::vector<double> eps_list;
  Json effective;
};

inline TrialConfig resolve_trials(const TrialArgs& a, const Globals& g, const std::string& cmd,
                                  const std::string& eps_list_text = {}) {
  Json cfg = Json::object();
  if (!a.config_file.empty()) {
    cfg = io::load_json(a.config_file);
    io::check_keys(cfg, {"model", "m", "n", "trials", "beta", "eps", "seed"}, a.config_file);
  }
  Json eff;
  eff["model"] = a.model.resolve(cfg);
  eff["m"] = a.m ? *a.m : cfg.value("m", std::size_t{5});
  eff["n"] = a.n ? *a.n : cfg.value("n", std::size_t{5});
  eff["trials"] = a.trials ? *a.trials : cfg.value("trials", std::size_t{500});
  if (!a.beta.empty()) {
    const auto ab = parse_list(a.beta, "--beta");
    if (ab.size() != 2) throw Error(ErrorCode::Malformed, "--beta needs two values a,b");
    eff["beta"] = ab;
  } else {
    eff["beta"] = cfg.value("beta", std::vector<double>{2.0, 2.0});
  }
  if (!eps_list_text.empty()) {
    eff["eps"] = parse_list(eps_list_text, "--eps");
  } else if (a.eps) {
    eff["eps"] = *a.eps;
  } else if (cfg.contains("eps")) {
    eff["eps"] = cfg["eps"];
  }
  eff["seed"] = g.seed;
  eff["command"] = cmd;

  TrialConfig t;
  const std::string where = a.config_file.empty() ? "flags" : a.config_file;
  t.m = io::get_as<std::size_t>(eff, "m", where);
  t.n = io::get_as<std::size_t>(eff, "n", where);
  t.trials = io::get_as<std::size_t>(eff, "trials", where);
  const auto beta = io::get_as<std::vector<double>>(eff, "beta", where);
  if (beta.size() != 2) throw Error(ErrorCode::Malformed, where + ": key 'beta' needs [a, b]");
  t.beta_a = beta[0];
  t.beta_b = beta[1];
  if (t.m == 0 || t.n == 0) throw Error(ErrorCode::InvalidParameter, "m and n must be >= 1");
  if (eff.contains("eps")) {
    if (eff["eps"].is_array()) {
      t.eps_list = io::get_as<std::vector<double>>(eff, "eps", where);
    } else {
      t.eps = io::get_as<double>(eff, "eps", where);
      t.eps_list = {*t.eps};
    }
  }
  t.models = {io::model_from_json(eff["model"])};
  t.effective = eff;
  return t;
}

inline Stationary stationary_of(const std::optional<double>& eps) {
  if (eps) {
    check_eps(*eps);
    return Competition{*eps};
  }
  return Monopoly{};
}

inline void write_trials_csv(const fs::path& path, const EmpiricalPoAReport& rep,
                             const std::vector<std::string>& header, bool fair_first) {
  io::CsvWriter w(path, header);
  for (const auto& r : rep.records) {
    w.cell(r.trial).cell(std::to_string(r.seed));
    if (fair_first) {
      w.cell(r.fair_value).cell(r.selfish_value);
    } else {
      w.cell(r.selfish_value).cell(r.fair_value);
    }
    if (r.degenerate) {
      w.cell(std::string("nan"));
    } else {
      w.cell(r.ratio);
    }
    w.end_row();
  }
}

inline Json summary_json(const EmpiricalPoAReport& rep) {
  return Json{{"trials", rep.trials},
              {"degenerate", rep.degenerate},
              {"m", rep.m},
              {"n", rep.n},
              {"sampler", rep.sampler},
              {"stationary", rep.stationary},
              {"min_ratio", rep.min_ratio},
              {"mean_ratio", rep.mean_ratio}};
}

// --- commands ---------------------------------------------------------------------------

inline int cmd_bound(const ModelArgs& args, std::size_t users, const Globals& g) {
  ReturnModel model = ReturnModel::parametric(0.0);
  try {
    model = io::model_from_json(args.resolve(Json::object()));
  } catch (const Error& e) {
    throw ModelError(e.code(), std::string("invalid return model: ") + e.what());
  }
  const AssumptionReport rep = check_assumptions(model);
  if (!rep.all_ok()) {
    std::ostringstream msg;
    msg << "return model fails its assumptions: A1 " << (rep.a1_ok ? "ok" : "FAIL") << ", A2 "
        << (rep.a2_ok ? "ok" : "FAIL") << ", A3 " << (rep.a3_ok ? "ok" : "FAIL")
        << " (max second difference " << rep.max_second_diff << ")";
    throw ModelError(ErrorCode::NonConcave, msg.str());
  }
  if (users == 0) throw Error(ErrorCode::InvalidParameter, "--users must be >= 1");
  const PoABoundReport b = theorem1_bound(model, users);

  std::printf("c = %.9g\nu_bar = %.9g\nbound = %.9g\n", b.c, b.L, b.bound);

  const fs::path dir = prepare_out_dir(g);
  Json eff{{"model", io::model_to_json(model)}, {"users", users}, {"command", "bound"}};
  io::RunManifest manifest("bound", eff, g.seed);
  const fs::path out = dir / "bound.json";
  io::write_json(out, Json{{"H", b.H},
                           {"h", b.h},
                           {"c", b.c},
                           {"u_bar", b.L},
                           {"bound", b.bound},
                           {"residual", b.residual},
                           {"iterations", b.iterations},
                           {"users", users}});
  manifest.add_output(out);
  manifest.write(dir);
  return kExitOk;
}

struct MatchArgs {
  std::string instance;
  std::string mode = "fair";
  std::optional<double> eps;
  std::string order;  // online arrival order; random from --seed when empty
  ModelArgs model;
};

inline int cmd_match(const MatchArgs& a, const Globals& g) {
  const Matrix w = io::read_matrix_csv(a.instance);
  const MarketInstance inst(w);
  const fs::path dir = prepare_out_dir(g);
  Json eff{{"instance", fs::path(a.instance).filename().string()}, {"mode", a.mode}};
  eff["instance_hash"] = io::hex64(io::fnv1a(Json(w.values()).dump()));

  FractionalMatching matching;
  Json result;
  if (a.mode == "fair") {
    const FairSolution sol = solve_fair(inst);
    matching = sol.matching;
    result["value"] = sol.value;
  } else if (a.mode == "selfish" || a.mode == "online") {
    const ReturnModel model = io::model_from_json(a.model.resolve(Json::object()));
    const Stationary st = stationary_of(a.eps);
    eff["model"] = io::model_to_json(model);
    eff["stationary"] = describe(st);
    if (a.mode == "selfish") {
      SelfishOptions opt;
      opt.seed = g.seed;
      opt.threads = thread_count(g);
      const SelfishSolution sol = solve_selfish(inst, model, st, opt);
      const KktReport kkt = kkt_residual(inst, model, sol);
      matching = sol.matching;
      result["value"] = sol.value;
      result["fw_gap"] = sol.fw_gap;
      result["iterations"] = sol.iterations;
      result["converged"] = sol.converged;
      result["solver_mode"] = to_string(sol.mode);
      result["kkt"] = Json{{"stationarity", kkt.stationarity},
                           {"complementary_slackness", kkt.complementary_slackness},
                           {"dual_feasibility", kkt.dual_feasibility},
                           {"primal_feasibility", kkt.primal_feasibility}};
    } else {
      std::vector<std::size_t> order;
      if (a.order.empty()) {
        order = random_order(inst.m(), stream_seed(g.seed, 1));
        eff["seed"] = g.seed;
      } else {
        for (double v : parse_list(a.order, "--order")) {
          if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
            throw Error(ErrorCode::Malformed, "--order: entries must be user indices");
          }
          order.push_back(static_cast<std::size_t>(v));
        }
      }
      eff["order"] = order;
      const OnlineResult res = greedy_online(ArrivalSequence(order, inst), model, st);
      matching = res.matching;
      result["value"] = res.value;
      result["order"] = order;
    }
  } else {
    throw Error(ErrorCode::InvalidParameter, "--mode must be fair, selfish or online");
  }
  result["total_utility"] = matching.total_utility();

  io::RunManifest manifest("match", eff, g.seed);
  const fs::path x_path = dir / "x.csv";
  const fs::path u_path = dir / "utilities.csv";
  const fs::path r_path = dir / "result.json";
  io::write_matrix_csv(x_path, matching.x);
  io::write_vector_csv(u_path, "u", matching.u);
  io::write_json(r_path, result);
  for (const auto& p : {x_path, u_path, r_path}) manifest.add_output(p);
  manifest.write(dir);
  std::printf("value = %.9g\n", result["value"].get<double>());
  if (result.contains("fw_gap")) std::printf("fw_gap = %.3g\n", result["fw_gap"].get<double>());
  return kExitOk;
}

inline int cmd_poa(const TrialArgs& a, const Globals& g) {
  const TrialConfig t = resolve_trials(a, g, "poa");
  const InstanceSampler sampler{BetaDist{t.beta_a, t.beta_b}, g.seed};
  MonteCarloOptions opt;
  opt.threads = thread_count(g);
  const auto rep = empirical_poa(t.models, sampler, t.m, t.n, t.trials, stationary_of(t.eps), opt);

  const fs::path dir = prepare_out_dir(g);
  io::RunManifest manifest("poa", t.effective, g.seed);
  const fs::path csv = dir / "poa_trials.csv";
  write_trials_csv(csv, rep, {"trial", "seed", "fair_value", "selfish_value", "ratio"}, true);
  Json summary = summary_json(rep);
  if (t.eps_list.empty()) {
    const auto b = theorem1_bound(t.models.front(), t.m);
    summary["bound"] = b.bound;
  }
  const fs::path js = dir / "poa_summary.json";
  io::write_json(js, summary);
  manifest.add_output(csv);
  manifest.add_output(js);
  manifest.write(dir);
  std::printf("min_ratio = %.9g\nmean_ratio = %.9g\n", rep.min_ratio, rep.mean_ratio);
  return kExitOk;
}

inline int cmd_sweep(const TrialArgs& a, const std::string& eps_text, const Globals& g) {
  TrialConfig t = resolve_trials(a, g, "sweep", eps_text);
  if (t.eps_list.empty()) t.eps_list = {0.5, 0.1, 0.01, 0.001};
  t.effective["eps"] = t.eps_list;
  const InstanceSampler sampler{BetaDist{t.beta_a, t.beta_b}, g.seed};
  MonteCarloOptions opt;
  opt.threads = thread_count(g);
  const auto points = competition_sweep(t.models, sampler, t.m, t.n, t.trials, t.eps_list, opt);

  const fs::path dir = prepare_out_dir(g);
  io::RunManifest manifest("sweep", t.effective, g.seed);
  const fs::path csv = dir / "sweep.csv";
  {
    io::CsvWriter w(csv, {"eps", "min_ratio", "mean_ratio"});
    for (const auto& p : points) {
      w.cell(p.eps).cell(p.report.min_ratio).cell(p.report.mean_ratio);
      w.end_row();
    }
  }
  io::Series mn{"min ratio", {}, {}, "#d62728"};
  io::Series me{"mean ratio", {}, {}, "#1f77b4"};
  for (const auto& p : points) {
    mn.x.push_back(p.eps);
    mn.y.push_back(p.report.min_ratio);
    me.x.push_back(p.eps);
    me.y.push_back(p.report.mean_ratio);
  }
  const fs::path svg = dir / "sweep.svg";
  io::write_line_plot(svg, {"Welfare ratio under competition", "eps", "selfish / fair", true},
                      {mn, me});
  manifest.add_output(csv);
  manifest.add_output(svg);
  manifest.write(dir);
  for (const auto& p : points) {
    std::printf("eps = %-8g min_ratio = %.6f mean_ratio = %.6f\n", p.eps, p.report.min_ratio,
                p.report.mean_ratio);
  }
  return kExitOk;
}

inline int cmd_online(const TrialArgs& a, const Globals& g) {
  const TrialConfig t = resolve_trials(a, g, "online");
  const InstanceSampler sampler{BetaDist{t.beta_a, t.beta_b}, g.seed};
  const auto rep = online_poa_empirical(t.models, sampler, t.m, t.n, t.trials, stationary_of(t.eps),
                                        thread_count(g));
  const fs::path dir = prepare_out_dir(g);
  io::RunManifest manifest("online", t.effective, g.seed);
  const fs::path csv = dir / "online_trials.csv";
  write_trials_csv(csv, rep, {"trial", "order_seed", "online_value", "fair_value", "ratio"}, false);
  const fs::path js = dir / "online_summary.json";
  io::write_json(js, summary_json(rep));
  manifest.add_output(csv);
  manifest.add_output(js);
  manifest.write(dir);
  std::printf("min_ratio = %.9g\nmean_ratio = %.9g\n", rep.min_ratio, rep.mean_ratio);
  return kExitOk;
}

// --- sim ---------------------------------------------------------------------------------

struct SimArgs {
  std::string config_file;
  std::string study;  // A, B, C or all
  std::optional<std::size_t> pairs;
};

inline sim::Study parse_study(const std::string& s) {
  if (s == "A" || s == "a") return sim::Study::A;
  if (s == "B" || s == "b") return sim::Study::B;
  if (s == "C" || s == "c") return sim::Study::C;
  throw Error(ErrorCode::InvalidParameter, "study must be A, B, C or all, got '" + s + "'");
}

inline sim::BehaviorModel behavior_from_json(const Json& j, const std::string& where) {
  io::check_keys(j, {"switch_intercept", "switch_slope", "switch_min", "switch_max", "risk_decay",
                     "drop_base", "drop_low_mean"},
                 where + " behavior");
  sim::BehaviorModel b;
  const std::string w = where + " behavior";
  if (j.contains("switch_intercept")) b.switch_intercept = io::get_as<double>(j, "switch_intercept", w);
  if (j.contains("switch_slope")) b.switch_slope = io::get_as<double>(j, "switch_slope", w);
  if (j.contains("switch_min")) b.switch_min = io::get_as<double>(j, "switch_min", w);
  if (j.contains("switch_max")) b.switch_max = io::get_as<double>(j, "switch_max", w);
  if (j.contains("risk_decay")) b.risk_decay = io::get_as<double>(j, "risk_decay", w);
  if (j.contains("drop_base")) b.drop_base = io::get_as<double>(j, "drop_base", w);
  if (j.contains("drop_low_mean")) b.drop_low_mean = io::get_as<double>(j, "drop_low_mean", w);
  return b;
}

inline Json behavior_to_json(const sim::BehaviorModel& b) {
  return Json{{"switch_intercept", b.switch_intercept}, {"switch_slope", b.switch_slope},
              {"switch_min", b.switch_min},             {"switch_max", b.switch_max},
              {"risk_decay", b.risk_decay},             {"drop_base", b.drop_base},
              {"drop_low_mean", b.drop_low_mean}};
}

inline void apply_study_config(const Json& j, sim::StudyConfig& c, const std::string& where) {
  if (j.contains("players")) c.players = io::get_as<std::size_t>(j, "players", where);
  if (j.contains("slots")) c.slots = io::get_as<std::size_t>(j, "slots", where);
  if (j.contains("rounds")) c.rounds = io::get_as<std::size_t>(j, "rounds", where);
  if (j.contains("outside_per_round")) c.outside_per_round = io::get_as<double>(j, "outside_per_round", where);
  if (j.contains("payoff_scale")) c.payoff_scale = io::get_as<double>(j, "payoff_scale", where);
  if (j.contains("noise_sd")) c.noise_sd = io::get_as<double>(j, "noise_sd", where);
  if (j.contains("offset_sd")) c.offset_sd = io::get_as<double>(j, "offset_sd", where);
  if (j.contains("alpha_learn")) c.alpha_learn = io::get_as<double>(j, "alpha_learn", where);
  if (j.contains("selfish_objective")) {
    const auto s = io::get_as<std::string>(j, "selfish_objective", where);
    if (s == "stationary") {
      c.selfish_objective = sim::SelfishObjective::Stationary;
    } else if (s == "immediate") {
      c.selfish_objective = sim::SelfishObjective::Immediate;
    } else {
      throw Error(ErrorCode::Malformed, where + ": key 'selfish_objective' must be stationary or immediate");
    }
  }
}

inline Json study_config_json(const sim::StudyConfig& c) {
  return Json{{"players", c.players},
              {"slots", c.slots},
              {"rounds", c.rounds},
              {"outside_per_round", c.outside_per_round},
              {"payoff_scale", c.payoff_scale},
              {"noise_sd", c.noise_sd},
              {"offset_sd", c.offset_sd},
              {"alpha_learn", c.alpha_learn},
              {"selfish_objective",
               c.selfish_objective == sim::SelfishObjective::Stationary ? "stationary" : "immediate"}};
}

inline void write_sim_outputs(const fs::path& dir, const std::string& tag,
                              const std::vector<sim::RunResult>& runs, const sim::StudySummary& s,
                              io::RunManifest& manifest) {
  const fs::path rounds = dir / ("sim_" + tag + "_rounds.csv");
  {
    io::CsvWriter w(rounds, {"pair", "seed", "condition", "round", "player", "action", "slot", "payoff"});
    for (std::size_t k = 0; k < runs.size(); ++k) {
      for (const auto* cond : {&runs[k].fair, &runs[k].selfish}) {
        for (const auto& r : cond->log) {
          w.cell(k).cell(std::to_string(runs[k].seed)).cell(std::string(sim::to_string(cond->condition)));
          w.cell(r.round).cell(r.player).cell(std::string(sim::to_string(r.action))).cell(r.slot).cell(r.payoff);
          w.end_row();
        }
      }
    }
  }
  const fs::path per_round = dir / ("sim_" + tag + "_per_round.csv");
  {
    io::CsvWriter w(per_round, {"round", "fair_utility", "selfish_utility", "fair_engagement",
                                "selfish_engagement", "poa_min", "poa_mean", "poa_max"});
    for (std::size_t r = 0; r < s.fair_round_utility.size(); ++r) {
      w.cell(r + 1).cell(s.fair_round_utility[r]).cell(s.selfish_round_utility[r]);
      w.cell(s.fair_round_engagement[r]).cell(s.selfish_round_engagement[r]);
      w.cell(s.round_poa[r].min).cell(s.round_poa[r].mean).cell(s.round_poa[r].max);
      w.end_row();
    }
  }
  const fs::path pairs = dir / ("sim_" + tag + "_pairs.csv");
  {
    io::CsvWriter w(pairs, {"pair", "seed", "fair_utility", "selfish_utility", "fair_engagement",
                            "selfish_engagement", "fair_drop", "selfish_drop", "poa_above_one"});
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const auto& r = runs[k];
      w.cell(k).cell(std::to_string(r.seed)).cell(r.fair.mean_utility).cell(r.selfish.mean_utility);
      w.cell(r.fair.engagement_rate).cell(r.selfish.engagement_rate);
      w.cell(r.fair.drop_rate).cell(r.selfish.drop_rate).cell(r.poa_above_one ? 1 : 0);
      w.end_row();
    }
  }
  const fs::path hist = dir / ("sim_" + tag + "_histogram.csv");
  {
    io::CsvWriter w(hist, {"bin_lo", "bin_hi", "fair", "selfish", "universal"});
    const auto& h = s.histogram;
    for (std::size_t b = 0; b < h.bins(); ++b) {
      const double lo = h.bin_width * static_cast<double>(b);
      w.cell(lo).cell(b + 1 == h.bins() ? std::string("inf") : io::format_double(lo + h.bin_width));
      w.cell(h.fair[b]).cell(h.selfish[b]).cell(h.universal[b]);
      w.end_row();
    }
  }
  for (const auto& p : {rounds, per_round, pairs, hist}) manifest.add_output(p);

  std::vector<double> xs(s.fair_round_utility.size());
  for (std::size_t r = 0; r < xs.size(); ++r) xs[r] = static_cast<double>(r + 1);
  const std::string study = "Study " + tag;
  auto plot = [&](const std::string& name, const io::PlotSpec& spec, std::vector<io::Series> series) {
    const fs::path p = dir / ("sim_" + tag + "_" + name + ".svg");
    io::write_line_plot(p, spec, series);
    manifest.add_output(p);
  };
  plot("utility", {study + ": mean utility per round", "round", "cents"},
       {{"Fair", xs, s.fair_round_utility, "#1f77b4"},
        {"Selfish", xs, s.selfish_round_utility, "#d62728"}});
  plot("engagement", {study + ": engagement rate", "round", "rematch fraction"},
       {{"Fair", xs, s.fair_round_engagement, "#1f77b4"},
        {"Selfish", xs, s.selfish_round_engagement, "#d62728"}});
  std::vector<double> pmin, pmean, pmax;
  for (const auto& r : s.round_poa) {
    pmin.push_back(r.min);
    pmean.push_back(r.mean);
    pmax.push_back(r.max);
  }
  plot("poa", {study + ": per-round welfare ratio", "round", "selfish / fair"},
       {{"min", xs, pmin, "#7f7f7f", true}, {"mean", xs, pmean, "#2ca02c"}, {"max", xs, pmax, "#7f7f7f", true}});

  std::vector<double> fair_drop(runs.size()), selfish_drop(runs.size()), idx(runs.size());
  for (std::size_t k = 0; k < runs.size(); ++k) {
    idx[k] = static_cast<double>(k);
    fair_drop[k] = runs[k].fair.drop_rate;
    selfish_drop[k] = runs[k].selfish.drop_rate;
  }
  const fs::path drop = dir / ("sim_" + tag + "_drop.svg");
  io::write_bar_plot(drop, {study + ": drop rate", "condition", "fraction exited"}, {"rate"},
                     {{"Fair", {0.0}, {s.fair_drop}, "#1f77b4"},
                      {"Selfish", {0.0}, {s.selfish_drop}, "#d62728"}});
  manifest.add_output(drop);

  const auto& h = s.histogram;
  std::vector<std::string> cats;
  io::Series hf{"Fair", {}, {}, "#1f77b4"}, hs{"Selfish", {}, {}, "#d62728"}, hu{"Universal", {}, {}, "#7f7f7f"};
  for (std::size_t b = 0; b < h.bins(); ++b) {
    cats.push_back(io::format_double(h.bin_width * static_cast<double>(b)));
    hf.y.push_back(static_cast<double>(h.fair[b]));
    hs.y.push_back(static_cast<double>(h.selfish[b]));
    hu.y.push_back(static_cast<double>(h.universal[b]));
  }
  const fs::path hsvg = dir / ("sim_" + tag + "_histogram.svg");
  io::write_bar_plot(hsvg, {study + ": realized payoffs", "payoff bin (cents)", "count"}, cats, {hf, hs, hu});
  manifest.add_output(hsvg);
}

inline int cmd_sim(const SimArgs& a, const Globals& g) {
  Json cfg = Json::object();
  const std::string where = a.config_file.empty() ? "flags" : a.config_file;
  if (!a.config_file.empty()) {
    cfg = io::load_json(a.config_file);
    io::check_keys(cfg,
                   {"study", "pairs", "seed", "players", "slots", "rounds", "outside_per_round",
                    "payoff_scale", "noise_sd", "offset_sd", "alpha_learn", "selfish_objective",
                    "behavior"},
                   a.config_file);
  }
  sim::StudyConfig base;
  apply_study_config(cfg, base, where);
  base.seed = g.seed;
  const sim::BehaviorModel behavior =
      cfg.contains("behavior") ? behavior_from_json(cfg["behavior"], where) : sim::BehaviorModel{};
  const std::size_t pairs = a.pairs ? *a.pairs : cfg.value("pairs", std::size_t{200});
  if (pairs == 0) throw Error(ErrorCode::InvalidParameter, "pairs must be >= 1");
  std::string study = a.study.empty() ? cfg.value("study", std::string("all")) : a.study;

  std::vector<sim::Study> studies;
  if (study == "all") {
    studies = {sim::Study::A, sim::Study::B, sim::Study::C};
  } else {
    studies = {parse_study(study)};
  }

  Json eff = study_config_json(base);
  eff["behavior"] = behavior_to_json(behavior);
  eff["study"] = study;
  eff["pairs"] = pairs;
  eff["seed"] = g.seed;
  eff["command"] = "sim";

  const fs::path dir = prepare_out_dir(g);
  io::RunManifest manifest("sim", eff, g.seed);
  const fs::path metrics = dir / "sim_metrics.csv";
  io::CsvWriter mw(metrics, {"study", "pairs", "fair_utility", "selfish_utility", "utility_gap",
                             "relative_gap", "fair_engagement", "selfish_engagement", "fair_drop",
                             "selfish_drop", "pairs_fair_drop_higher", "pairs_selfish_drop_higher",
                             "fair_payoff_mean", "universal_payoff_mean", "selfish_payoff_mean",
                             "pairs_poa_above_one"});
  for (sim::Study st : studies) {
    sim::StudyConfig c = base;
    c.study = st;
    const auto runs = sim::run_pairs(c, behavior, pairs, thread_count(g));
    const auto s = sim::summarize(st, runs);
    const std::string tag = sim::to_string(st);
    mw.cell(tag).cell(pairs).cell(s.fair_utility).cell(s.selfish_utility);
    mw.cell(s.fair_utility - s.selfish_utility).cell(s.relative_gap());
    mw.cell(s.fair_engagement).cell(s.selfish_engagement).cell(s.fair_drop).cell(s.selfish_drop);
    mw.cell(s.drop_fair_higher).cell(s.drop_selfish_higher);
    mw.cell(s.histogram.fair_mean).cell(s.histogram.universal_mean).cell(s.histogram.selfish_mean);
    mw.cell(s.poa_above_one);
    mw.end_row();
    write_sim_outputs(dir, tag, runs, s, manifest);
    std::printf("study %s: fair %.3f selfish %.3f cents/round, engagement %.3f vs %.3f\n",
                tag.c_str(), s.fair_utility, s.selfish_utility, s.fair_engagement,
                s.selfish_engagement);
  }
  manifest.add_output(metrics);
  manifest.write(dir);
  return kExitOk;
}

// --- entry point -----------------------------------------------------------------------

inline int run_cli(int argc, char** argv) {
  CLI::App app{"Fair and engagement-maximizing matching markets"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "base random seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "directory for output files")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (default: MATCHMARKET_THREADS or all cores)");

  auto* bound = app.add_subcommand("bound", "worst-case welfare ratio guaranteed by the return model");
  ModelArgs bound_model;
  std::size_t users = 1;
  bound_model.attach(bound);
  bound->add_option("--users", users, "number of identical users")->capture_default_str();

  auto* match = app.add_subcommand("match", "solve one instance");
  MatchArgs match_args;
  match->add_option("--instance", match_args.instance, "weight matrix CSV")->required();
  match->add_option("--mode", match_args.mode, "fair, selfish or online")->capture_default_str();
  match->add_option("--eps", match_args.eps, "competition return rate");
  match->add_option("--order", match_args.order, "online arrival order, comma separated");
  match_args.model.attach(match);

  auto* poa = app.add_subcommand("poa", "Monte-Carlo selfish/fair welfare ratio");
  TrialArgs poa_args;
  poa_args.attach(poa, true);

  auto* sweep = app.add_subcommand("sweep", "welfare ratio across competition levels");
  TrialArgs sweep_args;
  std::string sweep_eps;
  sweep_args.attach(sweep, false);
  sweep->add_option("--eps", sweep_eps, "comma separated eps values");

  auto* online = app.add_subcommand("online", "Monte-Carlo greedy online welfare ratio");
  TrialArgs online_args;
  online_args.attach(online, true);

  auto* simcmd = app.add_subcommand("sim", "synthetic Fair vs Selfish designer experiment");
  SimArgs sim_args;
  simcmd->add_option("--config", sim_args.config_file, "JSON study and behavior config");
  simcmd->add_option("--study", sim_args.study, "A, B, C or all");
  simcmd->add_option("--pairs", sim_args.pairs, "paired runs per study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*bound) return cmd_bound(bound_model, users, g);
    if (*match) return cmd_match(match_args, g);
    if (*poa) return cmd_poa(poa_args, g);
    if (*sweep) return cmd_sweep(sweep_args, sweep_eps, g);
    if (*online) return cmd_online(online_args, g);
    if (*simcmd) return cmd_sim(sim_args, g);
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitModel;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace matchmarket::cli
