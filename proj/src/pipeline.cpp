#include <chrono>
#include <fstream>

#include "json.hpp"

#include "plmp/acflow.hpp"
#include "plmp/market.hpp"
#include "plmp/scenario.hpp"

namespace plmp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs one stage, timing it and prefixing library errors with the stage name.
template <typename F>
void stage(RunReport& report, const std::string& name, F&& body) {
  const auto start = Clock::now();
  try {
    body();
  } catch (const InfeasibleTimestep&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), "stage '" + name + "': " + e.what());
  }
  report.stage_seconds.emplace_back(name, seconds_since(start));
}

std::ofstream open_csv(const std::filesystem::path& dir, const std::string& name, RunReport& report) {
  std::ofstream out(dir / name);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / name).string());
  report.files.push_back(name);
  return out;
}

}  // namespace

AgentSimulation simulate_agent(const MarketSolution& market, const ScenarioConfig& cfg, const AgentConfig& agent,
                               const std::vector<Eigen::MatrixXd>& germ_paths) {
  const int H = market.horizon();
  std::vector<std::vector<double>> da_samples(static_cast<std::size_t>(H));
  for (int t = 0; t < H; ++t) {
    const PriceDistribution dist = price_distribution(market, agent.bus, t, cfg.sampling.samples, cfg.sampling.seed);
    const double da = market.plmp(agent.bus, t).day_ahead();
    for (double v : dist.samples) da_samples[static_cast<std::size_t>(t)].push_back(v - da);
  }
  AgentSimulation sim{build_dp_tables(agent.storage, da_samples, cfg.dp), {}, {}, {}};
  const auto has = [&](const char* p) {
    return std::find(agent.policies.begin(), agent.policies.end(), p) != agent.policies.end();
  };
  for (std::size_t i = 0; i < germ_paths.size(); ++i) {
    PricePath path(static_cast<std::size_t>(H));
    for (int t = 0; t < H; ++t) {
      const Eigen::VectorXd xi = germ_paths[i].row(t).transpose();
      path[static_cast<std::size_t>(t)] =
          delta_price(market, agent.bus, t, std::span<const double>(xi.data(), static_cast<std::size_t>(xi.size())));
    }
    const int id = static_cast<int>(i);
    sim.hindsight.push_back(hindsight_policy(agent.storage, path, cfg.dp));
    sim.hindsight.back().path_id = id;
    if (has("rule")) {
      sim.rule.push_back(rule_based_policy(agent.storage, path));
      sim.rule.back().path_id = id;
    }
    if (has("dp")) {
      sim.dp.push_back(dp_policy(sim.tables, path));
      sim.dp.back().path_id = id;
    }
  }
  return sim;
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  nlohmann::ordered_json stages = nlohmann::ordered_json::object();
  for (const auto& [name, secs] : stage_seconds) stages[name] = secs;
  j["stage_seconds"] = stages;
  j["solver_seconds"] = solver_seconds;
  j["total_seconds"] = total_seconds;
  j["objective"] = objective;
  nlohmann::ordered_json steps_json = nlohmann::ordered_json::array();
  for (const auto& s : steps) {
    steps_json.push_back({{"t", s.t},
                          {"status", s.status},
                          {"iterations", s.iterations},
                          {"objective", s.objective},
                          {"relative_gap", s.relative_gap},
                          {"equality_residual", s.equality_residual},
                          {"solve_seconds", s.solve_seconds},
                          {"binding", s.binding}});
  }
  j["steps"] = steps_json;
  nlohmann::ordered_json regret = nlohmann::ordered_json::object();
  for (const auto& [label, value] : final_regret) regret[label] = value;
  j["final_regret"] = regret;
  j["files"] = files;
  return j.dump(2) + "\n";
}

RunReport run(const ScenarioConfig& input, const RunOptions& options) {
  const auto start = Clock::now();
  ScenarioConfig cfg = input;
  apply_overrides(cfg, options);
  RunReport report;
  report.scenario = cfg.name;
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);

  CcOpfProblem prob;
  stage(report, "build", [&] { prob = build_problem(cfg); });

  CcOpfSolution sol;
  stage(report, "clear", [&] {
    SolveOptions so;
    so.threads = cfg.threads;
    sol = solve(prob, so);
  });
  report.solver_seconds = sol.solver_seconds;
  report.objective = sol.objective;

  std::optional<MarketSolution> market;
  stage(report, "prices", [&] {
    market.emplace(extract_plmps(sol, prob));
    const auto feas = feasibility_report(sol, prob);
    for (const auto& step : sol.steps) {
      StepReport sr{step.t, to_string(step.status), step.iterations, step.objective, step.relative_gap,
                    step.equality_residual, step.solve_seconds, {}};
      for (const auto& c : feas[static_cast<std::size_t>(step.t)].binding()) {
        sr.binding.push_back(to_string(c.spec.kind) + ":" + std::to_string(c.spec.index));
      }
      report.steps.push_back(std::move(sr));
    }
    auto out = open_csv(dir, "prices_da.csv", report);
    write_prices_da(out, *market);
  });

  stage(report, "distributions", [&] {
    auto rt = open_csv(dir, "prices_rt_samples.csv", report);
    write_rt_samples(rt, *market, cfg.sampling.samples, cfg.sampling.seed);
    auto qs = open_csv(dir, "price_quantiles.csv", report);
    write_price_quantiles(qs, *market, cfg.sampling.samples, cfg.sampling.seed);
  });

  const int H = cfg.horizon;
  std::vector<Eigen::MatrixXd> germ_paths;
  std::vector<AgentOverlay> overlays;
  stage(report, "agents", [&] {
    germ_paths = sample_germ_paths(cfg.germ, cfg.sampling.paths, H, cfg.sampling.seed);
    if (cfg.agents.empty()) return;
    const bool tagged = cfg.agents.size() > 1;
    std::vector<AgentRun> all_runs;
    std::vector<RegretCurve> curves;
    for (const auto& agent : cfg.agents) {
      AgentSimulation sim = simulate_agent(*market, cfg, agent, germ_paths);
      const std::vector<std::string>& policies = agent.policies;
      for (auto* sel : {&sim.rule, &sim.dp}) {
        if (sel->empty()) continue;
        RegretCurve curve = regret_curve(sim.hindsight, *sel);
        if (tagged) curve.policy += "@" + std::to_string(agent.bus);
        report.final_regret.emplace_back(curve.policy, curve.avg_cum_regret.back());
        curves.push_back(std::move(curve));
      }
      // Grid impact uses the most informed non-oracle policy present.
      const std::string overlay_policy =
          std::find(policies.begin(), policies.end(), "dp") != policies.end()     ? "dp"
          : std::find(policies.begin(), policies.end(), "rule") != policies.end() ? "rule"
                                                                                   : "hindsight";
      AgentOverlay ov;
      ov.bus = agent.bus;
      ov.p = Eigen::MatrixXd::Zero(cfg.validation.samples, H);
      const std::vector<AgentRun>& src =
          overlay_policy == "dp" ? sim.dp : overlay_policy == "rule" ? sim.rule : sim.hindsight;
      for (int i = 0; i < cfg.validation.samples; ++i) {
        for (int t = 0; t < H; ++t) ov.p(i, t) = src[static_cast<std::size_t>(i)].p[static_cast<std::size_t>(t)];
      }
      overlays.push_back(std::move(ov));

      const bool keep_hindsight = std::find(policies.begin(), policies.end(), "hindsight") != policies.end();
      // Path-major output: hindsight, rule, dp for each path.
      for (std::size_t i = 0; i < sim.hindsight.size(); ++i) {
        for (auto* sel : {&sim.hindsight, &sim.rule, &sim.dp}) {
          if (sel->empty() || (sel == &sim.hindsight && !keep_hindsight)) continue;
          AgentRun r = std::move((*sel)[i]);
          if (tagged) r.policy += "@" + std::to_string(agent.bus);
          all_runs.push_back(std::move(r));
        }
      }
    }
    auto ar = open_csv(dir, "agent_runs.csv", report);
    write_agent_runs(ar, all_runs);
    auto rg = open_csv(dir, "regret.csv", report);
    write_regret(rg, curves);
  });

  if (cfg.validation.enabled) {
    stage(report, "ac_validation", [&] {
      const std::vector<Eigen::MatrixXd> sub(germ_paths.begin(), germ_paths.begin() + cfg.validation.samples);
      ValidationOptions vo;
      vo.timesteps = cfg.validation.timesteps;
      const ValidationStats stats = validate_solution(*market, prob, sub, overlays, vo);
      auto out = open_csv(dir, "ac_validation.csv", report);
      write_ac_validation(out, stats);
    });
  }

  report.files.push_back("run_report.json");
  report.total_seconds = seconds_since(start);
  std::ofstream json(dir / "run_report.json");
  if (!json) throw Error(ErrorCode::kIoError, "cannot write " + (dir / "run_report.json").string());
  json << report.to_json();
  return report;
}

}  // namespace plmp
