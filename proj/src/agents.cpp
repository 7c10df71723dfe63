#include "plmp/agents.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace plmp {

namespace {

constexpr double kTol = 1e-9;

void require_horizon(const PricePath& path) {
  if (path.size() < 2) throw Error(ErrorCode::kInvalidArgument, "price path needs at least two periods");
}

int level_of(const StorageSpec& spec, double energy, int levels) {
  if (spec.E_cap == 0.0 || levels == 1) return 0;
  return static_cast<int>(std::lround(energy / spec.E_cap * (levels - 1)));
}

// Moves in order 0, +1, -1, +2, -2, ... so a strict improvement test keeps the smallest |p|.
std::vector<int> move_order(int max_move) {
  std::vector<int> moves{0};
  for (int m = 1; m <= max_move; ++m) {
    moves.push_back(m);
    moves.push_back(-m);
  }
  return moves;
}

AgentRun start_run(const std::string& policy, std::size_t horizon, double e0) {
  AgentRun run;
  run.policy = policy;
  run.p.reserve(horizon);
  run.revenue.reserve(horizon);
  run.soc.reserve(horizon + 1);
  run.soc.push_back(e0);
  return run;
}

void record(AgentRun& run, double p, double energy_after, double price, double dt) {
  run.p.push_back(p);
  run.soc.push_back(energy_after);
  run.revenue.push_back(p * price * dt);
  run.profit += run.revenue.back();
}

}  // namespace

StorageSpec StorageSpec::with_capacity(double E_cap) {
  return {E_cap, 0.25 * E_cap, 0.5 * E_cap, 0.5 * E_cap, 1.0};
}

void validate_storage(const StorageSpec& s) {
  if (!(s.E_cap >= 0.0 && s.P_cap >= 0.0 && s.dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "storage needs E_cap >= 0, P_cap >= 0, dt > 0");
  }
  if (s.E_init < 0.0 || s.E_init > s.E_cap || s.E_end < 0.0 || s.E_end > s.E_cap) {
    throw Error(ErrorCode::kInvalidArgument, "boundary energies must lie in [0, E_cap]");
  }
}

AgentRun rule_based_policy(const StorageSpec& spec, const PricePath& path) {
  validate_storage(spec);
  require_horizon(path);
  const std::size_t H = path.size();
  const double dt = spec.dt;
  const double step = spec.P_cap * dt;
  AgentRun run = start_run("rule", H, spec.E_init);
  double E = spec.E_init;

  auto greedy = [&](double price) {
    return price >= 0.0 ? std::min(E / dt, spec.P_cap) : -std::min((spec.E_cap - E) / dt, spec.P_cap);
  };

  for (std::size_t t = 0; t < H; ++t) {
    double p;
    if (t + 2 < H) {
      p = greedy(path[t]);
    } else if (t + 2 == H) {
      if (E < spec.E_end - step) {
        p = -spec.P_cap;
      } else if (E > spec.E_end + step) {
        p = spec.P_cap;
      } else {
        // Greedy, but never beyond one final step from E_end.
        const double lo = std::max((E - spec.E_end - step) / dt, -spec.P_cap);
        const double hi = std::min((E - spec.E_end + step) / dt, spec.P_cap);
        p = std::clamp(greedy(path[t]), lo, hi);
      }
    } else {
      p = (E - spec.E_end) / dt;
      if (std::abs(p) > spec.P_cap + kTol) {
        throw Error(ErrorCode::kInfeasibleBoundary, "cannot return to E_end in the final period");
      }
    }
    E = t + 1 == H ? spec.E_end : std::clamp(E - p * dt, 0.0, spec.E_cap);
    record(run, p, E, path[t], dt);
  }
  return run;
}

double DpTables::energy(int level) const {
  return levels > 1 ? spec.E_cap * level / (levels - 1) : 0.0;
}

double DpTables::power(int from, int to) const {
  return levels > 1 ? spec.E_cap * (from - to) / (levels - 1) / spec.dt : 0.0;
}

DpTables build_dp_tables_from_stats(const StorageSpec& spec, const std::vector<double>& q,
                                    const std::vector<double>& v_up, const std::vector<double>& v_down,
                                    const DpOptions& options) {
  validate_storage(spec);
  if (options.levels < 1) throw Error(ErrorCode::kInvalidArgument, "SOC grid needs at least one level");
  if (q.empty() || v_up.size() != q.size() || v_down.size() != q.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "per-period statistics differ in length");
  }
  DpTables tb;
  tb.spec = spec;
  tb.levels = options.levels;
  tb.kappa = options.kappa;
  tb.q = q;
  tb.v_up = v_up;
  tb.v_down = v_down;
  tb.empty_up.assign(q.size(), false);
  tb.empty_down.assign(q.size(), false);
  const int L = tb.levels;
  const double delta = L > 1 ? spec.E_cap / (L - 1) : 0.0;
  tb.max_move = delta > 0.0 ? static_cast<int>(std::floor(spec.P_cap * spec.dt / delta + 1e-9)) : 0;
  tb.end_level = level_of(spec, spec.E_end, L);

  const int H = tb.horizon();
  const std::vector<int> moves = move_order(tb.max_move);
  tb.V.assign(static_cast<std::size_t>(H + 1), std::vector<double>(static_cast<std::size_t>(L), 0.0));
  for (int j = 0; j < L; ++j) tb.V[static_cast<std::size_t>(H)][static_cast<std::size_t>(j)] = j == tb.end_level ? 0.0 : -tb.kappa;

  for (int t = H - 1; t >= 0; --t) {
    const auto ut = static_cast<std::size_t>(t);
    if (!(q[ut] >= 0.0 && q[ut] <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "q outside [0, 1]");
    const std::vector<double>& next = tb.V[ut + 1];
    for (int j = 0; j < L; ++j) {
      double best_up = -std::numeric_limits<double>::infinity();
      double best_down = -std::numeric_limits<double>::infinity();
      for (int m : moves) {
        const int to = j + m;
        if (to < 0 || to >= L) continue;
        const double p = tb.power(j, to);
        const double cont = next[static_cast<std::size_t>(to)];
        best_up = std::max(best_up, p * v_up[ut] * spec.dt + cont);
        best_down = std::max(best_down, p * v_down[ut] * spec.dt + cont);
      }
      tb.V[ut][static_cast<std::size_t>(j)] = q[ut] * best_up + (1.0 - q[ut]) * best_down;
    }
  }
  return tb;
}

DpTables build_dp_tables(const StorageSpec& spec, const std::vector<std::vector<double>>& samples,
                         const DpOptions& options) {
  const std::size_t H = samples.size();
  std::vector<double> q(H), up(H), down(H);
  std::vector<bool> empty_up(H), empty_down(H);
  for (std::size_t t = 0; t < H; ++t) {
    if (samples[t].empty()) throw Error(ErrorCode::kInvalidArgument, "no price samples for period " + std::to_string(t));
    double sum_up = 0.0, sum_down = 0.0;
    std::size_t n_up = 0, n_down = 0;
    for (double v : samples[t]) {
      if (v > 0.0) {
        sum_up += v;
        ++n_up;
      } else {
        sum_down += v;
        ++n_down;
      }
    }
    q[t] = static_cast<double>(n_up) / static_cast<double>(samples[t].size());
    up[t] = n_up ? sum_up / static_cast<double>(n_up) : 0.0;
    down[t] = n_down ? sum_down / static_cast<double>(n_down) : 0.0;
    empty_up[t] = n_up == 0;
    empty_down[t] = n_down == 0;
  }
  DpTables tb = build_dp_tables_from_stats(spec, q, up, down, options);
  tb.empty_up = std::move(empty_up);
  tb.empty_down = std::move(empty_down);
  return tb;
}

AgentRun dp_policy(const DpTables& tb, const PricePath& path) {
  require_horizon(path);
  if (static_cast<int>(path.size()) != tb.horizon()) {
    throw Error(ErrorCode::kDimensionMismatch, "price path length differs from the DP horizon");
  }
  const std::vector<int> moves = move_order(tb.max_move);
  int j = level_of(tb.spec, tb.spec.E_init, tb.levels);
  AgentRun run = start_run("dp", path.size(), tb.energy(j));
  for (std::size_t t = 0; t < path.size(); ++t) {
    const std::vector<double>& next = tb.V[t + 1];
    int best_to = j;
    double best = -std::numeric_limits<double>::infinity();
    for (int m : moves) {
      const int to = j + m;
      if (to < 0 || to >= tb.levels) continue;
      const double v = tb.power(j, to) * path[t] * tb.spec.dt + next[static_cast<std::size_t>(to)];
      if (v > best) {
        best = v;
        best_to = to;
      }
    }
    record(run, tb.power(j, best_to), tb.energy(best_to), path[t], tb.spec.dt);
    j = best_to;
  }
  if (j != tb.end_level) throw Error(ErrorCode::kInfeasibleBoundary, "DP trajectory misses the final energy level");
  return run;
}

AgentRun hindsight_policy(const StorageSpec& spec, const PricePath& path, const DpOptions& options) {
  validate_storage(spec);
  require_horizon(path);
  // Deterministic tables: q = 1 with v_up equal to the realized price.
  DpTables tb = build_dp_tables_from_stats(spec, std::vector<double>(path.size(), 1.0), path,
                                           std::vector<double>(path.size(), 0.0), options);
  AgentRun run = dp_policy(tb, path);
  run.policy = "hindsight";
  return run;
}

RegretCurve regret_curve(const std::vector<AgentRun>& hindsight, const std::vector<AgentRun>& runs) {
  if (hindsight.empty() || hindsight.size() != runs.size()) {
    throw Error(ErrorCode::kPathMismatch, "policies were evaluated on different path sets");
  }
  const std::size_t H = hindsight.front().revenue.size();
  RegretCurve curve;
  curve.policy = runs.front().policy;
  curve.avg_cum_regret.assign(H, 0.0);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].path_id != hindsight[i].path_id || runs[i].revenue.size() != H || hindsight[i].revenue.size() != H) {
      throw Error(ErrorCode::kPathMismatch, "run " + std::to_string(i) + " does not match its hindsight path");
    }
    double cum = 0.0;
    for (std::size_t t = 0; t < H; ++t) {
      cum += hindsight[i].revenue[t] - runs[i].revenue[t];
      curve.avg_cum_regret[t] += cum;
    }
  }
  for (double& v : curve.avg_cum_regret) v /= static_cast<double>(runs.size());
  return curve;
}

void write_agent_runs(std::ostream& out, const std::vector<AgentRun>& runs) {
  out << std::setprecision(12);
  out << "path_id,policy,t,p,soc,profit_cum\n";
  for (const auto& run : runs) {
    double cum = 0.0;
    for (std::size_t t = 0; t < run.p.size(); ++t) {
      cum += run.revenue[t];
      out << run.path_id << ',' << run.policy << ',' << t << ',' << run.p[t] << ',' << run.soc[t + 1] << ',' << cum
          << '\n';
    }
  }
}

void write_regret(std::ostream& out, const std::vector<RegretCurve>& curves) {
  out << std::setprecision(12);
  out << "policy,t,avg_cum_regret\n";
  for (const auto& c : curves) {
    for (std::size_t t = 0; t < c.avg_cum_regret.size(); ++t) out << c.policy << ',' << t << ',' << c.avg_cum_regret[t] << '\n';
  }
}

}  // namespace plmp
