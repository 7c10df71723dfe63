#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "plmp/error.hpp"

namespace plmp {

/// Battery of a flexible prosumer. Positive power is discharge (sold to the grid).
struct StorageSpec {
  double E_cap = 1.0;   ///< energy capacity [p.u. h]
  double P_cap = 0.25;  ///< power capacity [p.u.]
  double E_init = 0.5;
  double E_end = 0.5;
  double dt = 1.0;      ///< market period [h]

  /// C-rating 0.25, half-full at both ends of the horizon.
  static StorageSpec with_capacity(double E_cap);

  friend bool operator==(const StorageSpec&, const StorageSpec&) = default;
};

void validate_storage(const StorageSpec& spec);

/// Realized delta-prices at the agent's bus, one per period.
using PricePath = std::vector<double>;

struct AgentRun {
  std::string policy;
  int path_id = 0;
  std::vector<double> p;        ///< setpoint per period
  std::vector<double> soc;      ///< energy before each period, plus the final level (H + 1 entries)
  std::vector<double> revenue;  ///< p_t pi_t dt per period
  double profit = 0.0;
};

/// Greedy arbitrage on the realized delta-price with a two-step return to
/// E_end. Throws InfeasibleBoundary if the final step cannot restore E_end.
AgentRun rule_based_policy(const StorageSpec& spec, const PricePath& path);

struct DpOptions {
  int levels = 101;
  double kappa = 1e6;

  friend bool operator==(const DpOptions&, const DpOptions&) = default;
};

/// Sign-conditional statistics of the delta-price and the resulting value
/// tables V[t][level], t = 0..H (V[H] is the terminal value).
struct DpTables {
  StorageSpec spec;
  int levels = 0;
  int max_move = 0;  ///< grid steps reachable in one period
  int end_level = 0;
  double kappa = 0.0;
  std::vector<double> q;       ///< Pr(pi > 0)
  std::vector<double> v_up;    ///< E[pi | pi > 0]
  std::vector<double> v_down;  ///< E[pi | pi <= 0]
  std::vector<bool> empty_up;  ///< conditional set was empty (v_up set to 0)
  std::vector<bool> empty_down;
  std::vector<std::vector<double>> V;

  int horizon() const { return static_cast<int>(q.size()); }
  double energy(int level) const;
  /// Power that moves the battery from one level to another within a period.
  double power(int from, int to) const;
};

/// Tables from per-period samples of the delta-price.
DpTables build_dp_tables(const StorageSpec& spec, const std::vector<std::vector<double>>& samples,
                         const DpOptions& options = {});

/// Tables from given statistics; q in [0, 1].
DpTables build_dp_tables_from_stats(const StorageSpec& spec, const std::vector<double>& q,
                                    const std::vector<double>& v_up, const std::vector<double>& v_down,
                                    const DpOptions& options = {});

/// Receding-horizon policy: at each period maximizes realized revenue plus the
/// expected continuation value. Ties go to the smallest |p|.
AgentRun dp_policy(const DpTables& tables, const PricePath& path);

/// Perfect-foresight optimum on the same grid.
AgentRun hindsight_policy(const StorageSpec& spec, const PricePath& path, const DpOptions& options = {});

struct RegretCurve {
  std::string policy;
  std::vector<double> avg_cum_regret;  ///< per period
};

/// Mean over paths of cumulative hindsight revenue minus policy revenue.
/// Throws PathMismatch unless every policy was run on the hindsight paths.
RegretCurve regret_curve(const std::vector<AgentRun>& hindsight, const std::vector<AgentRun>& runs);

// CSV emitters.
void write_agent_runs(std::ostream& out, const std::vector<AgentRun>& runs);
void write_regret(std::ostream& out, const std::vector<RegretCurve>& curves);

}  // namespace plmp
