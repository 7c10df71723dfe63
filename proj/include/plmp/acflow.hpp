#pragma once

#include <complex>
#include <cstdint>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "plmp/ccopf.hpp"
#include "plmp/market.hpp"
#include "plmp/netmodel.hpp"

namespace plmp {

using Complex = std::complex<double>;

struct AcState {
  Eigen::VectorXcd V;  ///< bus voltages, slack included (index = bus id)
  Eigen::VectorXcd I;  ///< branch currents, parent -> child
  double losses = 0.0; ///< active losses sum r |I|^2
  double reactive_losses = 0.0;
  double mismatch = 0.0;
  int iterations = 0;
  bool converged = false;

  Eigen::VectorXd squared_magnitudes() const;  ///< |V|^2 of the non-slack buses, by column
};

struct SweepOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
};

/// Power injected at each non-slack bus by the state, V_n conj(I_n).
Eigen::VectorXcd injected_power(const RadialNetwork& network, const AcState& state);

/// Backward-forward sweep from a flat start at |V_0| = sqrt(v0). Injections
/// are constant power, positive for generation, one per non-slack bus.
/// Throws NotConverged.
AcState backward_forward_sweep(const RadialNetwork& network, const Eigen::VectorXcd& injections, double v0,
                               const SweepOptions& options = {});

/// Agent setpoints added on top of the cleared injections: p(path, t).
struct AgentOverlay {
  int bus = 0;
  Eigen::MatrixXd p;
};

struct ValidationOptions {
  std::vector<int> timesteps;  ///< empty means the whole horizon
  bool keep_records = true;
  SweepOptions sweep;
};

struct VoltageRecord {
  int t = 0;
  int bus = 0;
  int sample = 0;
  double v_mag = 0.0;
  bool violated = false;
};

struct ValidationStats {
  int samples = 0;
  std::vector<int> timesteps;
  /// Per timestep (row, in `timesteps` order) and bus column: violation counts over converged samples.
  Eigen::MatrixXi upper_violations;
  Eigen::MatrixXi lower_violations;
  std::vector<int> converged;      ///< per timestep
  std::vector<int> not_converged;  ///< per timestep
  std::vector<VoltageRecord> records;

  /// Empirical rate of upper- or lower-bound violation at (t, bus).
  double upper_rate(int t, int bus) const;
  double lower_rate(int t, int bus) const;
  int row_of(int t) const;
};

/// Realizes every germ path through the cleared expansions (nodal
/// injections of the market solution), adds agent setpoints, and runs the AC
/// flow. Non-converged samples are counted, not fatal.
ValidationStats validate_solution(const MarketSolution& market, const CcOpfProblem& problem,
                                  const std::vector<Eigen::MatrixXd>& germ_paths,
                                  const std::vector<AgentOverlay>& overlays = {},
                                  const ValidationOptions& options = {});

void write_ac_validation(std::ostream& out, const ValidationStats& stats);

}  // namespace plmp
