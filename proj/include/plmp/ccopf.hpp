#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plmp/cone_qp.hpp"
#include "plmp/netmodel.hpp"
#include "plmp/pce.hpp"

namespace plmp {

/// Dispatchable generator at a non-slack bus. Costs follow the quadratic
/// structure c p_0 + C1 p_0^2 + C2 sum_{k>=1} p_k^2 on its PC coefficients.
struct FlexGen {
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  std::optional<double> q_min;  ///< defaults to -|p_max|
  std::optional<double> q_max;  ///< defaults to +|p_max|
  double c = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;

  double reactive_min() const;
  double reactive_max() const;

  friend bool operator==(const FlexGen&, const FlexGen&) = default;
};

/// Cost of the power imported through the slack bus (active power only).
struct SlackCost {
  double c = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;

  friend bool operator==(const SlackCost&, const SlackCost&) = default;
};

enum class InjectionKind { kLoad, kPv };

/// Uncontrollable prosumption affine in one germ coordinate:
///   value_t(xi) = mean_t + scale_t * (xi_j - E[xi_j]).
/// Loads consume, PV produces. Loads draw reactive power at `power_factor`
/// (lagging); PV runs at unity power factor.
struct UncertainInjection {
  int bus = 0;
  InjectionKind kind = InjectionKind::kLoad;
  std::vector<double> mean;
  int germ_index = 0;
  std::vector<double> scale;
  double power_factor = 0.95;

  friend bool operator==(const UncertainInjection&, const UncertainInjection&) = default;
};

struct CcOpfProblem {
  std::shared_ptr<const RadialNetwork> network;
  std::shared_ptr<const PceBasis> basis;
  SlackCost slack;
  std::vector<FlexGen> generators;
  std::vector<UncertainInjection> injections;
  double epsilon = 0.05;
  GammaMode gamma_mode = GammaMode::kGaussian;
  int horizon = 24;
};

/// Throws ValidationError on dangling bus references or malformed profiles.
void validate_problem(const CcOpfProblem& problem);

/// Net uncontrollable injections (PV minus load) as PC coefficients, N x K.
struct FixedInjections {
  Eigen::MatrixXd p;
  Eigen::MatrixXd q;
};
FixedInjections fixed_injections(const CcOpfProblem& problem, int t);

/// One chance constraint, i.e. one second-order cone of dimension K:
///   (margin + sign * quantity_0, tail_scale * quantity_1, ..., tail_scale * quantity_{K-1})
enum class ConstraintKind {
  kFlowPUpper,
  kFlowPLower,
  kFlowQUpper,
  kFlowQLower,
  kVoltageUpper,
  kVoltageLower,
  kGenPUpper,
  kGenPLower,
  kGenQUpper,
  kGenQLower,
};
std::string to_string(ConstraintKind kind);

struct ConstraintSpec {
  ConstraintKind kind;
  int index;          ///< branch index, bus id, or generator index
  double margin;      ///< constant term of the cone head
  double sign;        ///< coefficient of quantity_0 in the head
  double tail_scale;  ///< sqrt(2) Gamma for flows, Gamma otherwise
};

/// Reduced-space conic program for one timestep. The lindistflow equalities
/// are eliminated analytically; the decision variables are the PC
/// coefficients of the dispatchable generator setpoints, laid out as
/// x = [k = 0: (p of variable gens, q of variable gens), k = 1: ..., ...].
struct AssembledProgram {
  int t = 0;
  int K = 0;
  ConeQp qp;
  double objective_constant = 0.0;
  std::vector<ConstraintSpec> constraints;
  FixedInjections fixed;
  std::vector<int> p_var;  ///< per generator: slot within a k-block, or -1 when fixed
  std::vector<int> q_var;
  int block_size = 0;      ///< variables per PC coefficient
};

AssembledProgram assemble(const CcOpfProblem& problem, int t);

struct TimestepSolution {
  int t = 0;
  ConeQpStatus status = ConeQpStatus::kNumericalFailure;
  std::string message;
  double objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double equality_residual = 0.0;  ///< max lindistflow equality residual
  double solve_seconds = 0.0;      ///< interior-point time only
  int iterations = 0;

  // N x K unless noted (rows: non-slack bus columns or branch indices).
  Eigen::MatrixXd p, q;    ///< nodal injections
  Eigen::MatrixXd P, Q;    ///< branch flows
  Eigen::MatrixXd V;       ///< squared voltages
  Eigen::VectorXd P0, Q0;  ///< slack import, length K
  Eigen::MatrixXd pg, qg;  ///< generator setpoints, G x K
  Eigen::MatrixXd lambda;  ///< active-balance duals
  Eigen::MatrixXd mu;      ///< reactive-balance duals
};

struct CcOpfSolution {
  std::vector<TimestepSolution> steps;
  double objective = 0.0;
  double solver_seconds = 0.0;
};

struct SolveOptions {
  ConeQpOptions qp;
  int threads = 1;
};

/// Solves one timestep; never throws for infeasibility (see `status`).
TimestepSolution solve_timestep(const CcOpfProblem& problem, int t, const SolveOptions& options = {});

/// Solves the whole horizon. Throws InfeasibleTimestep for the first
/// infeasible period and SolverFailure on numerical trouble.
CcOpfSolution solve(const CcOpfProblem& problem, const SolveOptions& options = {});

struct ConstraintStatus {
  ConstraintSpec spec;
  double slack = 0.0;           ///< head - ||tail||
  double margin_at_zero = 0.0;  ///< slack when every injection is zero
  bool binding = false;
};

struct TimestepReport {
  int t = 0;
  std::vector<ConstraintStatus> constraints;
  std::vector<ConstraintStatus> binding() const;
};

/// Slack of every chance constraint, flagging those within `tol` of the boundary.
std::vector<TimestepReport> feasibility_report(const CcOpfSolution& solution, const CcOpfProblem& problem,
                                               double tol = 1e-6);

}  // namespace plmp
