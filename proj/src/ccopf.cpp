#include "plmp/ccopf.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace plmp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double reactive_ratio(double power_factor) {
  return std::sqrt(std::max(0.0, 1.0 - power_factor * power_factor)) / power_factor;
}

// PC coefficients of the quantity a constraint bounds, read from a solution.
VectorXd quantity(const TimestepSolution& sol, const ConstraintSpec& spec) {
  switch (spec.kind) {
    case ConstraintKind::kFlowPUpper:
    case ConstraintKind::kFlowPLower: return sol.P.row(spec.index).transpose();
    case ConstraintKind::kFlowQUpper:
    case ConstraintKind::kFlowQLower: return sol.Q.row(spec.index).transpose();
    case ConstraintKind::kVoltageUpper:
    case ConstraintKind::kVoltageLower:
      return sol.V.row(RadialNetwork::column_of(spec.index)).transpose();
    case ConstraintKind::kGenPUpper:
    case ConstraintKind::kGenPLower: return sol.pg.row(spec.index).transpose();
    case ConstraintKind::kGenQUpper:
    case ConstraintKind::kGenQLower: return sol.qg.row(spec.index).transpose();
  }
  return {};
}

double cone_slack(const ConstraintSpec& spec, const VectorXd& values) {
  const double head = spec.margin + spec.sign * values(0);
  const double tail = values.size() > 1 ? std::abs(spec.tail_scale) * values.tail(values.size() - 1).norm() : 0.0;
  return head - tail;
}

std::vector<ConstraintSpec> build_constraints(const CcOpfProblem& prob, const std::vector<int>& p_var,
                                              const std::vector<int>& q_var, double gam) {
  const RadialNetwork& net = *prob.network;
  const double flow_tail = std::sqrt(2.0) * gam;
  std::vector<ConstraintSpec> specs;
  for (int l = 0; l < net.size(); ++l) {
    const double f = net.branch(l).f_max;
    specs.push_back({ConstraintKind::kFlowPUpper, l, f, -1.0, flow_tail});
    specs.push_back({ConstraintKind::kFlowPLower, l, f, 1.0, flow_tail});
    specs.push_back({ConstraintKind::kFlowQUpper, l, f, -1.0, flow_tail});
    specs.push_back({ConstraintKind::kFlowQLower, l, f, 1.0, flow_tail});
  }
  for (int bus = 1; bus < net.num_buses(); ++bus) {
    specs.push_back({ConstraintKind::kVoltageUpper, bus, net.bus(bus).v_max_sq, -1.0, gam});
    specs.push_back({ConstraintKind::kVoltageLower, bus, -net.bus(bus).v_min_sq, 1.0, gam});
  }
  for (std::size_t g = 0; g < prob.generators.size(); ++g) {
    const FlexGen& gen = prob.generators[g];
    const int gi = static_cast<int>(g);
    if (p_var[g] >= 0) {
      specs.push_back({ConstraintKind::kGenPUpper, gi, gen.p_max, -1.0, gam});
      specs.push_back({ConstraintKind::kGenPLower, gi, -gen.p_min, 1.0, gam});
    }
    if (q_var[g] >= 0) {
      specs.push_back({ConstraintKind::kGenQUpper, gi, gen.reactive_max(), -1.0, gam});
      specs.push_back({ConstraintKind::kGenQLower, gi, -gen.reactive_min(), 1.0, gam});
    }
  }
  return specs;
}

bool fixed_range(double lo, double hi) { return hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)); }

}  // namespace

double FlexGen::reactive_min() const { return q_min.value_or(-std::abs(p_max)); }
double FlexGen::reactive_max() const { return q_max.value_or(std::abs(p_max)); }

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kFlowPUpper: return "flow_p_upper";
    case ConstraintKind::kFlowPLower: return "flow_p_lower";
    case ConstraintKind::kFlowQUpper: return "flow_q_upper";
    case ConstraintKind::kFlowQLower: return "flow_q_lower";
    case ConstraintKind::kVoltageUpper: return "voltage_upper";
    case ConstraintKind::kVoltageLower: return "voltage_lower";
    case ConstraintKind::kGenPUpper: return "gen_p_upper";
    case ConstraintKind::kGenPLower: return "gen_p_lower";
    case ConstraintKind::kGenQUpper: return "gen_q_upper";
    case ConstraintKind::kGenQLower: return "gen_q_lower";
  }
  return "unknown";
}

void validate_problem(const CcOpfProblem& prob) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kValidationError, msg); };
  if (!prob.network || !prob.basis) fail("problem needs a network and a PC basis");
  if (prob.horizon < 1) fail("horizon must be at least 1");
  const int num_buses = prob.network->num_buses();
  const int d = prob.basis->dimension();
  auto check_bus = [&](int bus, const std::string& what) {
    if (bus < 1 || bus >= num_buses) {
      fail(what + " references bus " + std::to_string(bus) + ", which is not a non-slack bus of the network");
    }
  };
  for (const auto& inj : prob.injections) {
    check_bus(inj.bus, "injection");
    if (static_cast<int>(inj.mean.size()) != prob.horizon || static_cast<int>(inj.scale.size()) != prob.horizon) {
      fail("injection at bus " + std::to_string(inj.bus) + " needs mean and scale profiles of length " +
           std::to_string(prob.horizon));
    }
    if (inj.germ_index < 0 || inj.germ_index >= d) {
      fail("injection at bus " + std::to_string(inj.bus) + " cites germ index " + std::to_string(inj.germ_index));
    }
    if (!(inj.power_factor > 0.0 && inj.power_factor <= 1.0)) {
      fail("injection at bus " + std::to_string(inj.bus) + " has power factor outside (0, 1]");
    }
    for (int t = 0; t < prob.horizon; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      if (inj.kind == InjectionKind::kPv && inj.scale[ut] < 0.0) {
        fail("PV at bus " + std::to_string(inj.bus) + " has negative scale");
      }
      if (inj.kind == InjectionKind::kLoad && inj.mean[ut] < 0.0) {
        fail("load at bus " + std::to_string(inj.bus) + " has negative mean");
      }
    }
  }
  for (const auto& gen : prob.generators) {
    check_bus(gen.bus, "generator");
    if (gen.p_min > gen.p_max) fail("generator at bus " + std::to_string(gen.bus) + " has p_min > p_max");
    if (gen.reactive_min() > gen.reactive_max()) {
      fail("generator at bus " + std::to_string(gen.bus) + " has q_min > q_max");
    }
    if (gen.C1 < 0.0 || gen.C2 < 0.0) fail("generator at bus " + std::to_string(gen.bus) + " has a negative quadratic cost");
  }
  if (prob.slack.C1 < 0.0 || prob.slack.C2 < 0.0) fail("slack has a negative quadratic cost");
  gamma(prob.epsilon, prob.gamma_mode);
}

FixedInjections fixed_injections(const CcOpfProblem& prob, int t) {
  const int N = prob.network->size();
  const int K = prob.basis->size();
  FixedInjections out{MatrixXd::Zero(N, K), MatrixXd::Zero(N, K)};
  for (const auto& inj : prob.injections) {
    const auto ut = static_cast<std::size_t>(t);
    const GermComponent& comp = prob.basis->germ().components[static_cast<std::size_t>(inj.germ_index)];
    const double offset = inj.mean[ut] - inj.scale[ut] * comp.mean();
    const PceSeries s = expand_affine_input(*prob.basis, inj.germ_index, offset, inj.scale[ut]);
    const int col = RadialNetwork::column_of(inj.bus);
    if (inj.kind == InjectionKind::kLoad) {
      out.p.row(col) -= s.coefficients.transpose();
      out.q.row(col) -= reactive_ratio(inj.power_factor) * s.coefficients.transpose();
    } else {
      out.p.row(col) += s.coefficients.transpose();
    }
  }
  return out;
}

AssembledProgram assemble(const CcOpfProblem& prob, int t) {
  if (!prob.network || !prob.basis) {
    throw Error(ErrorCode::kInconsistentDimensions, "problem needs a network and a PC basis");
  }
  if (t < 0 || t >= prob.horizon) {
    throw Error(ErrorCode::kInconsistentDimensions, "timestep " + std::to_string(t) + " outside horizon");
  }
  for (const auto& inj : prob.injections) {
    if (static_cast<int>(inj.mean.size()) != prob.horizon || static_cast<int>(inj.scale.size()) != prob.horizon) {
      throw Error(ErrorCode::kInconsistentDimensions, "injection profile length differs from horizon");
    }
  }
  const RadialNetwork& net = *prob.network;
  const int N = net.size();
  const int K = prob.basis->size();
  const double gam = gamma(prob.epsilon, prob.gamma_mode);

  AssembledProgram out;
  out.t = t;
  out.K = K;
  out.fixed = fixed_injections(prob, t);

  // Variable slots per PC coefficient; fixed setpoints fold into the base injection.
  const std::size_t G = prob.generators.size();
  out.p_var.assign(G, -1);
  out.q_var.assign(G, -1);
  MatrixXd p_base = out.fixed.p;
  MatrixXd q_base = out.fixed.q;
  double constant = 0.0;
  int slot = 0;
  for (std::size_t g = 0; g < G; ++g) {
    const FlexGen& gen = prob.generators[g];
    const int col = RadialNetwork::column_of(gen.bus);
    if (fixed_range(gen.p_min, gen.p_max)) {
      p_base(col, 0) += gen.p_min;
      constant += gen.c * gen.p_min + gen.C1 * gen.p_min * gen.p_min;
    } else {
      out.p_var[g] = slot++;
    }
  }
  for (std::size_t g = 0; g < G; ++g) {
    const FlexGen& gen = prob.generators[g];
    if (fixed_range(gen.reactive_min(), gen.reactive_max())) {
      q_base(RadialNetwork::column_of(gen.bus), 0) += gen.reactive_min();
    } else {
      out.q_var[g] = slot++;
    }
  }
  const int block = slot;
  out.block_size = block;

  MatrixXd Cp = MatrixXd::Zero(N, block);
  MatrixXd Cq = MatrixXd::Zero(N, block);
  for (std::size_t g = 0; g < G; ++g) {
    const int col = RadialNetwork::column_of(prob.generators[g].bus);
    if (out.p_var[g] >= 0) Cp(col, out.p_var[g]) = 1.0;
    if (out.q_var[g] >= 0) Cq(col, out.q_var[g]) = 1.0;
  }
  const MatrixXd Ft = net.F().transpose();
  const MatrixXd sens_P = Ft * Cp;
  const MatrixXd sens_Q = Ft * Cq;
  const MatrixXd sens_V = 2.0 * net.R() * Cp + 2.0 * net.X() * Cq;
  const MatrixXd base_P = Ft * p_base;
  const MatrixXd base_Q = Ft * q_base;
  MatrixXd base_V = 2.0 * net.R() * p_base + 2.0 * net.X() * q_base;
  base_V.col(0).array() += net.v0();

  out.constraints = build_constraints(prob, out.p_var, out.q_var, gam);
  const int n = K * block;
  const int m = static_cast<int>(out.constraints.size()) * K;
  ConeQp& qp = out.qp;
  qp.P = MatrixXd::Zero(n, n);
  qp.q = VectorXd::Zero(n);
  qp.G = MatrixXd::Zero(m, n);
  qp.h = VectorXd::Zero(m);
  qp.A = MatrixXd::Zero(0, n);
  qp.b = VectorXd::Zero(0);
  qp.cone_dims.assign(out.constraints.size(), K);

  for (std::size_t j = 0; j < out.constraints.size(); ++j) {
    const ConstraintSpec& spec = out.constraints[j];
    for (int k = 0; k < K; ++k) {
      const int row = static_cast<int>(j) * K + k;
      const double coef = k == 0 ? spec.sign : spec.tail_scale;
      const double head = k == 0 ? spec.margin : 0.0;
      double value = 0.0;
      Eigen::RowVectorXd sens = Eigen::RowVectorXd::Zero(block);
      switch (spec.kind) {
        case ConstraintKind::kFlowPUpper:
        case ConstraintKind::kFlowPLower:
          value = base_P(spec.index, k);
          sens = sens_P.row(spec.index);
          break;
        case ConstraintKind::kFlowQUpper:
        case ConstraintKind::kFlowQLower:
          value = base_Q(spec.index, k);
          sens = sens_Q.row(spec.index);
          break;
        case ConstraintKind::kVoltageUpper:
        case ConstraintKind::kVoltageLower: {
          const int col = RadialNetwork::column_of(spec.index);
          value = base_V(col, k);
          sens = sens_V.row(col);
          break;
        }
        case ConstraintKind::kGenPUpper:
        case ConstraintKind::kGenPLower:
          sens(out.p_var[static_cast<std::size_t>(spec.index)]) = 1.0;
          break;
        case ConstraintKind::kGenQUpper:
        case ConstraintKind::kGenQLower:
          sens(out.q_var[static_cast<std::size_t>(spec.index)]) = 1.0;
          break;
      }
      qp.h(row) = head + coef * value;
      qp.G.block(row, k * block, 1, block) = -coef * sens;
    }
  }

  // Objective: generator and slack costs on the PC coefficients.
  const SlackCost& sc = prob.slack;
  for (int k = 0; k < K; ++k) {
    const int o = k * block;
    for (std::size_t g = 0; g < G; ++g) {
      const int v = out.p_var[g];
      if (v < 0) continue;
      const FlexGen& gen = prob.generators[g];
      qp.P(o + v, o + v) += 2.0 * (k == 0 ? gen.C1 : gen.C2);
      if (k == 0) qp.q(o + v) += gen.c;
    }
    // P0_k = b_k - 1^T (variable p setpoints)
    const double b_k = -p_base.col(k).sum();
    const double w = k == 0 ? sc.C1 : sc.C2;
    Eigen::VectorXd ones = Eigen::VectorXd::Zero(block);
    for (std::size_t g = 0; g < G; ++g) {
      if (out.p_var[g] >= 0) ones(out.p_var[g]) = 1.0;
    }
    qp.P.block(o, o, block, block) += 2.0 * w * ones * ones.transpose();
    qp.q.segment(o, block) += -2.0 * w * b_k * ones;
    constant += w * b_k * b_k;
    if (k == 0) {
      qp.q.segment(o, block) += -sc.c * ones;
      constant += sc.c * b_k;
    }
  }
  out.objective_constant = constant;
  return out;
}

TimestepSolution solve_timestep(const CcOpfProblem& prob, int t, const SolveOptions& options) {
  const AssembledProgram prog = assemble(prob, t);
  const auto start = std::chrono::steady_clock::now();
  const ConeQpResult r = solve_cone_qp(prog.qp, options.qp);
  const auto stop = std::chrono::steady_clock::now();

  const RadialNetwork& net = *prob.network;
  const int N = net.size();
  const int K = prog.K;
  const int block = prog.block_size;
  const std::size_t G = prob.generators.size();

  TimestepSolution sol;
  sol.t = t;
  sol.status = r.status;
  sol.message = r.message;
  sol.iterations = r.iterations;
  sol.solve_seconds = std::chrono::duration<double>(stop - start).count();
  sol.relative_gap = r.relative_gap;
  sol.primal_residual = r.primal_residual;
  sol.dual_residual = r.dual_residual;
  if (r.status != ConeQpStatus::kOptimal) return sol;

  sol.pg = MatrixXd::Zero(static_cast<int>(G), K);
  sol.qg = MatrixXd::Zero(static_cast<int>(G), K);
  sol.p = prog.fixed.p;
  sol.q = prog.fixed.q;
  for (std::size_t g = 0; g < G; ++g) {
    const FlexGen& gen = prob.generators[g];
    const int gi = static_cast<int>(g);
    for (int k = 0; k < K; ++k) {
      sol.pg(gi, k) = prog.p_var[g] >= 0 ? r.x(k * block + prog.p_var[g]) : (k == 0 ? gen.p_min : 0.0);
      sol.qg(gi, k) = prog.q_var[g] >= 0 ? r.x(k * block + prog.q_var[g]) : (k == 0 ? gen.reactive_min() : 0.0);
    }
    const int col = RadialNetwork::column_of(gen.bus);
    sol.p.row(col) += sol.pg.row(gi);
    sol.q.row(col) += sol.qg.row(gi);
  }
  sol.P = net.F().transpose() * sol.p;
  sol.Q = net.F().transpose() * sol.q;
  sol.V = 2.0 * net.R() * sol.p + 2.0 * net.X() * sol.q;
  sol.V.col(0).array() += net.v0();
  sol.P0 = -sol.p.colwise().sum().transpose();
  sol.Q0 = -sol.q.colwise().sum().transpose();

  // Sensitivity of the optimal cost to nodal injections, from the cone duals:
  // lambda_k = d J* / d(demand_k) = G_P^T z + slack marginal cost.
  MatrixXd uP = MatrixXd::Zero(N, K), uQ = MatrixXd::Zero(N, K), uV = MatrixXd::Zero(N, K);
  for (std::size_t j = 0; j < prog.constraints.size(); ++j) {
    const ConstraintSpec& spec = prog.constraints[j];
    for (int k = 0; k < K; ++k) {
      const double w = r.z(static_cast<int>(j) * K + k) * (k == 0 ? spec.sign : spec.tail_scale);
      switch (spec.kind) {
        case ConstraintKind::kFlowPUpper:
        case ConstraintKind::kFlowPLower: uP(spec.index, k) += w; break;
        case ConstraintKind::kFlowQUpper:
        case ConstraintKind::kFlowQLower: uQ(spec.index, k) += w; break;
        case ConstraintKind::kVoltageUpper:
        case ConstraintKind::kVoltageLower: uV(RadialNetwork::column_of(spec.index), k) += w; break;
        default: break;
      }
    }
  }
  sol.lambda = net.F() * uP + 2.0 * net.R() * uV;
  sol.mu = net.F() * uQ + 2.0 * net.X() * uV;
  for (int k = 0; k < K; ++k) {
    const double marginal = k == 0 ? prob.slack.c + 2.0 * prob.slack.C1 * sol.P0(0) : 2.0 * prob.slack.C2 * sol.P0(k);
    sol.lambda.col(k).array() += marginal;
  }

  sol.objective = r.primal_objective + prog.objective_constant;
  sol.dual_objective = r.dual_objective + prog.objective_constant;
  sol.relative_gap = std::abs(sol.objective - sol.dual_objective) / std::max(1.0, std::abs(sol.objective));
  const double balance_p = (net.A().transpose() * sol.P - sol.p).cwiseAbs().maxCoeff();
  const double balance_q = (net.A().transpose() * sol.Q - sol.q).cwiseAbs().maxCoeff();
  sol.equality_residual = std::max({balance_p, balance_q, r.primal_residual});
  return sol;
}

CcOpfSolution solve(const CcOpfProblem& prob, const SolveOptions& options) {
  validate_problem(prob);
  CcOpfSolution out;
  out.steps.resize(static_cast<std::size_t>(prob.horizon));
  const int threads = std::max(1, std::min(options.threads, prob.horizon));
  if (threads == 1) {
    for (int t = 0; t < prob.horizon; ++t) out.steps[static_cast<std::size_t>(t)] = solve_timestep(prob, t, options);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int t = next++; t < prob.horizon; t = next++) {
            out.steps[static_cast<std::size_t>(t)] = solve_timestep(prob, t, options);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (const auto& step : out.steps) {
    if (step.status == ConeQpStatus::kInfeasible) throw InfeasibleTimestep(step.t, step.message);
    if (step.status != ConeQpStatus::kOptimal) {
      throw Error(ErrorCode::kSolverFailure, "timestep " + std::to_string(step.t) + ": " + step.message);
    }
    out.objective += step.objective;
    out.solver_seconds += step.solve_seconds;
  }
  return out;
}

std::vector<ConstraintStatus> TimestepReport::binding() const {
  std::vector<ConstraintStatus> out;
  for (const auto& c : constraints) {
    if (c.binding) out.push_back(c);
  }
  return out;
}

std::vector<TimestepReport> feasibility_report(const CcOpfSolution& solution, const CcOpfProblem& prob,
                                               double tol) {
  std::vector<int> p_var(prob.generators.size()), q_var(prob.generators.size());
  for (std::size_t g = 0; g < prob.generators.size(); ++g) {
    const FlexGen& gen = prob.generators[g];
    p_var[g] = fixed_range(gen.p_min, gen.p_max) ? -1 : 0;
    q_var[g] = fixed_range(gen.reactive_min(), gen.reactive_max()) ? -1 : 0;
  }
  const double gam = gamma(prob.epsilon, prob.gamma_mode);
  const auto specs = build_constraints(prob, p_var, q_var, gam);
  const double v0 = prob.network->v0();

  std::vector<TimestepReport> out;
  for (const auto& step : solution.steps) {
    TimestepReport rep;
    rep.t = step.t;
    if (step.status != ConeQpStatus::kOptimal) {
      out.push_back(std::move(rep));
      continue;
    }
    for (const auto& spec : specs) {
      ConstraintStatus cs;
      cs.spec = spec;
      cs.slack = cone_slack(spec, quantity(step, spec));
      const bool voltage = spec.kind == ConstraintKind::kVoltageUpper || spec.kind == ConstraintKind::kVoltageLower;
      cs.margin_at_zero = spec.margin + spec.sign * (voltage ? v0 : 0.0);
      cs.binding = cs.slack < tol * std::max(1.0, std::abs(spec.margin));
      rep.constraints.push_back(cs);
    }
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace plmp
