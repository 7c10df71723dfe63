#include "plmp/acflow.hpp"

#include <cmath>
#include <iomanip>
#include <span>

namespace plmp {

namespace {

Complex impedance(const Branch& b) { return {b.r, b.x}; }

// Bus voltages from branch currents, walking parent -> child.
void forward(const RadialNetwork& net, const Eigen::VectorXcd& I, Eigen::VectorXcd& V) {
  for (int bus : net.bfs_order()) {
    if (bus == 0) continue;
    const int l = net.parent_branch(bus);
    const Branch& b = net.branch(l);
    V(bus) = V(b.from_bus) - impedance(b) * I(l);
  }
}

// Branch currents from the voltages through the impedances.
Eigen::VectorXcd branch_currents(const RadialNetwork& net, const Eigen::VectorXcd& V) {
  Eigen::VectorXcd I(net.size());
  for (int l = 0; l < net.size(); ++l) {
    const Branch& b = net.branch(l);
    I(l) = (V(b.from_bus) - V(b.to_bus)) / impedance(b);
  }
  return I;
}

}  // namespace

Eigen::VectorXd AcState::squared_magnitudes() const {
  return V.tail(V.size() - 1).cwiseAbs2();
}

Eigen::VectorXcd injected_power(const RadialNetwork& net, const AcState& state) {
  const Eigen::VectorXcd I = branch_currents(net, state.V);
  Eigen::VectorXcd inj_current = Eigen::VectorXcd::Zero(net.num_buses());
  for (int l = 0; l < net.size(); ++l) {
    const Branch& b = net.branch(l);
    inj_current(b.from_bus) += I(l);
    inj_current(b.to_bus) -= I(l);
  }
  Eigen::VectorXcd s(net.size());
  for (int bus = 1; bus < net.num_buses(); ++bus) {
    s(bus - 1) = state.V(bus) * std::conj(inj_current(bus));
  }
  return s;
}

AcState backward_forward_sweep(const RadialNetwork& net, const Eigen::VectorXcd& injections, double v0,
                               const SweepOptions& options) {
  if (injections.size() != net.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "expected " + std::to_string(net.size()) + " injections");
  }
  if (!(v0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "slack voltage must be positive");
  for (const auto& b : net.branches()) {
    if (std::abs(impedance(b)) == 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "branch " + std::to_string(b.id) + " has zero impedance");
    }
  }
  const int B = net.num_buses();
  AcState st;
  st.V = Eigen::VectorXcd::Constant(B, Complex(std::sqrt(v0), 0.0));
  st.I = Eigen::VectorXcd::Zero(net.size());

  // Children before parents for the backward pass.
  const std::vector<int>& order = net.bfs_order();
  for (int it = 1; it <= options.max_iterations; ++it) {
    st.iterations = it;
    st.mismatch = (injected_power(net, st) - injections).cwiseAbs().maxCoeff();
    if (st.mismatch < options.tolerance) {
      st.converged = true;
      break;
    }
    // Backward: load currents accumulated toward the slack.
    Eigen::VectorXcd subtree = Eigen::VectorXcd::Zero(B);
    for (int bus = 1; bus < B; ++bus) subtree(bus) = -std::conj(injections(bus - 1) / st.V(bus));
    for (auto rit = order.rbegin(); rit != order.rend(); ++rit) {
      const int bus = *rit;
      if (bus == 0) continue;
      const int l = net.parent_branch(bus);
      st.I(l) = subtree(bus);
      subtree(net.branch(l).from_bus) += subtree(bus);
    }
    forward(net, st.I, st.V);
  }
  st.I = branch_currents(net, st.V);
  st.losses = 0.0;
  st.reactive_losses = 0.0;
  for (int l = 0; l < net.size(); ++l) {
    st.losses += net.branch(l).r * std::norm(st.I(l));
    st.reactive_losses += net.branch(l).x * std::norm(st.I(l));
  }
  if (!st.converged) {
    throw Error(ErrorCode::kNotConverged, "sweep stopped after " + std::to_string(st.iterations) +
                                              " iterations with mismatch " + std::to_string(st.mismatch));
  }
  return st;
}

int ValidationStats::row_of(int t) const {
  for (std::size_t i = 0; i < timesteps.size(); ++i) {
    if (timesteps[i] == t) return static_cast<int>(i);
  }
  throw Error(ErrorCode::kIndexOutOfRange, "timestep " + std::to_string(t) + " was not validated");
}

double ValidationStats::upper_rate(int t, int bus) const {
  const int r = row_of(t);
  const int n = converged[static_cast<std::size_t>(r)];
  return n ? static_cast<double>(upper_violations(r, bus - 1)) / n : 0.0;
}

double ValidationStats::lower_rate(int t, int bus) const {
  const int r = row_of(t);
  const int n = converged[static_cast<std::size_t>(r)];
  return n ? static_cast<double>(lower_violations(r, bus - 1)) / n : 0.0;
}

ValidationStats validate_solution(const MarketSolution& market, const CcOpfProblem& problem,
                                  const std::vector<Eigen::MatrixXd>& germ_paths,
                                  const std::vector<AgentOverlay>& overlays, const ValidationOptions& options) {
  const RadialNetwork& net = *problem.network;
  const int N = net.size();
  const int H = market.horizon();
  const int n = static_cast<int>(germ_paths.size());
  ValidationStats stats;
  stats.samples = n;
  stats.timesteps = options.timesteps;
  if (stats.timesteps.empty()) {
    for (int t = 0; t < H; ++t) stats.timesteps.push_back(t);
  }
  for (int t : stats.timesteps) {
    if (t < 0 || t >= H) throw Error(ErrorCode::kIndexOutOfRange, "timestep " + std::to_string(t) + " outside horizon");
  }
  for (const auto& path : germ_paths) {
    if (path.rows() < H || path.cols() != market.basis().dimension()) {
      throw Error(ErrorCode::kDimensionMismatch, "germ path has the wrong shape");
    }
  }
  for (const auto& ov : overlays) {
    if (ov.bus < 1 || ov.bus > N || ov.p.rows() != n || ov.p.cols() < H) {
      throw Error(ErrorCode::kDimensionMismatch, "agent overlay at bus " + std::to_string(ov.bus) + " has the wrong shape");
    }
  }
  const int T = static_cast<int>(stats.timesteps.size());
  stats.upper_violations = Eigen::MatrixXi::Zero(T, N);
  stats.lower_violations = Eigen::MatrixXi::Zero(T, N);
  stats.converged.assign(static_cast<std::size_t>(T), 0);
  stats.not_converged.assign(static_cast<std::size_t>(T), 0);

  const Eigen::VectorXd vmax = net.v_max_sq();
  const Eigen::VectorXd vmin = net.v_min_sq();
  std::vector<double> xi(static_cast<std::size_t>(market.basis().dimension()));
  Eigen::VectorXd psi(market.basis().size());
  for (int r = 0; r < T; ++r) {
    const int t = stats.timesteps[static_cast<std::size_t>(r)];
    const TimestepSolution& step = market.solution().steps[static_cast<std::size_t>(t)];
    for (int i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < xi.size(); ++j) xi[j] = germ_paths[static_cast<std::size_t>(i)](t, static_cast<Eigen::Index>(j));
      market.basis().evaluate_into(xi, psi);
      Eigen::VectorXcd s(N);
      const Eigen::VectorXd p = step.p * psi;
      const Eigen::VectorXd q = step.q * psi;
      for (int c = 0; c < N; ++c) s(c) = Complex(p(c), q(c));
      for (const auto& ov : overlays) s(ov.bus - 1) += ov.p(i, t);
      AcState st;
      try {
        st = backward_forward_sweep(net, s, net.v0(), options.sweep);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNotConverged) throw;
        ++stats.not_converged[static_cast<std::size_t>(r)];
        continue;
      }
      ++stats.converged[static_cast<std::size_t>(r)];
      const Eigen::VectorXd v2 = st.squared_magnitudes();
      for (int c = 0; c < N; ++c) {
        const bool up = v2(c) > vmax(c);
        const bool down = v2(c) < vmin(c);
        stats.upper_violations(r, c) += up;
        stats.lower_violations(r, c) += down;
        if (options.keep_records) stats.records.push_back({t, c + 1, i, std::sqrt(v2(c)), up || down});
      }
    }
  }
  return stats;
}

void write_ac_validation(std::ostream& out, const ValidationStats& stats) {
  out << std::setprecision(12);
  out << "t,bus,sample,v_mag,violated\n";
  for (const auto& r : stats.records) {
    out << r.t << ',' << r.bus << ',' << r.sample << ',' << r.v_mag << ',' << (r.violated ? 1 : 0) << '\n';
  }
}

}  // namespace plmp
