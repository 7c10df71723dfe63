#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "plmp/ccopf.hpp"
#include "plmp/scenario.hpp"

using namespace plmp;

namespace {

std::shared_ptr<const RadialNetwork> chain(int n, double r, double x, double f_max) {
  std::vector<Bus> buses;
  for (int i = 0; i <= n; ++i) buses.push_back({i});
  std::vector<Branch> br;
  for (int i = 0; i < n; ++i) br.push_back({i, i, i + 1, r, x, f_max});
  return std::make_shared<const RadialNetwork>(build_network(buses, br, 1.0));
}

UncertainInjection load_at(int bus, double mean, double scale, int germ = 0, int H = 1) {
  return {bus, InjectionKind::kLoad, std::vector<double>(static_cast<std::size_t>(H), mean), germ,
          std::vector<double>(static_cast<std::size_t>(H), scale), 0.95};
}

CcOpfProblem base_problem(std::shared_ptr<const RadialNetwork> net, GermSpec germ, int H = 1) {
  CcOpfProblem p;
  p.network = std::move(net);
  p.basis = std::make_shared<const PceBasis>(build_basis(germ));
  p.horizon = H;
  return p;
}

const GermSpec kGauss{{GermComponent::gaussian()}, 1};

CcOpfProblem case_problem(const char* name) {
  return build_problem(load_scenario(std::string(PLMP_DATA_DIR) + "/" + name));
}

}  // namespace

TEST(CcOpf, TwoBusLinearCost) {
  CcOpfProblem p = base_problem(chain(1, 0.01, 0.01, 5.0), kGauss);
  p.slack = {10.0, 0.0, 0.0};
  p.injections = {load_at(1, 0.5, 0.0)};
  const CcOpfSolution s = solve(p);
  ASSERT_EQ(s.steps[0].status, ConeQpStatus::kOptimal);
  EXPECT_NEAR(s.objective, 5.0, 1e-7);
  EXPECT_NEAR(s.steps[0].lambda(0, 0), 10.0, 1e-6);
  EXPECT_NEAR(s.steps[0].P0(0), 0.5, 1e-9);
}

TEST(CcOpf, QuadraticSlackPrice) {
  CcOpfProblem p = base_problem(chain(3, 0.01, 0.01, 5.0), kGauss);
  p.slack = {20.0, 15.0, 100.0};
  p.injections = {load_at(1, 0.3, 0.02), load_at(3, 0.4, 0.05)};
  const CcOpfSolution s = solve(p);
  const auto& st = s.steps[0];
  const double P0 = 0.7;
  for (int b = 0; b < 3; ++b) EXPECT_NEAR(st.lambda(b, 0), 20.0 + 2 * 15.0 * P0, 1e-6);
  // Higher-order prices follow the slack's variance cost.
  for (int b = 0; b < 3; ++b) EXPECT_NEAR(st.lambda(b, 1), 2 * 100.0 * st.P0(1), 1e-6);
  EXPECT_TRUE(feasibility_report(s, p)[0].binding().empty());
}

TEST(CcOpf, InfeasibleWhenLimitTooSmall) {
  CcOpfProblem p = base_problem(chain(2, 0.01, 0.01, 0.1), kGauss);
  p.slack = {10.0, 1.0, 1.0};
  p.injections = {load_at(2, 0.5, 0.0)};
  const TimestepSolution st = solve_timestep(p, 0);
  EXPECT_EQ(st.status, ConeQpStatus::kInfeasible);
  try {
    solve(p);
    FAIL();
  } catch (const InfeasibleTimestep& e) {
    EXPECT_EQ(e.timestep(), 0);
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(CcOpf, DeterministicGermMatchesHardConstraints) {
  // K = 1: a generator behind a flow limit covers exactly the excess.
  std::vector<Bus> buses{{0}, {1}, {2}};
  auto net = std::make_shared<const RadialNetwork>(
      build_network(buses, {{0, 0, 1, 0.01, 0.01, 5.0}, {1, 1, 2, 0.01, 0.01, 0.3}}, 1.0));
  CcOpfProblem p = base_problem(net, {{GermComponent::gaussian()}, 0});
  ASSERT_EQ(p.basis->size(), 1);
  p.slack = {10.0, 0.0, 0.0};
  p.generators = {{2, 0.0, 1.0, std::nullopt, std::nullopt, 50.0, 0.0, 0.0}};
  p.injections = {load_at(2, 0.5, 0.0)};
  const CcOpfSolution s = solve(p);
  const auto& st = s.steps[0];
  EXPECT_NEAR(st.pg(0, 0), 0.2, 1e-6);
  EXPECT_NEAR(st.P(1, 0), 0.3, 1e-6);
  EXPECT_NEAR(st.lambda(1, 0), 50.0, 1e-4);
  EXPECT_NEAR(st.lambda(0, 0), 10.0, 1e-4);
}

TEST(CcOpf, NoConstraintBindsAtZeroInjection) {
  CcOpfProblem p = base_problem(chain(3, 0.01, 0.01, 1.0), kGauss);
  p.slack = {10.0, 1.0, 1.0};
  const CcOpfSolution s = solve(p);
  const auto rep = feasibility_report(s, p);
  for (const auto& c : rep[0].constraints) {
    EXPECT_NEAR(c.slack, c.margin_at_zero, 1e-8) << to_string(c.spec.kind) << " " << c.spec.index;
  }
}

TEST(CcOpf, GalerkinExactness) {
  const CcOpfProblem p = case_problem("case2.yaml");
  const CcOpfSolution s = solve(p);
  const RadialNetwork& net = *p.network;
  const Eigen::MatrixXd xi = sample_germ(p.basis->germ(), 10000, 3);
  for (int t : {7, 12, 18}) {
    const auto& st = s.steps[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < xi.rows(); i += 7) {
      const Eigen::VectorXd x = xi.row(i).transpose();
      const Eigen::VectorXd psi = eval_basis(*p.basis, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
      const Eigen::VectorXd pp = st.p * psi, qq = st.q * psi;
      EXPECT_LE((st.P * psi - branch_flows(net, pp, qq).P).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LE((st.Q * psi - branch_flows(net, pp, qq).Q).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LE((st.V * psi - voltage_map(net, pp, qq)).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_NEAR(st.P0.dot(psi), slack_import(pp), 1e-8);
    }
  }
}

TEST(CcOpf, ObjectiveMonotoneInEpsilon) {
  CcOpfProblem p = case_problem("case3.yaml");
  double prev = INFINITY;
  for (double eps : {0.02, 0.05, 0.1, 0.2, 0.5}) {
    p.epsilon = eps;
    const CcOpfSolution s = solve(p);
    EXPECT_LE(s.objective, prev + 1e-6 * std::max(1.0, std::abs(prev)));
    prev = s.objective;
  }
}

TEST(CcOpf, StrongDualityAndResiduals) {
  for (const char* name : {"case1.yaml", "case2.yaml", "case3.yaml"}) {
    const CcOpfSolution s = solve(case_problem(name));
    for (const auto& st : s.steps) {
      EXPECT_EQ(st.status, ConeQpStatus::kOptimal);
      EXPECT_LT(st.relative_gap, 1e-6) << name << " t=" << st.t;
      EXPECT_LT(st.equality_residual, 1e-6) << name << " t=" << st.t;
    }
  }
}

TEST(CcOpf, PricesFlatWithoutBindingConstraints) {
  for (const char* name : {"case1.yaml", "case2.yaml", "case3.yaml"}) {
    const CcOpfProblem p = case_problem(name);
    const CcOpfSolution s = solve(p);
    const auto rep = feasibility_report(s, p);
    for (const auto& st : s.steps) {
      if (!rep[static_cast<std::size_t>(st.t)].binding().empty()) continue;
      for (Eigen::Index b = 1; b < st.lambda.rows(); ++b) {
        EXPECT_LE((st.lambda.row(b) - st.lambda.row(0)).cwiseAbs().maxCoeff(), 1e-5) << name << " t=" << st.t;
      }
    }
  }
}

TEST(CcOpf, CongestionBindsOnCaseTwo) {
  const CcOpfProblem p = case_problem("case2.yaml");
  const CcOpfSolution s = solve(p);
  bool found = false;
  for (const auto& c : feasibility_report(s, p)[18].binding()) {
    found |= c.spec.kind == ConstraintKind::kFlowPUpper && c.spec.index == 8;
  }
  EXPECT_TRUE(found);
  EXPECT_TRUE(feasibility_report(solve(case_problem("case1.yaml")), case_problem("case1.yaml"))[18].binding().empty());
}

TEST(CcOpf, MeanVoltageBoundAtHalfRisk) {
  // Gamma(0.5) = 0, so a binding voltage row pins the mean only.
  CcOpfProblem p = base_problem(chain(1, 0.01, 0.01, 100.0), kGauss);
  p.epsilon = 0.5;
  p.slack = {10.0, 1.0, 1.0};
  p.generators = {{1, -10.0, 0.0, std::nullopt, std::nullopt, 0.0, 1.0, 1.0}};
  UncertainInjection pv = load_at(1, 6.0, 0.5);
  pv.kind = InjectionKind::kPv;
  p.injections = {pv};
  const CcOpfSolution s = solve(p);
  const auto rep = feasibility_report(s, p);
  bool found = false;
  for (const auto& c : rep[0].binding()) found |= c.spec.kind == ConstraintKind::kVoltageUpper;
  EXPECT_TRUE(found);
  EXPECT_NEAR(s.steps[0].V(0, 0), p.network->bus(1).v_max_sq, 1e-6);
  EXPECT_GT(s.steps[0].V.row(0).tail(s.steps[0].V.cols() - 1).norm(), 1e-3);
}

TEST(CcOpf, PricesMatchFiniteDifferences) {
  CcOpfProblem p = case_problem("case2.yaml");
  const int t = 18;
  const TimestepSolution base = solve_timestep(p, t);
  const double h = 1e-5;
  for (int bus : {1, 9, 11}) {
    for (int k : {0, 1}) {
      CcOpfProblem q = p;
      // A zero-mean Gaussian injection perturbs coefficient k of the bus injection.
      UncertainInjection extra{bus, InjectionKind::kPv, std::vector<double>(24, 0.0), 0, std::vector<double>(24, 0.0), 1.0};
      (k == 0 ? extra.mean : extra.scale)[static_cast<std::size_t>(t)] = h;
      q.injections.push_back(extra);
      const double fd = (base.objective - solve_timestep(q, t).objective) / h;
      const int kk = k == 0 ? 0 : p.basis->linear_term(0);
      EXPECT_NEAR(fd, base.lambda(bus - 1, kk), 1e-2 * std::max(1.0, std::abs(fd))) << "bus " << bus << " k " << k;
    }
  }
}

TEST(CcOpf, ValidationErrors) {
  CcOpfProblem p = base_problem(chain(2, 0.01, 0.01, 1.0), kGauss);
  p.injections = {load_at(7, 0.5, 0.0)};
  EXPECT_THROW(validate_problem(p), Error);
  p.injections = {load_at(1, 0.5, 0.0, 3)};
  EXPECT_THROW(validate_problem(p), Error);
}
