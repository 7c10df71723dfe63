#include <random>

#include <gtest/gtest.h>

#include "plmp/netmodel.hpp"

using namespace plmp;

namespace {

std::vector<Bus> make_buses(int n) {
  std::vector<Bus> b;
  for (int i = 0; i < n; ++i) b.push_back({i});
  return b;
}

// Random recursive tree; branches listed in random order and random orientation.
RadialNetwork random_tree(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.001, 0.05);
  std::vector<Branch> br;
  for (int bus = 1; bus < n; ++bus) {
    const int parent = std::uniform_int_distribution<int>(0, bus - 1)(rng);
    Branch b{0, parent, bus, u(rng), u(rng), 1.0};
    if (rng() & 1) std::swap(b.from_bus, b.to_bus);
    br.push_back(b);
  }
  std::shuffle(br.begin(), br.end(), rng);
  for (std::size_t i = 0; i < br.size(); ++i) br[i].id = static_cast<int>(i);
  return build_network(make_buses(n), br, 1.0);
}

// Independent oracle: F(j, l) = -1 if branch l lies on the path slack -> bus j.
Eigen::MatrixXd path_matrix(const RadialNetwork& net) {
  const int N = net.size();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(N, N);
  for (int bus = 1; bus <= N; ++bus) {
    int cur = bus;
    while (cur != 0) {
      const int l = net.parent_branch(cur);
      F(bus - 1, l) = -1.0;
      cur = net.branch(l).from_bus;
    }
  }
  return F;
}

}  // namespace

TEST(Netmodel, SingleBranchResistance) {
  const auto net = build_network(make_buses(2), {{0, 0, 1, 0.01, 0.02, 1.0}}, 1.0);
  ASSERT_EQ(net.size(), 1);
  EXPECT_DOUBLE_EQ(net.A()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(net.F()(0, 0), -1.0);
  EXPECT_NEAR(net.R()(0, 0), 0.01, 1e-15);
  EXPECT_NEAR(net.X()(0, 0), 0.02, 1e-15);
}

TEST(Netmodel, StarIsDiagonal) {
  const auto net = build_network(make_buses(4), {{0, 0, 1, 0.1, 0.0, 1}, {1, 0, 2, 0.2, 0.0, 1}, {2, 0, 3, 0.3, 0.0, 1}}, 1.0);
  Eigen::MatrixXd expect = Eigen::Vector3d(0.1, 0.2, 0.3).asDiagonal();
  EXPECT_TRUE(net.R().isApprox(expect, 1e-14));
}

TEST(Netmodel, CycleRejected) {
  try {
    build_network(make_buses(4), {{0, 0, 1, .1, .1, 1}, {1, 1, 2, .1, .1, 1}, {2, 2, 1, .1, .1, 1}}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::kCycleDetected || e.code() == ErrorCode::kDisconnected);
  }
  try {
    build_network(make_buses(4), {{0, 0, 1, .1, .1, 1}, {1, 1, 2, .1, .1, 1}, {2, 2, 3, .1, .1, 1}, {3, 3, 1, .1, .1, 1}}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::kCycleDetected || e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST(Netmodel, VoltageMapExamples) {
  const auto net = build_network(make_buses(2), {{0, 0, 1, 0.01, 0.01, 1.0}}, 1.0);
  Eigen::VectorXd p(1), q(1);
  p << 0.0;
  q << 0.0;
  EXPECT_DOUBLE_EQ(voltage_map(net, p, q)(0), 1.0);
  p << -0.5;
  q << -0.2;
  EXPECT_NEAR(voltage_map(net, p, q)(0), 0.986, 1e-14);
}

TEST(Netmodel, ChainFlow) {
  const auto net = build_network(make_buses(3), {{0, 0, 1, .01, .01, 1}, {1, 1, 2, .01, .01, 1}}, 1.0);
  Eigen::VectorXd p(2);
  p << -0.1, -0.2;
  const BranchFlows f = branch_flows(net, p, Eigen::VectorXd::Zero(2));
  EXPECT_NEAR(f.P(0), 0.3, 1e-14);
  EXPECT_NEAR(f.P(1), 0.2, 1e-14);
  EXPECT_NEAR(slack_import(p), 0.3, 1e-15);
}

TEST(Netmodel, RandomTreeProperties) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 200)(rng);
    const RadialNetwork net = random_tree(n, rng);
    const int N = net.size();
    EXPECT_LE((net.A() * net.F() - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE(net.F().isApprox(path_matrix(net), 1e-12));
    for (const auto* M : {&net.R(), &net.X()}) {
      EXPECT_LE((*M - M->transpose()).cwiseAbs().maxCoeff(), 1e-14);
      EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(*M).eigenvalues().minCoeff(), 0.0);
    }
    // Branches point away from the slack.
    for (const auto& b : net.branches()) EXPECT_EQ(net.parent_branch(b.to_bus), b.id);

    const Eigen::VectorXd u = Eigen::VectorXd::Random(N), w = Eigen::VectorXd::Random(N);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(N);
    const double a = 0.7, b = -1.3;
    const Eigen::VectorXd lhs = voltage_map(net, a * u + b * w, z) - Eigen::VectorXd::Ones(N);
    const Eigen::VectorXd rhs = a * (voltage_map(net, u, z) - Eigen::VectorXd::Ones(N)) +
                                b * (voltage_map(net, w, z) - Eigen::VectorXd::Ones(N));
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    const BranchFlows f = branch_flows(net, a * u + b * w, z);
    EXPECT_LE((f.P - (a * branch_flows(net, u, z).P + b * branch_flows(net, w, z).P)).cwiseAbs().maxCoeff(), 1e-12);

    // Slack branches carry the whole import.
    const BranchFlows fu = branch_flows(net, u, z);
    double from_slack = 0.0;
    for (int l : net.slack_branches()) from_slack += fu.P(l);
    EXPECT_NEAR(from_slack, slack_import(u), 1e-10);
  }
}

TEST(Netmodel, DoublingLoadDoublesDeviation) {
  const auto net = build_network(make_buses(3), {{0, 0, 1, .01, .02, 1}, {1, 1, 2, .03, .01, 1}}, 1.0);
  Eigen::VectorXd p(2);
  p << -0.2, 0.1;
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd d1 = voltage_map(net, p, z).array() - 1.0;
  const Eigen::VectorXd d2 = voltage_map(net, 2 * p, z).array() - 1.0;
  EXPECT_LE((d2 - 2 * d1).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Netmodel, MalformedInputs) {
  EXPECT_THROW(build_network(make_buses(3), {{0, 0, 1, .01, .01, 1}}, 1.0), Error);
  EXPECT_THROW(build_network(make_buses(2), {{0, 0, 5, .01, .01, 1}}, 1.0), Error);
  EXPECT_THROW(build_network(make_buses(3), {{0, 0, 1, .01, .01, 1}, {1, 0, 1, .01, .01, 1}}, 1.0), Error);
}
