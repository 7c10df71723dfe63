#include "plmp/netmodel.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>

namespace plmp {

namespace {

struct DisjointSets {
  explicit DisjointSets(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
  std::vector<int> parent;
};

void check_sizes(const RadialNetwork& network, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != network.size() || q.size() != network.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected injection vectors of length " + std::to_string(network.size()) +
                    ", got " + std::to_string(p.size()) + " and " + std::to_string(q.size()));
  }
}

}  // namespace

Eigen::VectorXd RadialNetwork::v_min_sq() const {
  Eigen::VectorXd v(size());
  for (int n = 0; n < size(); ++n) v(n) = buses_[static_cast<std::size_t>(bus_of(n))].v_min_sq;
  return v;
}

Eigen::VectorXd RadialNetwork::v_max_sq() const {
  Eigen::VectorXd v(size());
  for (int n = 0; n < size(); ++n) v(n) = buses_[static_cast<std::size_t>(bus_of(n))].v_max_sq;
  return v;
}

Eigen::VectorXd RadialNetwork::f_max() const {
  Eigen::VectorXd f(size());
  for (int l = 0; l < size(); ++l) f(l) = branches_[static_cast<std::size_t>(l)].f_max;
  return f;
}

RadialNetwork build_network(std::vector<Bus> buses, std::vector<Branch> branches, double v0) {
  const int num_buses = static_cast<int>(buses.size());
  if (num_buses < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a network needs the slack bus and at least one more bus");
  }
  std::sort(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
  for (int i = 0; i < num_buses; ++i) {
    if (buses[static_cast<std::size_t>(i)].id != i) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bus ids must be 0..N without gaps (slack is bus 0); missing or duplicate id " +
                      std::to_string(i));
    }
    const Bus& b = buses[static_cast<std::size_t>(i)];
    if (i > 0 && !(b.v_min_sq < b.v_max_sq)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bus " + std::to_string(i) + ": v_min_sq must be below v_max_sq");
    }
  }
  if (!(v0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "slack squared voltage must be positive");

  DisjointSets sets(num_buses);
  std::vector<std::vector<std::pair<int, int>>> adjacency(static_cast<std::size_t>(num_buses));
  for (std::size_t l = 0; l < branches.size(); ++l) {
    const Branch& br = branches[l];
    if (br.from_bus < 0 || br.from_bus >= num_buses || br.to_bus < 0 || br.to_bus >= num_buses ||
        br.from_bus == br.to_bus) {
      throw Error(ErrorCode::kInvalidArgument,
                  "branch " + std::to_string(br.id) + " has invalid endpoints");
    }
    if (br.r < 0.0 || br.x < 0.0 || !(br.f_max > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "branch " + std::to_string(br.id) + " needs r >= 0, x >= 0 and f_max > 0");
    }
    if (!sets.unite(br.from_bus, br.to_bus)) {
      throw Error(ErrorCode::kCycleDetected,
                  "branch " + std::to_string(br.id) + " (" + std::to_string(br.from_bus) + "-" +
                      std::to_string(br.to_bus) + ") closes a loop");
    }
    adjacency[static_cast<std::size_t>(br.from_bus)].emplace_back(br.to_bus, static_cast<int>(l));
    adjacency[static_cast<std::size_t>(br.to_bus)].emplace_back(br.from_bus, static_cast<int>(l));
  }

  RadialNetwork net;
  net.parent_branch_.assign(static_cast<std::size_t>(num_buses), -1);
  std::vector<bool> seen(static_cast<std::size_t>(num_buses), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  while (!frontier.empty()) {
    const int bus = frontier.front();
    frontier.pop();
    net.bfs_order_.push_back(bus);
    for (auto [next, l] : adjacency[static_cast<std::size_t>(bus)]) {
      if (seen[static_cast<std::size_t>(next)]) continue;
      seen[static_cast<std::size_t>(next)] = true;
      Branch& br = branches[static_cast<std::size_t>(l)];
      if (br.from_bus != bus) std::swap(br.from_bus, br.to_bus);
      net.parent_branch_[static_cast<std::size_t>(next)] = l;
      if (bus == 0) net.slack_branches_.push_back(l);
      frontier.push(next);
    }
  }
  for (int i = 0; i < num_buses; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) {
      throw Error(ErrorCode::kDisconnected, "bus " + std::to_string(i) + " is unreachable from the slack");
    }
  }

  const int n = num_buses - 1;
  net.A_ = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r(n), x(n);
  for (int l = 0; l < n; ++l) {
    const Branch& br = branches[static_cast<std::size_t>(l)];
    if (br.from_bus != 0) net.A_(l, RadialNetwork::column_of(br.from_bus)) = 1.0;
    net.A_(l, RadialNetwork::column_of(br.to_bus)) = -1.0;
    r(l) = br.r;
    x(l) = br.x;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(net.A_);
  if (lu.rank() < n) {
    throw Error(ErrorCode::kSingularIncidence, "reduced incidence matrix is singular");
  }
  net.F_ = lu.inverse();
  net.R_ = net.F_ * r.asDiagonal() * net.F_.transpose();
  net.X_ = net.F_ * x.asDiagonal() * net.F_.transpose();
  net.buses_ = std::move(buses);
  net.branches_ = std::move(branches);
  net.v0_ = v0;
  return net;
}

Eigen::VectorXd voltage_map(const RadialNetwork& network, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& q) {
  check_sizes(network, p, q);
  return Eigen::VectorXd::Constant(network.size(), network.v0()) + 2.0 * network.R() * p +
         2.0 * network.X() * q;
}

BranchFlows branch_flows(const RadialNetwork& network, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& q) {
  check_sizes(network, p, q);
  // A^T P = p  <=>  P = F^T p
  return {network.F().transpose() * p, network.F().transpose() * q};
}

double slack_import(const Eigen::VectorXd& injections) { return -injections.sum(); }

}  // namespace plmp
