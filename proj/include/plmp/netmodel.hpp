#pragma once

#include <vector>

#include <Eigen/Dense>

#include "plmp/error.hpp"

namespace plmp {

/// A network node. Bus 0 is the slack bus (grid connection point); it hosts
/// no load or generation and its squared voltage is fixed to v0.
struct Bus {
  int id = 0;
  double v_min_sq = 0.95 * 0.95;  ///< squared voltage lower bound [p.u.^2]
  double v_max_sq = 1.05 * 1.05;  ///< squared voltage upper bound [p.u.^2]
};

struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;      ///< resistance [p.u.]
  double x = 0.0;      ///< reactance [p.u.]
  double f_max = 0.0;  ///< power-flow limit [p.u.]
};

struct BranchFlows {
  Eigen::VectorXd P;  ///< active flow per branch, parent -> child
  Eigen::VectorXd Q;  ///< reactive flow per branch, parent -> child
};

/// Radial distribution grid with the lindistflow sensitivity matrices.
///
/// Non-slack buses are mapped to columns 0..N-1 in ascending id order (bus
/// ids must be 0..N). Branches keep their input order but are reoriented so
/// that `from_bus` is the parent (closer to the slack). Immutable once built.
class RadialNetwork {
 public:
  int num_buses() const { return static_cast<int>(buses_.size()); }
  /// N: number of non-slack buses, equal to the number of branches.
  int size() const { return static_cast<int>(branches_.size()); }

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const Bus& bus(int id) const { return buses_.at(static_cast<std::size_t>(id)); }
  const Branch& branch(int index) const { return branches_.at(static_cast<std::size_t>(index)); }

  /// Column of a non-slack bus in the reduced matrices.
  static int column_of(int bus_id) { return bus_id - 1; }
  static int bus_of(int column) { return column + 1; }

  double v0() const { return v0_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& F() const { return F_; }
  const Eigen::MatrixXd& R() const { return R_; }
  const Eigen::MatrixXd& X() const { return X_; }

  /// Index of the branch feeding a non-slack bus (its parent branch).
  int parent_branch(int bus_id) const { return parent_branch_.at(static_cast<std::size_t>(bus_id)); }
  /// Buses in breadth-first order from the slack (slack first).
  const std::vector<int>& bfs_order() const { return bfs_order_; }
  /// Branches whose parent is the slack bus.
  const std::vector<int>& slack_branches() const { return slack_branches_; }

  /// Squared-voltage limits of the non-slack buses, by column.
  Eigen::VectorXd v_min_sq() const;
  Eigen::VectorXd v_max_sq() const;
  Eigen::VectorXd f_max() const;

 private:
  friend RadialNetwork build_network(std::vector<Bus> buses, std::vector<Branch> branches,
                                     double v0);

  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<int> parent_branch_;
  std::vector<int> bfs_order_;
  std::vector<int> slack_branches_;
  double v0_ = 1.0;
  Eigen::MatrixXd A_, F_, R_, X_;
};

/// Validates radiality, orients branches parent -> child and computes
/// A (+1 leaving, -1 entering, slack column removed), F = A^-1,
/// R = F diag(r) F^T and X = F diag(x) F^T.
///
/// Throws CycleDetected, Disconnected, SingularIncidence, or InvalidArgument
/// for malformed bus/branch data.
RadialNetwork build_network(std::vector<Bus> buses, std::vector<Branch> branches, double v0);

/// Squared voltages V = v0 1 + 2 R p + 2 X q for nodal injections (length N).
Eigen::VectorXd voltage_map(const RadialNetwork& network, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& q);

/// Branch flows solving A^T P = p and A^T Q = q.
BranchFlows branch_flows(const RadialNetwork& network, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& q);

/// Active power imported through the slack bus, -(sum of injections).
double slack_import(const Eigen::VectorXd& injections);

/// Conservative power limit from an ampacity limit: f = V_min * I_max.
inline double flow_limit_from_ampacity(double i_max, double v_min) { return v_min * i_max; }

}  // namespace plmp
