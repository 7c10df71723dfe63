#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace plmp {

/// Cone quadratic program
///
///   minimize    1/2 x^T P x + q^T x
///   subject to  G x + s = h,  A x = b,  s in K
///
/// where K is a product of second-order cones
///   Q^m = { (u0, u1) : u0 >= ||u1||_2 },
/// listed in `cone_dims` in row order. A cone of dimension 1 is the
/// non-negative half-line.
struct ConeQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<int> cone_dims;

  int num_variables() const { return static_cast<int>(q.size()); }
  int num_cone_rows() const { return static_cast<int>(h.size()); }
  int num_equalities() const { return static_cast<int>(b.size()); }
};

struct ConeQpOptions {
  int max_iterations = 100;
  double feasibility_tol = 1e-9;
  double absolute_gap_tol = 1e-9;
  double relative_gap_tol = 1e-9;
  double step_fraction = 0.99;
};

enum class ConeQpStatus { kOptimal, kInfeasible, kNumericalFailure };

std::string to_string(ConeQpStatus status);

struct ConeQpResult {
  ConeQpStatus status = ConeQpStatus::kNumericalFailure;
  Eigen::VectorXd x, y, z, s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;           ///< s^T z
  double relative_gap = 0.0;  ///< |primal - dual| / max(1, |primal|)
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  std::string message;
};

/// Primal-dual interior-point method with Nesterov-Todd scaling and a
/// Mehrotra predictor-corrector step. When the main iteration fails, a
/// phase-I program decides between infeasibility and numerical failure.
ConeQpResult solve_cone_qp(const ConeQp& problem, const ConeQpOptions& options = {});

namespace cone {

/// Smallest t with u + t e in K (negative when u is strictly interior).
double max_violation(const Eigen::VectorXd& u, const std::vector<int>& dims);

/// Largest alpha (capped at `cap`) with u + alpha d in K, for interior u.
double max_step(const Eigen::VectorXd& u, const Eigen::VectorXd& d, const std::vector<int>& dims,
                double cap);

/// Nesterov-Todd scaling of one cone block: W z = W^-1 s.
struct NtBlock {
  Eigen::MatrixXd W;
  Eigen::MatrixXd W_inv;
};
NtBlock nt_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z);

}  // namespace cone

}  // namespace plmp
