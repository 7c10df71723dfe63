#include "plmp/cone_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plmp/error.hpp"

namespace plmp {

std::string to_string(ConeQpStatus status) {
  switch (status) {
    case ConeQpStatus::kOptimal: return "optimal";
    case ConeQpStatus::kInfeasible: return "infeasible";
    case ConeQpStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

namespace cone {

namespace {

// Offsets of each cone block in the stacked vector.
std::vector<int> offsets(const std::vector<int>& dims) {
  std::vector<int> off(dims.size() + 1, 0);
  for (std::size_t i = 0; i < dims.size(); ++i) off[i + 1] = off[i] + dims[i];
  return off;
}

double tail_norm(const Eigen::VectorXd& u, int start, int dim) {
  return dim > 1 ? u.segment(start + 1, dim - 1).norm() : 0.0;
}

// Largest alpha with u + alpha d in one second-order cone (u interior).
double block_step(const Eigen::VectorXd& u, const Eigen::VectorXd& d, int start, int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  const double u0 = u(start), d0 = d(start);
  if (dim == 1) return d0 < 0.0 ? -u0 / d0 : inf;
  const auto u1 = u.segment(start + 1, dim - 1);
  const auto d1 = d.segment(start + 1, dim - 1);
  // f(alpha) = (u0 + alpha d0)^2 - ||u1 + alpha d1||^2 = c + b alpha + a alpha^2, f(0) > 0.
  const double a = d0 * d0 - d1.squaredNorm();
  const double b = 2.0 * (u0 * d0 - u1.dot(d1));
  const double c = std::max(u0 * u0 - u1.squaredNorm(), 0.0);
  double alpha = inf;
  const double scale = std::max({std::abs(a), std::abs(b), c, 1e-300});
  if (std::abs(a) <= 1e-14 * scale) {
    if (b < 0.0) alpha = -c / b;
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // Stable roots of a alpha^2 + b alpha + c.
      const double qq = -0.5 * (b + std::copysign(sq, b));
      const double r1 = qq / a;
      const double r2 = qq != 0.0 ? c / qq : inf;
      for (double r : {r1, r2}) {
        if (r > 0.0) alpha = std::min(alpha, r);
      }
    }
  }
  if (d0 < 0.0) alpha = std::min(alpha, -u0 / d0);
  return alpha;
}

}  // namespace

double max_violation(const Eigen::VectorXd& u, const std::vector<int>& dims) {
  const auto off = offsets(dims);
  double t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dims.size(); ++i) {
    t = std::max(t, tail_norm(u, off[i], dims[i]) - u(off[i]));
  }
  return t;
}

double max_step(const Eigen::VectorXd& u, const Eigen::VectorXd& d, const std::vector<int>& dims,
                double cap) {
  const auto off = offsets(dims);
  double alpha = cap;
  for (std::size_t i = 0; i < dims.size(); ++i) alpha = std::min(alpha, block_step(u, d, off[i], dims[i]));
  return alpha;
}

NtBlock nt_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
  const int dim = static_cast<int>(s.size());
  NtBlock blk;
  if (dim == 1) {
    const double w = std::sqrt(s(0) / z(0));
    blk.W = Eigen::MatrixXd::Constant(1, 1, w);
    blk.W_inv = Eigen::MatrixXd::Constant(1, 1, 1.0 / w);
    return blk;
  }
  const double s_res = s(0) * s(0) - s.tail(dim - 1).squaredNorm();
  const double z_res = z(0) * z(0) - z.tail(dim - 1).squaredNorm();
  if (!(s_res > 0.0) || !(z_res > 0.0)) {
    throw Error(ErrorCode::kSolverFailure, "iterate left the cone interior");
  }
  const double s_norm = std::sqrt(s_res);
  const double z_norm = std::sqrt(z_res);
  const Eigen::VectorXd s_bar = s / s_norm;
  const Eigen::VectorXd z_bar = z / z_norm;
  const double gam = std::sqrt(0.5 * (1.0 + s_bar.dot(z_bar)));
  const double w0 = (s_bar(0) + z_bar(0)) / (2.0 * gam);
  const Eigen::VectorXd w1 = (s_bar.tail(dim - 1) - z_bar.tail(dim - 1)) / (2.0 * gam);
  const double eta = std::sqrt(s_norm / z_norm);

  Eigen::MatrixXd core = Eigen::MatrixXd::Identity(dim - 1, dim - 1) + w1 * w1.transpose() / (1.0 + w0);
  blk.W.resize(dim, dim);
  blk.W(0, 0) = w0;
  blk.W.block(0, 1, 1, dim - 1) = w1.transpose();
  blk.W.block(1, 0, dim - 1, 1) = w1;
  blk.W.block(1, 1, dim - 1, dim - 1) = core;
  blk.W_inv = blk.W;
  blk.W_inv.block(0, 1, 1, dim - 1) *= -1.0;
  blk.W_inv.block(1, 0, dim - 1, 1) *= -1.0;
  blk.W *= eta;
  blk.W_inv /= eta;
  return blk;
}

}  // namespace cone

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class Scaling {
 public:
  Scaling(const std::vector<int>& dims) : dims_(dims) {
    off_.assign(dims.size() + 1, 0);
    for (std::size_t i = 0; i < dims.size(); ++i) off_[i + 1] = off_[i] + dims[i];
  }

  void update(const VectorXd& s, const VectorXd& z) {
    blocks_.clear();
    blocks_.reserve(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      blocks_.push_back(cone::nt_scaling(s.segment(off_[i], dims_[i]), z.segment(off_[i], dims_[i])));
    }
  }

  VectorXd apply(const VectorXd& v, bool inverse) const {
    VectorXd out(v.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      const auto& M = inverse ? blocks_[i].W_inv : blocks_[i].W;
      out.segment(off_[i], dims_[i]).noalias() = M * v.segment(off_[i], dims_[i]);
    }
    return out;
  }

  MatrixXd apply_inverse_rows(const MatrixXd& G) const {
    MatrixXd out(G.rows(), G.cols());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      out.middleRows(off_[i], dims_[i]).noalias() = blocks_[i].W_inv * G.middleRows(off_[i], dims_[i]);
    }
    return out;
  }

 private:
  std::vector<int> dims_;
  std::vector<int> off_;
  std::vector<cone::NtBlock> blocks_;
};

// Jordan-algebra helpers on the product cone.
class Jordan {
 public:
  explicit Jordan(const std::vector<int>& dims) : dims_(dims) {
    off_.assign(dims.size() + 1, 0);
    for (std::size_t i = 0; i < dims.size(); ++i) off_[i + 1] = off_[i] + dims[i];
  }

  VectorXd product(const VectorXd& u, const VectorXd& v) const {
    VectorXd out(u.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      const int o = off_[i], d = dims_[i];
      out(o) = u.segment(o, d).dot(v.segment(o, d));
      if (d > 1) out.segment(o + 1, d - 1) = u(o) * v.segment(o + 1, d - 1) + v(o) * u.segment(o + 1, d - 1);
    }
    return out;
  }

  // x with lambda o x = b.
  VectorXd divide(const VectorXd& lambda, const VectorXd& b) const {
    VectorXd out(b.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      const int o = off_[i], d = dims_[i];
      const double l0 = lambda(o);
      if (d == 1) {
        out(o) = b(o) / l0;
        continue;
      }
      const auto l1 = lambda.segment(o + 1, d - 1);
      const auto b1 = b.segment(o + 1, d - 1);
      const double det = l0 * l0 - l1.squaredNorm();
      const double l1b1 = l1.dot(b1);
      out(o) = (l0 * b(o) - l1b1) / det;
      out.segment(o + 1, d - 1) = -b(o) / det * l1 + b1 / l0 + (l1b1 / (l0 * det)) * l1;
    }
    return out;
  }

  VectorXd identity() const {
    VectorXd e = VectorXd::Zero(off_.back());
    for (std::size_t i = 0; i < dims_.size(); ++i) e(off_[i]) = 1.0;
    return e;
  }

 private:
  std::vector<int> dims_;
  std::vector<int> off_;
};

// Factorization of the reduced KKT system
//   [ H  A^T ] [dx]   [rx]
//   [ A  0   ] [dy] = [ry]
// with H = P + G^T W^-2 G symmetric positive (semi)definite.
class ReducedKkt {
 public:
  void factor(const MatrixXd& H, const MatrixXd& A) {
    const int n = static_cast<int>(H.rows());
    llt_.compute(H);
    use_ldlt_ = llt_.info() != Eigen::Success;
    if (use_ldlt_) {
      const double reg = 1e-12 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
      ldlt_.compute(H + reg * MatrixXd::Identity(n, n));
    }
    A_ = A;
    if (A.rows() > 0) {
      const MatrixXd HinvAt = solve_h(A.transpose());
      schur_.compute(A * HinvAt);
    }
  }

  void solve(const VectorXd& rx, const VectorXd& ry, VectorXd& dx, VectorXd& dy) const {
    if (A_.rows() == 0) {
      dx = solve_h(rx);
      dy.resize(0);
      return;
    }
    const VectorXd hr = solve_h(rx);
    dy = schur_.solve(A_ * hr - ry);
    dx = solve_h(rx - A_.transpose() * dy);
  }

 private:
  MatrixXd solve_h(const MatrixXd& rhs) const { return use_ldlt_ ? MatrixXd(ldlt_.solve(rhs)) : MatrixXd(llt_.solve(rhs)); }

  Eigen::LLT<MatrixXd> llt_;
  Eigen::LDLT<MatrixXd> ldlt_;
  Eigen::LDLT<MatrixXd> schur_;
  MatrixXd A_;
  bool use_ldlt_ = false;
};

void check_dimensions(const ConeQp& prob) {
  const auto n = prob.q.size();
  const auto m = prob.h.size();
  const auto p = prob.b.size();
  long total = 0;
  for (int d : prob.cone_dims) {
    if (d < 1) throw Error(ErrorCode::kInconsistentDimensions, "cone dimensions must be positive");
    total += d;
  }
  if (prob.P.rows() != n || prob.P.cols() != n || prob.G.rows() != m || prob.G.cols() != n ||
      prob.A.rows() != p || prob.A.cols() != n || total != m) {
    throw Error(ErrorCode::kInconsistentDimensions, "cone program blocks do not line up");
  }
}

ConeQpResult solve_interior(const ConeQp& prob, const ConeQpOptions& opt) {
  const int n = prob.num_variables();
  const int m = prob.num_cone_rows();
  const int p = prob.num_equalities();
  const auto& dims = prob.cone_dims;
  const double degree = static_cast<double>(dims.size());
  const Jordan jordan(dims);
  const VectorXd e = jordan.identity();

  ConeQpResult res;
  res.x = VectorXd::Zero(n);
  res.y = VectorXd::Zero(p);

  if (m == 0) {
    // Equality-constrained QP only.
    ReducedKkt kkt;
    kkt.factor(prob.P, prob.A);
    VectorXd dx, dy;
    kkt.solve(-prob.q, prob.b, dx, dy);
    res.x = dx;
    res.y = dy;
    res.z.resize(0);
    res.s.resize(0);
    res.primal_objective = 0.5 * dx.dot(prob.P * dx) + prob.q.dot(dx);
    res.dual_objective = res.primal_objective;
    res.status = ConeQpStatus::kOptimal;
    return res;
  }

  if (n == 0) {
    // Nothing to optimize: feasible iff h lies in K; then z = 0 is dual optimal.
    res.s = prob.h;
    res.z = VectorXd::Zero(m);
    const double viol = cone::max_violation(prob.h, dims);
    if (viol > opt.feasibility_tol * std::max(1.0, prob.h.norm()) || (p > 0 && prob.b.norm() > opt.feasibility_tol)) {
      res.status = ConeQpStatus::kInfeasible;
      res.message = "fixed point violates the cone constraints";
      return res;
    }
    res.status = ConeQpStatus::kOptimal;
    return res;
  }

  const double res_x0 = std::max(1.0, prob.q.norm());
  const double res_y0 = std::max(1.0, prob.b.norm());
  const double res_z0 = std::max(1.0, prob.h.norm());

  // Initial point from the KKT system with W = I.
  VectorXd x, y, z, s;
  {
    ReducedKkt kkt;
    kkt.factor(prob.P + prob.G.transpose() * prob.G, prob.A);
    kkt.solve(-prob.q + prob.G.transpose() * prob.h, prob.b, x, y);
    s = prob.h - prob.G * x;
    z = -s;
    const double ts = cone::max_violation(s, dims);
    if (ts >= -1e-8 * std::max(s.norm(), 1.0)) s += (1.0 + ts) * e;
    const double tz = cone::max_violation(z, dims);
    if (tz >= -1e-8 * std::max(z.norm(), 1.0)) z += (1.0 + tz) * e;
  }

  Scaling W(dims);
  ReducedKkt kkt;
  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    const VectorXd Px = prob.P * x;
    const VectorXd rx = Px + prob.q + prob.A.transpose() * y + prob.G.transpose() * z;
    const VectorXd ry = prob.A * x - prob.b;
    const VectorXd rz = prob.G * x + s - prob.h;
    const double gap = s.dot(z);
    const double pcost = 0.5 * x.dot(Px) + prob.q.dot(x);
    const double dcost = pcost + y.dot(ry) + z.dot(rz) - gap;
    const double pres = std::max(ry.size() ? ry.norm() / res_y0 : 0.0, rz.norm() / res_z0);
    const double dres = rx.norm() / res_x0;
    const double rel_gap = std::abs(pcost - dcost) / std::max(1.0, std::abs(pcost));

    res.x = x;
    res.y = y;
    res.z = z;
    res.s = s;
    res.primal_objective = pcost;
    res.dual_objective = dcost;
    res.gap = gap;
    res.relative_gap = rel_gap;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.iterations = iter;

    const double gap_measure = std::max(gap, std::abs(pcost - dcost));
    if (pres <= opt.feasibility_tol && dres <= opt.feasibility_tol &&
        (gap_measure <= opt.absolute_gap_tol ||
         gap_measure / std::max(1.0, std::abs(pcost)) <= opt.relative_gap_tol)) {
      res.status = ConeQpStatus::kOptimal;
      return res;
    }
    if (iter == opt.max_iterations) break;

    W.update(s, z);
    const VectorXd lambda = W.apply(z, false);
    const VectorXd lambda_sq = jordan.product(lambda, lambda);
    const MatrixXd Gs = W.apply_inverse_rows(prob.G);
    kkt.factor(prob.P + Gs.transpose() * Gs, prob.A);

    // Solves the linearized system for right-hand side (bx, by, bz, bs);
    // returns (dx, dy, dz, ds) plus the scaled pair (W^-1 ds, W dz).
    auto solve_newton = [&](const VectorXd& bx, const VectorXd& by, const VectorXd& bz, const VectorXd& bs,
                            VectorXd& dx, VectorXd& dy, VectorXd& dz, VectorXd& ds, VectorXd& ds_t,
                            VectorXd& dz_t) {
      const VectorXd u = jordan.divide(lambda, bs);
      const VectorXd winv_bz = W.apply(bz, true);
      kkt.solve(bx + Gs.transpose() * (winv_bz - u), by, dx, dy);
      dz_t = Gs * dx - winv_bz + u;
      ds_t = u - dz_t;
      dz = W.apply(dz_t, true);
      ds = W.apply(ds_t, false);
    };

    VectorXd dx, dy, dz, ds, ds_t, dz_t;
    solve_newton(-rx, -ry, -rz, -lambda_sq, dx, dy, dz, ds, ds_t, dz_t);
    const double alpha_aff =
        std::min(cone::max_step(s, ds, dims, 1.0), cone::max_step(z, dz, dims, 1.0));
    const double sigma = std::pow(1.0 - alpha_aff, 3.0);
    const double mu = gap / degree;

    const VectorXd bs = -lambda_sq - jordan.product(ds_t, dz_t) + sigma * mu * e;
    const double shrink = 1.0 - sigma;
    solve_newton(-shrink * rx, -shrink * ry, -shrink * rz, bs, dx, dy, dz, ds, ds_t, dz_t);
    const double inf = std::numeric_limits<double>::infinity();
    const double alpha_max = std::min(cone::max_step(s, ds, dims, inf), cone::max_step(z, dz, dims, inf));
    const double alpha = std::min(1.0, opt.step_fraction * alpha_max);
    if (!(alpha > 1e-14)) {
      res.message = "step length collapsed";
      break;
    }
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
  }
  res.status = ConeQpStatus::kNumericalFailure;
  if (res.message.empty()) res.message = "iteration limit reached";
  return res;
}

// min t  s.t.  G x - t e + s = h,  -t + s' = 1,  A x = b.
// The optimal t is negative iff the original cone constraints are strictly feasible.
double phase_one(const ConeQp& prob, const ConeQpOptions& opt, bool& ok) {
  const int n = prob.num_variables();
  const int m = prob.num_cone_rows();
  const Jordan jordan(prob.cone_dims);
  const VectorXd e = jordan.identity();

  ConeQp aux;
  aux.P = MatrixXd::Zero(n + 1, n + 1);
  aux.P.topLeftCorner(n, n) = 1e-10 * MatrixXd::Identity(n, n);
  aux.q = VectorXd::Zero(n + 1);
  aux.q(n) = 1.0;
  aux.G = MatrixXd::Zero(m + 1, n + 1);
  aux.G.topLeftCorner(m, n) = prob.G;
  aux.G.block(0, n, m, 1) = -e;
  aux.G(m, n) = -1.0;
  aux.h.resize(m + 1);
  aux.h << prob.h, 1.0;
  aux.A = MatrixXd::Zero(prob.A.rows(), n + 1);
  aux.A.leftCols(n) = prob.A;
  aux.b = prob.b;
  aux.cone_dims = prob.cone_dims;
  aux.cone_dims.push_back(1);

  ConeQpOptions relaxed = opt;
  relaxed.max_iterations = 2 * opt.max_iterations;
  relaxed.relative_gap_tol = relaxed.absolute_gap_tol = 1e-8;
  relaxed.feasibility_tol = 1e-8;
  const ConeQpResult r = solve_interior(aux, relaxed);
  ok = r.status == ConeQpStatus::kOptimal;
  return r.x.size() ? r.x(n) : 0.0;
}

}  // namespace

ConeQpResult solve_cone_qp(const ConeQp& problem, const ConeQpOptions& options) {
  check_dimensions(problem);
  ConeQpResult res;
  try {
    res = solve_interior(problem, options);
  } catch (const Error& err) {
    res.status = ConeQpStatus::kNumericalFailure;
    res.message = err.what();
  }
  if (res.status != ConeQpStatus::kNumericalFailure || problem.num_cone_rows() == 0) return res;

  bool ok = false;
  double t = 0.0;
  try {
    t = phase_one(problem, options, ok);
  } catch (const Error&) {
    ok = false;
  }
  if (ok && t > 1e-7 * std::max(1.0, problem.h.norm())) {
    res.status = ConeQpStatus::kInfeasible;
    res.message = "phase I: constraints violated by at least " + std::to_string(t);
  } else if (!res.message.empty()) {
    res.message += ok ? " (phase I found the constraints feasible)" : " (phase I inconclusive)";
  }
  return res;
}

}  // namespace plmp
