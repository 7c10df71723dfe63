#include "plmp/pce.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace plmp {

namespace {

void validate_component(const GermComponent& c) {
  if (c.distribution == Distribution::kBeta && !(c.alpha > 0.0 && c.beta > 0.0)) {
    throw Error(ErrorCode::kUnsupportedDistribution, "Beta shapes must be positive");
  }
  if (c.distribution != Distribution::kBeta && c.distribution != Distribution::kGaussian) {
    throw Error(ErrorCode::kUnsupportedDistribution, "unknown germ distribution");
  }
}

// All d-tuples with entries summing to `total`, first coordinate descending.
void enumerate_degree(int dimension, int total, MultiIndex& current, int position,
                      std::vector<MultiIndex>& out) {
  if (position == dimension - 1) {
    current[static_cast<std::size_t>(position)] = total;
    out.push_back(current);
    return;
  }
  for (int v = total; v >= 0; --v) {
    current[static_cast<std::size_t>(position)] = v;
    enumerate_degree(dimension, total - v, current, position + 1, out);
  }
}

}  // namespace

double GermComponent::mean() const {
  return distribution == Distribution::kGaussian ? 0.0 : alpha / (alpha + beta);
}

double GermComponent::variance() const {
  if (distribution == Distribution::kGaussian) return 1.0;
  const double s = alpha + beta;
  return alpha * beta / (s * s * (s + 1.0));
}

double GermComponent::stddev() const { return std::sqrt(variance()); }

bool GermComponent::in_support(double value) const {
  if (!std::isfinite(value)) return false;
  return distribution == Distribution::kGaussian || (value >= 0.0 && value <= 1.0);
}

Recurrence recurrence_for(const GermComponent& component, int degree) {
  validate_component(component);
  Recurrence rec;
  rec.a.resize(static_cast<std::size_t>(std::max(degree, 0)));
  rec.b.resize(static_cast<std::size_t>(std::max(degree, 0)) + 1);
  rec.b[0] = 1.0;
  if (component.distribution == Distribution::kGaussian) {
    for (int n = 0; n < degree; ++n) {
      rec.a[static_cast<std::size_t>(n)] = 0.0;
      rec.b[static_cast<std::size_t>(n) + 1] = std::sqrt(static_cast<double>(n + 1));
    }
    return rec;
  }
  // Beta(alpha, beta) on [0,1] is Jacobi(a = beta - 1, b = alpha - 1) on [-1,1]
  // under y = 2x - 1; monic coefficients map as (alpha_y + 1)/2 and beta_y/4.
  const double a = component.beta - 1.0;
  const double b = component.alpha - 1.0;
  for (int n = 0; n < degree; ++n) {
    double alpha_y;
    if (n == 0) {
      alpha_y = (b - a) / (a + b + 2.0);
    } else {
      const double s = 2.0 * n + a + b;
      alpha_y = (b * b - a * a) / (s * (s + 2.0));
    }
    rec.a[static_cast<std::size_t>(n)] = 0.5 * (alpha_y + 1.0);
  }
  for (int n = 1; n <= degree; ++n) {
    double beta_y;
    if (n == 1) {
      beta_y = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b) * (2.0 + a + b) * (3.0 + a + b));
    } else {
      const double s = 2.0 * n + a + b;
      beta_y = 4.0 * n * (n + a) * (n + b) * (n + a + b) / (s * s * (s + 1.0) * (s - 1.0));
    }
    rec.b[static_cast<std::size_t>(n)] = 0.5 * std::sqrt(beta_y);
  }
  return rec;
}

std::int64_t basis_size(int dimension, int degree) {
  // C(p + d, d) computed incrementally to stay exact.
  std::int64_t k = 1;
  for (int i = 1; i <= dimension; ++i) k = k * (degree + i) / i;
  return k;
}

PceBasis::PceBasis(GermSpec germ) : germ_(std::move(germ)) {
  if (germ_.components.empty()) throw Error(ErrorCode::kInvalidArgument, "germ needs at least one component");
  if (germ_.degree < 0) throw Error(ErrorCode::kInvalidArgument, "polynomial degree must be non-negative");
  for (const auto& c : germ_.components) recurrences_.push_back(recurrence_for(c, germ_.degree));

  const int d = germ_.dimension();
  MultiIndex current(static_cast<std::size_t>(d), 0);
  for (int total = 0; total <= germ_.degree; ++total) {
    enumerate_degree(d, total, current, 0, multi_indices_);
  }
}

int PceBasis::linear_term(int component) const {
  if (component < 0 || component >= dimension()) {
    throw Error(ErrorCode::kIndexOutOfRange, "germ index " + std::to_string(component) +
                                                 " outside 0.." + std::to_string(dimension() - 1));
  }
  if (germ_.degree < 1) return -1;
  // Degree-1 terms follow the constant in coordinate order.
  return 1 + component;
}

void PceBasis::evaluate_into(std::span<const double> xi, Eigen::Ref<Eigen::VectorXd> out) const {
  const int d = dimension();
  const int p = germ_.degree;
  if (static_cast<int>(xi.size()) != d) {
    throw Error(ErrorCode::kDimensionMismatch, "germ sample has " + std::to_string(xi.size()) +
                                                   " coordinates, expected " + std::to_string(d));
  }
  // Univariate tables psi_j(n) for n = 0..p.
  Eigen::MatrixXd uni(p + 1, d);
  for (int j = 0; j < d; ++j) {
    const double x = xi[static_cast<std::size_t>(j)];
    if (!germ_.components[static_cast<std::size_t>(j)].in_support(x)) {
      throw Error(ErrorCode::kOutOfSupport,
                  "coordinate " + std::to_string(j) + " = " + std::to_string(x) + " outside support");
    }
    const Recurrence& rec = recurrences_[static_cast<std::size_t>(j)];
    uni(0, j) = 1.0;
    if (p >= 1) uni(1, j) = (x - rec.a[0]) / rec.b[1];
    for (int n = 1; n < p; ++n) {
      const auto un = static_cast<std::size_t>(n);
      uni(n + 1, j) = ((x - rec.a[un]) * uni(n, j) - rec.b[un] * uni(n - 1, j)) / rec.b[un + 1];
    }
  }
  for (int k = 0; k < size(); ++k) {
    double v = 1.0;
    const MultiIndex& alpha = multi_indices_[static_cast<std::size_t>(k)];
    for (int j = 0; j < d; ++j) v *= uni(alpha[static_cast<std::size_t>(j)], j);
    out(k) = v;
  }
}

Eigen::VectorXd PceBasis::evaluate(std::span<const double> xi) const {
  Eigen::VectorXd out(size());
  evaluate_into(xi, out);
  return out;
}

PceBasis build_basis(const GermSpec& germ) { return PceBasis(germ); }

Eigen::VectorXd eval_basis(const PceBasis& basis, std::span<const double> xi) {
  return basis.evaluate(xi);
}

double PceSeries::stddev() const { return std::sqrt(variance()); }

PceSeries expand_affine_input(const PceBasis& basis, int germ_index, double offset, double scale) {
  const int linear = basis.linear_term(germ_index);
  const GermComponent& c = basis.germ().components[static_cast<std::size_t>(germ_index)];
  PceSeries s{Eigen::VectorXd::Zero(basis.size())};
  s.coefficients(0) = offset + scale * c.mean();
  if (linear >= 0) s.coefficients(linear) = scale * c.stddev();
  return s;
}

QuadratureRule gauss_quadrature(const GermComponent& component, int num_nodes) {
  if (num_nodes < 1) throw Error(ErrorCode::kInvalidArgument, "quadrature needs at least one node");
  const Recurrence rec = recurrence_for(component, num_nodes);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(num_nodes, num_nodes);
  for (int n = 0; n < num_nodes; ++n) {
    jacobi(n, n) = rec.a[static_cast<std::size_t>(n)];
    if (n + 1 < num_nodes) {
      jacobi(n, n + 1) = jacobi(n + 1, n) = rec.b[static_cast<std::size_t>(n) + 1];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule;
  for (int i = 0; i < num_nodes; ++i) {
    rule.nodes.push_back(eig.eigenvalues()(i));
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights.push_back(v0 * v0);
  }
  return rule;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  std::uint64_t mixed = splitmix64(state);
  state = mixed ^ (stream * 0xD1B54A32D192ED03ULL);
  splitmix64(state);
  return splitmix64(state);
}

GermSampler::GermSampler(GermSpec germ, std::uint64_t seed, std::uint64_t stream)
    : germ_(std::move(germ)), engine_(derive_seed(seed, stream)) {
  for (const auto& c : germ_.components) {
    validate_component(c);
    const bool is_beta = c.distribution == Distribution::kBeta;
    gamma_a_.emplace_back(is_beta ? c.alpha : 1.0, 1.0);
    gamma_b_.emplace_back(is_beta ? c.beta : 1.0, 1.0);
  }
}

void GermSampler::draw(std::span<double> out) {
  for (std::size_t j = 0; j < germ_.components.size(); ++j) {
    if (germ_.components[j].distribution == Distribution::kGaussian) {
      out[j] = normal_(engine_);
    } else {
      const double ga = gamma_a_[j](engine_);
      const double gb = gamma_b_[j](engine_);
      out[j] = ga / (ga + gb);
    }
  }
}

std::vector<double> GermSampler::draw() {
  std::vector<double> out(germ_.components.size());
  draw(out);
  return out;
}

Eigen::MatrixXd sample_germ(const GermSpec& germ, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "sample count must be at least 1");
  GermSampler sampler(germ, seed);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(n, germ.dimension());
  for (int i = 0; i < n; ++i) sampler.draw(std::span<double>(out.row(i).data(), out.cols()));
  return out;
}

double gamma(double epsilon, GammaMode mode) {
  if (!(epsilon > 0.0 && epsilon <= 0.5)) {
    throw Error(ErrorCode::kInvalidRisk, "risk level must lie in (0, 0.5], got " + std::to_string(epsilon));
  }
  if (mode == GammaMode::kDistRobust) return std::sqrt((1.0 - epsilon) / epsilon);
  if (epsilon == 0.5) return 0.0;
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(boost::math::complement(standard, epsilon));
}

}  // namespace plmp
