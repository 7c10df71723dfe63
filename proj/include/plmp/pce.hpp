#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "plmp/error.hpp"

namespace plmp {

enum class Distribution { kGaussian, kBeta };
enum class PolynomialFamily { kHermite, kJacobi };

/// One independent coordinate of the stochastic germ. Gaussian coordinates
/// are standard normal; Beta coordinates live on [0, 1] with shapes (alpha, beta).
struct GermComponent {
  Distribution distribution = Distribution::kGaussian;
  double alpha = 0.0;
  double beta = 0.0;

  static GermComponent gaussian() { return {}; }
  static GermComponent beta_dist(double a, double b) { return {Distribution::kBeta, a, b}; }

  PolynomialFamily family() const {
    return distribution == Distribution::kGaussian ? PolynomialFamily::kHermite
                                                   : PolynomialFamily::kJacobi;
  }
  double mean() const;
  double variance() const;
  double stddev() const;
  bool in_support(double value) const;

  friend bool operator==(const GermComponent&, const GermComponent&) = default;
};

struct GermSpec {
  std::vector<GermComponent> components;
  int degree = 2;

  int dimension() const { return static_cast<int>(components.size()); }
  friend bool operator==(const GermSpec&, const GermSpec&) = default;
};

using MultiIndex = std::vector<int>;

/// Orthonormal univariate polynomials in three-term recurrence form:
///   b[n+1] psi_{n+1}(x) = (x - a[n]) psi_n(x) - b[n] psi_{n-1}(x),  psi_0 = 1.
struct Recurrence {
  std::vector<double> a;  ///< a[0..p-1]
  std::vector<double> b;  ///< b[0..p], b[0] = 1 (probability measure)
};

Recurrence recurrence_for(const GermComponent& component, int degree);

/// Total-degree orthonormal product basis over a germ. Index 0 is the
/// constant polynomial; multi-indices follow graded-lexicographic order.
class PceBasis {
 public:
  explicit PceBasis(GermSpec germ);

  const GermSpec& germ() const { return germ_; }
  int size() const { return static_cast<int>(multi_indices_.size()); }
  int dimension() const { return germ_.dimension(); }
  int degree() const { return germ_.degree; }
  const std::vector<MultiIndex>& multi_indices() const { return multi_indices_; }

  /// Position of the degree-1 polynomial in coordinate j.
  int linear_term(int component) const;

  /// Psi_0..Psi_{K-1} at a germ realization. Throws OutOfSupport.
  Eigen::VectorXd evaluate(std::span<const double> xi) const;
  void evaluate_into(std::span<const double> xi, Eigen::Ref<Eigen::VectorXd> out) const;

 private:
  GermSpec germ_;
  std::vector<MultiIndex> multi_indices_;
  std::vector<Recurrence> recurrences_;
};

/// K = (p + d)! / (p! d!)
std::int64_t basis_size(int dimension, int degree);

/// Throws UnsupportedDistribution for invalid shapes, InvalidArgument for empty germs.
PceBasis build_basis(const GermSpec& germ);
Eigen::VectorXd eval_basis(const PceBasis& basis, std::span<const double> xi);

/// Coefficients of one random scalar in an orthonormal basis.
struct PceSeries {
  Eigen::VectorXd coefficients;

  double mean() const { return coefficients.size() ? coefficients(0) : 0.0; }
  double variance() const {
    return coefficients.size() > 1 ? coefficients.tail(coefficients.size() - 1).squaredNorm() : 0.0;
  }
  double stddev() const;
  double evaluate(const Eigen::VectorXd& basis_values) const { return coefficients.dot(basis_values); }
};

inline double mean(const PceSeries& s) { return s.mean(); }
inline double variance(const PceSeries& s) { return s.variance(); }
inline double stddev(const PceSeries& s) { return s.stddev(); }

/// Exact expansion of offset + scale * xi_j. Throws IndexOutOfRange.
PceSeries expand_affine_input(const PceBasis& basis, int germ_index, double offset, double scale);

/// Gauss quadrature rule for one germ coordinate (Golub-Welsch).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_quadrature(const GermComponent& component, int num_nodes);

/// SplitMix64 step, used to derive independent child seeds.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Reproducible germ sampler. Distinct streams from one seed are independent.
class GermSampler {
 public:
  GermSampler(GermSpec germ, std::uint64_t seed, std::uint64_t stream = 0);

  void draw(std::span<double> out);
  std::vector<double> draw();

 private:
  GermSpec germ_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::vector<std::gamma_distribution<double>> gamma_a_;
  std::vector<std::gamma_distribution<double>> gamma_b_;
};

/// n x d matrix of i.i.d. germ draws (one row per sample).
Eigen::MatrixXd sample_germ(const GermSpec& germ, int n, std::uint64_t seed);

enum class GammaMode { kGaussian, kDistRobust };

/// Risk multiplier: Phi^-1(1 - eps) or sqrt((1 - eps) / eps). Throws InvalidRisk
/// outside 0 < eps <= 0.5.
double gamma(double epsilon, GammaMode mode);

}  // namespace plmp
