#include "plmp/market.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

namespace plmp {

namespace {

// Stream offset keeping path draws apart from per-timestep distribution draws.
constexpr std::uint64_t kPathStreamBase = 1ULL << 32;

void check_samples(int n) {
  if (n < 100) throw Error(ErrorCode::kInvalidArgument, "price distributions need at least 100 samples");
}

Eigen::MatrixXd timestep_draws(const MarketSolution& market, int t, int n, std::uint64_t seed) {
  GermSampler sampler(market.basis().germ(), seed, static_cast<std::uint64_t>(t));
  const int d = market.basis().dimension();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> draws(n, d);
  for (int i = 0; i < n; ++i) sampler.draw(std::span<double>(draws.row(i).data(), static_cast<std::size_t>(d)));
  return draws;
}

// Basis values for every draw, K x n.
Eigen::MatrixXd basis_values(const PceBasis& basis, const Eigen::MatrixXd& draws) {
  Eigen::MatrixXd psi(basis.size(), draws.rows());
  std::vector<double> xi(static_cast<std::size_t>(draws.cols()));
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < draws.cols(); ++j) xi[static_cast<std::size_t>(j)] = draws(i, j);
    basis.evaluate_into(xi, psi.col(i));
  }
  return psi;
}

PriceDistribution summarize(int bus, int t, std::vector<double> samples) {
  PriceDistribution dist;
  dist.bus = bus;
  dist.t = t;
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < kQuantileLevels.size(); ++i) dist.quantiles[i] = quantile_sorted(sorted, kQuantileLevels[i]);
  dist.samples = std::move(samples);
  return dist;
}

}  // namespace

double PriceDistribution::mean() const {
  if (samples.empty()) return 0.0;
  return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

MarketSolution::MarketSolution(CcOpfSolution solution, std::shared_ptr<const PceBasis> basis, int num_buses)
    : solution_(std::move(solution)), basis_(std::move(basis)), num_buses_(num_buses) {
  const int N = num_buses_ - 1;
  for (const auto& step : solution_.steps) {
    for (int col = 0; col < N; ++col) {
      Plmp p;
      p.bus = RadialNetwork::bus_of(col);
      p.t = step.t;
      p.active.coefficients = step.lambda.row(col).transpose();
      p.reactive.coefficients = step.mu.row(col).transpose();
      plmps_.push_back(std::move(p));
    }
  }
}

const Plmp& MarketSolution::plmp(int bus, int t) const {
  const int N = num_buses_ - 1;
  if (bus < 1 || bus > N || t < 0 || t >= horizon()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "no price for bus " + std::to_string(bus) + " at t = " + std::to_string(t));
  }
  return plmps_[static_cast<std::size_t>(t * N + bus - 1)];
}

MarketSolution extract_plmps(const CcOpfSolution& solution, const CcOpfProblem& problem) {
  const int N = problem.network->size();
  const int K = problem.basis->size();
  for (const auto& step : solution.steps) {
    if (step.lambda.rows() != N || step.lambda.cols() != K || step.mu.rows() != N || step.mu.cols() != K) {
      throw Error(ErrorCode::kMissingDuals, "timestep " + std::to_string(step.t) + " has no balance duals");
    }
  }
  return MarketSolution(solution, problem.basis, problem.network->num_buses());
}

RealtimePrice realtime_price(const MarketSolution& market, int bus, int t, std::span<const double> germ) {
  const Plmp& p = market.plmp(bus, t);
  const Eigen::VectorXd psi = market.basis().evaluate(germ);
  return {p.active.evaluate(psi), p.reactive.evaluate(psi)};
}

double delta_price(const MarketSolution& market, int bus, int t, std::span<const double> germ) {
  return realtime_price(market, bus, t, germ).active - market.plmp(bus, t).day_ahead();
}

double quantile_sorted(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

PriceDistribution price_distribution(const MarketSolution& market, int bus, int t, int n, std::uint64_t seed) {
  check_samples(n);
  const Plmp& p = market.plmp(bus, t);
  const Eigen::MatrixXd psi = basis_values(market.basis(), timestep_draws(market, t, n, seed));
  const Eigen::VectorXd values = psi.transpose() * p.active.coefficients;
  return summarize(bus, t, std::vector<double>(values.data(), values.data() + values.size()));
}

std::vector<Eigen::MatrixXd> sample_germ_paths(const GermSpec& germ, int num_paths, int horizon,
                                               std::uint64_t seed) {
  if (num_paths < 1 || horizon < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one path and one hour");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(num_paths));
  const int d = germ.dimension();
  std::vector<double> xi(static_cast<std::size_t>(d));
  for (int i = 0; i < num_paths; ++i) {
    GermSampler sampler(germ, seed, kPathStreamBase + static_cast<std::uint64_t>(i));
    Eigen::MatrixXd path(horizon, d);
    for (int t = 0; t < horizon; ++t) {
      sampler.draw(xi);
      for (int j = 0; j < d; ++j) path(t, j) = xi[static_cast<std::size_t>(j)];
    }
    out.push_back(std::move(path));
  }
  return out;
}

void write_prices_da(std::ostream& out, const MarketSolution& market) {
  out << std::setprecision(12);
  out << "t,bus,pi_da_active,pi_da_reactive\n";
  for (const auto& p : market.plmps()) {
    out << p.t << ',' << p.bus << ',' << p.active.mean() << ',' << p.reactive.mean() << '\n';
  }
}

void write_rt_samples(std::ostream& out, const MarketSolution& market, int n, std::uint64_t seed) {
  check_samples(n);
  out << std::setprecision(12);
  out << "sample,t,bus,pi_rt\n";
  const int N = market.num_buses() - 1;
  for (int t = 0; t < market.horizon(); ++t) {
    const Eigen::MatrixXd psi = basis_values(market.basis(), timestep_draws(market, t, n, seed));
    Eigen::MatrixXd lambda(N, market.basis().size());
    for (int bus = 1; bus <= N; ++bus) lambda.row(bus - 1) = market.plmp(bus, t).active.coefficients.transpose();
    const Eigen::MatrixXd prices = lambda * psi;  // N x n
    for (int i = 0; i < n; ++i) {
      for (int bus = 1; bus <= N; ++bus) out << i << ',' << t << ',' << bus << ',' << prices(bus - 1, i) << '\n';
    }
  }
}

void write_price_quantiles(std::ostream& out, const MarketSolution& market, int n, std::uint64_t seed) {
  check_samples(n);
  out << std::setprecision(12);
  out << "t,bus,q01,q05,q25,q50,q75,q95,q99\n";
  const int N = market.num_buses() - 1;
  for (int t = 0; t < market.horizon(); ++t) {
    const Eigen::MatrixXd psi = basis_values(market.basis(), timestep_draws(market, t, n, seed));
    for (int bus = 1; bus <= N; ++bus) {
      const Eigen::VectorXd values = psi.transpose() * market.plmp(bus, t).active.coefficients;
      const PriceDistribution dist = summarize(bus, t, std::vector<double>(values.data(), values.data() + values.size()));
      out << t << ',' << bus;
      for (double q : dist.quantiles) out << ',' << q;
      out << '\n';
    }
  }
}

}  // namespace plmp
