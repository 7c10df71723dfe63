#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "plmp/ccopf.hpp"
#include "plmp/pce.hpp"

namespace plmp {

/// Probabilistic LMP of one bus at one timestep. Positive prices are paid
/// by consumers [currency/p.u.].
struct Plmp {
  int bus = 0;
  int t = 0;
  PceSeries active;
  PceSeries reactive;

  double day_ahead() const { return active.mean(); }
};

inline constexpr std::array<double, 7> kQuantileLevels = {0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99};

struct PriceDistribution {
  int bus = 0;
  int t = 0;
  std::vector<double> samples;
  std::array<double, 7> quantiles{};  ///< at kQuantileLevels
  double mean() const;
};

/// Cleared market: primal solution plus one Plmp per (non-slack bus, t).
class MarketSolution {
 public:
  MarketSolution(CcOpfSolution solution, std::shared_ptr<const PceBasis> basis, int num_buses);

  const CcOpfSolution& solution() const { return solution_; }
  const PceBasis& basis() const { return *basis_; }
  std::shared_ptr<const PceBasis> basis_ptr() const { return basis_; }
  int horizon() const { return static_cast<int>(solution_.steps.size()); }
  int num_buses() const { return num_buses_; }

  /// Throws IndexOutOfRange for the slack bus or unknown (bus, t).
  const Plmp& plmp(int bus, int t) const;
  const std::vector<Plmp>& plmps() const { return plmps_; }

 private:
  CcOpfSolution solution_;
  std::shared_ptr<const PceBasis> basis_;
  int num_buses_ = 0;
  std::vector<Plmp> plmps_;  ///< t-major, then bus 1..N
};

/// Packages the balance duals as price series. Throws MissingDuals when a
/// timestep carries no dual coefficients.
MarketSolution extract_plmps(const CcOpfSolution& solution, const CcOpfProblem& problem);

struct RealtimePrice {
  double active = 0.0;
  double reactive = 0.0;
};

/// Expansion evaluated at a measured germ. Throws OutOfSupport.
RealtimePrice realtime_price(const MarketSolution& market, int bus, int t, std::span<const double> germ);

/// pi_RT - pi_DA for the active price.
double delta_price(const MarketSolution& market, int bus, int t, std::span<const double> germ);

/// Linear interpolation of sorted data at h = (n - 1) p.
double quantile_sorted(std::span<const double> sorted, double level);

/// n i.i.d. realtime prices. Draws depend only on (seed, t), so every bus at
/// a given t sees the same germ realizations. Requires n >= 100.
PriceDistribution price_distribution(const MarketSolution& market, int bus, int t, int n, std::uint64_t seed);

/// Germ trajectories for path simulations: draws[path](t, j). Hours are
/// independent of each other and of the price_distribution streams.
std::vector<Eigen::MatrixXd> sample_germ_paths(const GermSpec& germ, int num_paths, int horizon,
                                               std::uint64_t seed);

// CSV emitters.
void write_prices_da(std::ostream& out, const MarketSolution& market);
void write_rt_samples(std::ostream& out, const MarketSolution& market, int n, std::uint64_t seed);
void write_price_quantiles(std::ostream& out, const MarketSolution& market, int n, std::uint64_t seed);

}  // namespace plmp
