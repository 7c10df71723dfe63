#include <algorithm>
#include <cmath>
#include <random>

#include "plmp/scenario.hpp"

namespace plmp {

namespace {

// Normalized daily shapes, hour 0..23.
const std::vector<double> kResidential = {0.42, 0.38, 0.36, 0.35, 0.36, 0.42, 0.55, 0.68, 0.70, 0.66, 0.64, 0.65,
                                          0.66, 0.63, 0.62, 0.66, 0.75, 0.88, 1.00, 0.98, 0.90, 0.78, 0.62, 0.50};
const std::vector<double> kSolar = {0.00, 0.00, 0.00, 0.00, 0.00, 0.02, 0.08, 0.20, 0.38, 0.56, 0.72, 0.84,
                                    0.90, 0.86, 0.75, 0.58, 0.38, 0.18, 0.05, 0.00, 0.00, 0.00, 0.00, 0.00};

// Mean nodal injections at hour t, ignoring local generators.
Eigen::VectorXd mean_injections(const ScenarioConfig& cfg, int t, double load_factor, double pv_factor) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.network.branches.size()));
  for (const auto& inj : cfg.injections) {
    const double m = inj.mean[static_cast<std::size_t>(t)];
    p(inj.bus - 1) += inj.kind == InjectionKind::kLoad ? -load_factor * m : pv_factor * m;
  }
  return p;
}

}  // namespace

ScenarioConfig generate_synthetic_grid(const SyntheticGridOptions& o) {
  if (o.buses < 5) throw Error(ErrorCode::kInvalidArgument, "synthetic grids need at least 5 buses");
  std::mt19937_64 rng(derive_seed(o.seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  ScenarioConfig cfg;
  cfg.name = "synthetic-" + std::to_string(o.buses) + "-" + std::to_string(o.seed);
  cfg.description = "random radial feeder, 20 kV, 1 MVA base";
  cfg.germ.components = {GermComponent::gaussian(), GermComponent::beta_dist(5, 2), GermComponent::beta_dist(4, 2)};
  cfg.germ.degree = 2;
  cfg.slack = {1.0, 20.0, 100.0};

  const double z_base = cfg.network.base_kv * cfg.network.base_kv / cfg.network.base_mva;
  for (int id = 0; id < o.buses; ++id) cfg.network.buses.push_back({id, 0.95, 1.05});
  for (int bus = 1; bus < o.buses; ++bus) {
    const int parent = static_cast<int>(unit(rng) * bus);
    const double km = uniform(0.3, 1.5);
    cfg.network.branches.push_back({parent, bus, km * uniform(0.3, 0.6) / z_base, km * uniform(0.3, 0.45) / z_base, 1.0});
  }

  const double mean_germ1 = 5.0 / 7.0;
  for (int bus = 1; bus < o.buses; ++bus) {
    if (unit(rng) < o.load_density) {
      UncertainInjection load;
      load.bus = bus;
      load.kind = InjectionKind::kLoad;
      load.germ_index = unit(rng) < 0.5 ? 0 : 1;
      const double peak = uniform(0.05, 0.25);
      // Beta(5,2) loads fluctuate by the germ's own spread.
      const double frac = load.germ_index == 0 ? 0.1 : 0.3 / mean_germ1;
      for (double v : kResidential) {
        load.mean.push_back(peak * v);
        load.scale.push_back(frac * peak * v);
      }
      cfg.injections.push_back(load);
    }
    if (unit(rng) < o.pv_density) {
      UncertainInjection pv;
      pv.bus = bus;
      pv.kind = InjectionKind::kPv;
      pv.germ_index = 2;
      const double peak = uniform(0.05, 0.3);
      for (double v : kSolar) {
        pv.mean.push_back(peak * v);
        pv.scale.push_back(0.5 * peak * v);
      }
      cfg.injections.push_back(pv);
    }
  }

  FlexGen gen;
  gen.bus = std::max(1, static_cast<int>(std::lround(0.39 * o.buses)));
  gen.p_min = 0.0;
  gen.p_max = 2.0;
  gen.c = 10.0;
  gen.C1 = 5.0;
  gen.C2 = 50.0;
  cfg.generators.push_back(gen);

  // Shrink loads and PV until the mean dispatch with an idle generator keeps
  // voltages well inside the band; then size flow limits around it.
  RadialNetwork net = build_network(cfg.network);
  double factor = 1.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    double v_lo = 1e9, v_hi = -1e9;
    for (int t = 0; t < cfg.horizon; ++t) {
      for (double pv_factor : {0.0, 1.0}) {
        const Eigen::VectorXd p = mean_injections(cfg, t, factor, factor * pv_factor);
        const Eigen::VectorXd q = p.cwiseMin(0.0) * std::tan(std::acos(0.95));
        const Eigen::VectorXd v = voltage_map(net, p, q);
        v_lo = std::min(v_lo, v.minCoeff());
        v_hi = std::max(v_hi, v.maxCoeff());
      }
    }
    if (v_lo > 0.965 * 0.965 && v_hi < 1.035 * 1.035) break;
    factor *= 0.9;
  }
  for (auto& inj : cfg.injections) {
    for (auto& v : inj.mean) v *= factor;
    for (auto& v : inj.scale) v *= factor;
  }
  Eigen::VectorXd peak_flow = Eigen::VectorXd::Zero(net.size());
  for (int t = 0; t < cfg.horizon; ++t) {
    for (double pv_factor : {0.0, 1.0}) {
      const Eigen::VectorXd p = mean_injections(cfg, t, 1.0, pv_factor);
      peak_flow = peak_flow.cwiseMax(branch_flows(net, p, p).P.cwiseAbs());
    }
  }
  for (std::size_t l = 0; l < cfg.network.branches.size(); ++l) {
    cfg.network.branches[l].f_max = 2.0 * peak_flow(static_cast<Eigen::Index>(l)) + 0.2;
  }
  cfg.agents.push_back({std::min(o.buses - 1, 5), StorageSpec::with_capacity(0.5), {"rule", "dp", "hindsight"}});
  cfg.sampling.paths = 100;
  cfg.validation.samples = 20;
  cfg.output_dir = "out-" + cfg.name;
  validate_scenario(cfg);
  return cfg;
}

}  // namespace plmp
