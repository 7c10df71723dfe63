#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plmp/agents.hpp"
#include "plmp/ccopf.hpp"
#include "plmp/market.hpp"
#include "plmp/pce.hpp"

namespace plmp {

/// Voltage limits are magnitudes [p.u.]; they are squared when the network is built.
struct BusConfig {
  int id = 0;
  double v_min = 0.95;
  double v_max = 1.05;

  friend bool operator==(const BusConfig&, const BusConfig&) = default;
};

struct BranchConfig {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double f_max = 0.0;

  friend bool operator==(const BranchConfig&, const BranchConfig&) = default;
};

struct NetworkConfig {
  double base_mva = 1.0;       ///< documentation of the per-unit base
  double base_kv = 20.0;
  double slack_voltage = 1.0;  ///< magnitude [p.u.]
  std::vector<BusConfig> buses;
  std::vector<BranchConfig> branches;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct AgentConfig {
  int bus = 0;
  StorageSpec storage;
  std::vector<std::string> policies{"rule", "dp", "hindsight"};

  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

struct SamplingConfig {
  int samples = 1000;       ///< germ draws per price distribution
  int paths = 500;          ///< price paths for the agent simulations
  std::uint64_t seed = 42;

  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

struct ValidationConfig {
  bool enabled = true;
  int samples = 100;           ///< germ paths pushed through the AC flow
  std::vector<int> timesteps;  ///< empty means every timestep

  friend bool operator==(const ValidationConfig&, const ValidationConfig&) = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string description;
  NetworkConfig network;
  GermSpec germ;
  int horizon = 24;
  double epsilon = 0.05;
  GammaMode gamma_mode = GammaMode::kGaussian;
  int threads = 1;
  SlackCost slack;
  std::vector<FlexGen> generators;
  std::vector<UncertainInjection> injections;
  SamplingConfig sampling;
  std::vector<AgentConfig> agents;
  DpOptions dp;
  ValidationConfig validation;
  std::string output_dir = "out";

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Reads and validates a scenario file. Throws ParseError for malformed
/// YAML and ValidationError (with the offending line) for bad content.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "<string>");

/// Fully explicit YAML; parse_scenario(emit_scenario(c)) == c.
std::string emit_scenario(const ScenarioConfig& config);

/// Cross-reference and range checks. Throws ValidationError.
void validate_scenario(const ScenarioConfig& config);

RadialNetwork build_network(const NetworkConfig& config);
CcOpfProblem build_problem(const ScenarioConfig& config);

struct SyntheticGridOptions {
  int buses = 179;
  std::uint64_t seed = 1;
  double load_density = 0.8;
  double pv_density = 0.4;
};

/// Random radial feeder with loads, PV and one local generator, scaled so
/// the mean dispatch respects voltage and flow limits.
ScenarioConfig generate_synthetic_grid(const SyntheticGridOptions& options);

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<GammaMode> gamma_mode;
  std::optional<int> degree;
};

void apply_overrides(ScenarioConfig& config, const RunOptions& options);

struct StepReport {
  int t = 0;
  std::string status;
  int iterations = 0;
  double objective = 0.0;
  double relative_gap = 0.0;
  double equality_residual = 0.0;
  double solve_seconds = 0.0;
  std::vector<std::string> binding;
};

struct RunReport {
  std::string scenario;
  std::vector<std::pair<std::string, double>> stage_seconds;
  double solver_seconds = 0.0;
  double total_seconds = 0.0;
  double objective = 0.0;
  std::vector<StepReport> steps;
  std::vector<std::pair<std::string, double>> final_regret;  ///< label, average final regret
  std::vector<std::string> files;

  std::string to_json() const;
};

/// Policy runs of one agent on every germ path (path_id = path index).
struct AgentSimulation {
  DpTables tables;
  std::vector<AgentRun> hindsight;
  std::vector<AgentRun> rule;  ///< empty unless the agent lists the policy
  std::vector<AgentRun> dp;
};

/// Builds the DP tables from price_distribution samples at the agent's bus
/// and runs hindsight plus the listed policies on the delta-price paths.
AgentSimulation simulate_agent(const MarketSolution& market, const ScenarioConfig& config, const AgentConfig& agent,
                               const std::vector<Eigen::MatrixXd>& germ_paths);

/// build -> clear -> prices -> distributions -> agents -> AC validation ->
/// CSVs plus run_report.json in the output directory.
RunReport run(const ScenarioConfig& config, const RunOptions& options = {});

}  // namespace plmp
