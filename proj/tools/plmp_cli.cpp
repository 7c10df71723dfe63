#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "plmp/scenario.hpp"

namespace {

int report_error(const plmp::Error& e) {
  std::cerr << "error: " << e.what() << "\n";
  switch (e.code()) {
    case plmp::ErrorCode::kParseError:
    case plmp::ErrorCode::kValidationError:
    case plmp::ErrorCode::kIoError: return 2;
    case plmp::ErrorCode::kInfeasible: return 3;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local electricity market clearing with probabilistic LMPs"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "clear a scenario and write prices, agent runs and AC checks");
  std::string scenario_path;
  std::string out_dir;
  int samples = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  std::string gamma;
  int degree = 0;
  run_cmd->add_option("scenario", scenario_path, "scenario file (YAML)")->required()->check(CLI::ExistingFile);
  auto* out_opt = run_cmd->add_option("--out", out_dir, "output directory");
  auto* samples_opt = run_cmd->add_option("--samples", samples, "germ draws per price distribution")->check(CLI::Range(100, 100000000));
  auto* seed_opt = run_cmd->add_option("--seed", seed, "sampling seed");
  auto* eps_opt = run_cmd->add_option("--epsilon", epsilon, "chance-constraint risk level");
  auto* gamma_opt = run_cmd->add_option("--gamma", gamma, "risk multiplier")->check(CLI::IsMember({"gaussian", "dist-robust"}));
  auto* degree_opt = run_cmd->add_option("--degree", degree, "polynomial chaos degree")->check(CLI::Range(1, 10));

  auto* gen_cmd = app.add_subcommand("generate-grid", "write a random radial scenario as YAML");
  int buses = 179;
  std::uint64_t grid_seed = 1;
  std::string grid_out;
  gen_cmd->add_option("--buses", buses, "number of buses including the slack")->check(CLI::Range(5, 100000));
  gen_cmd->add_option("--seed", grid_seed, "generator seed");
  gen_cmd->add_option("-o,--output", grid_out, "file to write (default: stdout)");

  auto* val_cmd = app.add_subcommand("validate", "check a scenario file without solving it");
  std::string validate_path;
  val_cmd->add_option("scenario", validate_path, "scenario file (YAML)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const plmp::ScenarioConfig cfg = plmp::load_scenario(scenario_path);
      plmp::RunOptions opts;
      if (*out_opt) opts.output_dir = out_dir;
      if (*samples_opt) opts.samples = samples;
      if (*seed_opt) opts.seed = seed;
      if (*eps_opt) opts.epsilon = epsilon;
      if (*gamma_opt) opts.gamma_mode = gamma == "gaussian" ? plmp::GammaMode::kGaussian : plmp::GammaMode::kDistRobust;
      if (*degree_opt) opts.degree = degree;
      const plmp::RunReport report = plmp::run(cfg, opts);
      std::cout << "scenario " << report.scenario << ": objective " << report.objective << ", solver "
                << report.solver_seconds << " s, total " << report.total_seconds << " s\n";
      for (const auto& f : report.files) std::cout << "  wrote " << f << "\n";
    } else if (*gen_cmd) {
      plmp::SyntheticGridOptions go;
      go.buses = buses;
      go.seed = grid_seed;
      const std::string yaml = plmp::emit_scenario(plmp::generate_synthetic_grid(go));
      if (grid_out.empty()) {
        std::cout << yaml;
      } else {
        std::ofstream out(grid_out);
        if (!out) throw plmp::Error(plmp::ErrorCode::kIoError, "cannot write " + grid_out);
        out << yaml;
      }
    } else if (*val_cmd) {
      const plmp::ScenarioConfig cfg = plmp::load_scenario(validate_path);
      plmp::build_problem(cfg);
      std::cout << validate_path << ": ok (" << cfg.network.buses.size() << " buses, " << cfg.injections.size()
                << " injections, " << cfg.generators.size() << " generators, horizon " << cfg.horizon << ")\n";
    }
  } catch (const plmp::Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
