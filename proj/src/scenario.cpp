#include "plmp/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace plmp {

namespace {

// Source lines of list items, used to point validation errors at the file.
struct SourceLines {
  std::vector<int> branches, generators, injections, agents;
};

int line_of(const YAML::Node& node) { return node.Mark().line + 1; }

[[noreturn]] void fail_at(const YAML::Node& node, const std::string& msg) {
  throw Error(ErrorCode::kValidationError, "line " + std::to_string(line_of(node)) + ": " + msg);
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  if (!map.IsMap()) fail_at(map, where + " must be a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail_at(kv.first, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T read(const YAML::Node& map, const std::string& key, const T& fallback) {
  const YAML::Node node = map[key];
  if (!node) return fallback;
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail_at(node, "field '" + key + "' has the wrong type");
  }
}

template <typename T>
T require(const YAML::Node& map, const std::string& key, const std::string& where) {
  const YAML::Node node = map[key];
  if (!node) fail_at(map, where + " is missing required field '" + key + "'");
  return read<T>(map, key, T{});
}

std::vector<double> read_series(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail_at(node, what + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& v : node) {
    try {
      out.push_back(v.as<double>());
    } catch (const YAML::Exception&) {
      fail_at(v, what + " must be a list of numbers");
    }
  }
  return out;
}

GammaMode parse_gamma(const YAML::Node& node) {
  const std::string s = node.as<std::string>();
  if (s == "gaussian") return GammaMode::kGaussian;
  if (s == "dist-robust" || s == "dist_robust") return GammaMode::kDistRobust;
  fail_at(node, "gamma must be 'gaussian' or 'dist-robust'");
}

std::string gamma_name(GammaMode m) { return m == GammaMode::kGaussian ? "gaussian" : "dist-robust"; }

void parse_network(const YAML::Node& node, ScenarioConfig& cfg, SourceLines& lines) {
  check_keys(node, {"base_mva", "base_kv", "slack_voltage", "v_min", "v_max", "buses", "branches"}, "network");
  NetworkConfig& net = cfg.network;
  net.base_mva = read(node, "base_mva", net.base_mva);
  net.base_kv = read(node, "base_kv", net.base_kv);
  net.slack_voltage = read(node, "slack_voltage", net.slack_voltage);
  const double v_min = read(node, "v_min", 0.95);
  const double v_max = read(node, "v_max", 1.05);
  const YAML::Node branches = node["branches"];
  if (!branches || !branches.IsSequence()) fail_at(node, "network needs a 'branches' list");
  for (const auto& b : branches) {
    check_keys(b, {"from", "to", "r", "x", "f_max"}, "branch");
    BranchConfig bc;
    bc.from = require<int>(b, "from", "branch");
    bc.to = require<int>(b, "to", "branch");
    bc.r = require<double>(b, "r", "branch");
    bc.x = require<double>(b, "x", "branch");
    bc.f_max = require<double>(b, "f_max", "branch");
    net.branches.push_back(bc);
    lines.branches.push_back(line_of(b));
  }
  std::map<int, BusConfig> buses;
  for (int id = 0; id <= static_cast<int>(net.branches.size()); ++id) buses[id] = {id, v_min, v_max};
  if (const YAML::Node list = node["buses"]) {
    if (!list.IsSequence()) fail_at(list, "'buses' must be a list");
    for (const auto& b : list) {
      check_keys(b, {"id", "v_min", "v_max"}, "bus");
      const int id = require<int>(b, "id", "bus");
      if (!buses.count(id)) {
        fail_at(b, "bus " + std::to_string(id) + " outside 0.." + std::to_string(net.branches.size()));
      }
      buses[id] = {id, read(b, "v_min", v_min), read(b, "v_max", v_max)};
    }
  }
  for (const auto& [id, bus] : buses) net.buses.push_back(bus);
}

void parse_germ(const YAML::Node& node, ScenarioConfig& cfg) {
  check_keys(node, {"degree", "components"}, "germ");
  cfg.germ.degree = read(node, "degree", 2);
  const YAML::Node comps = node["components"];
  if (!comps || !comps.IsSequence() || comps.size() == 0) fail_at(node, "germ needs a non-empty 'components' list");
  for (const auto& c : comps) {
    check_keys(c, {"distribution", "alpha", "beta"}, "germ component");
    const std::string dist = require<std::string>(c, "distribution", "germ component");
    if (dist == "gaussian") {
      cfg.germ.components.push_back(GermComponent::gaussian());
    } else if (dist == "beta") {
      cfg.germ.components.push_back(
          GermComponent::beta_dist(require<double>(c, "alpha", "beta component"), require<double>(c, "beta", "beta component")));
    } else {
      fail_at(c, "unsupported distribution '" + dist + "'");
    }
  }
}

void parse_injections(const YAML::Node& node, const std::map<std::string, std::vector<double>>& profiles,
                      ScenarioConfig& cfg, SourceLines& lines) {
  if (!node.IsSequence()) fail_at(node, "'injections' must be a list");
  for (const auto& item : node) {
    check_keys(item, {"bus", "buses", "kind", "germ", "mean", "scale", "profile", "peak", "scale_frac", "power_factor"},
               "injection");
    std::vector<int> buses;
    if (item["bus"]) buses.push_back(read<int>(item, "bus", 0));
    if (const YAML::Node list = item["buses"]) {
      for (const auto& b : list) buses.push_back(b.as<int>());
    }
    if (buses.empty()) fail_at(item, "injection needs 'bus' or 'buses'");
    const std::string kind = require<std::string>(item, "kind", "injection");
    if (kind != "load" && kind != "pv") fail_at(item, "injection kind must be 'load' or 'pv'");

    UncertainInjection inj;
    inj.kind = kind == "load" ? InjectionKind::kLoad : InjectionKind::kPv;
    inj.germ_index = require<int>(item, "germ", "injection");
    inj.power_factor = read(item, "power_factor", 0.95);
    if (item["mean"]) {
      inj.mean = read_series(item["mean"], "mean");
    } else if (item["profile"]) {
      const std::string name = read<std::string>(item, "profile", "");
      const auto it = profiles.find(name);
      if (it == profiles.end()) fail_at(item["profile"], "unknown profile '" + name + "'");
      const double peak = require<double>(item, "peak", "profile-based injection");
      for (double v : it->second) inj.mean.push_back(peak * v);
    } else {
      fail_at(item, "injection needs 'mean' or 'profile'");
    }
    if (item["scale"]) {
      inj.scale = read_series(item["scale"], "scale");
    } else {
      const double frac = require<double>(item, "scale_frac", "injection without 'scale'");
      for (double m : inj.mean) inj.scale.push_back(frac * m);
    }
    for (int bus : buses) {
      inj.bus = bus;
      cfg.injections.push_back(inj);
      lines.injections.push_back(line_of(item));
    }
  }
}

void parse_generators(const YAML::Node& node, ScenarioConfig& cfg, SourceLines& lines) {
  if (!node.IsSequence()) fail_at(node, "'generators' must be a list");
  for (const auto& g : node) {
    check_keys(g, {"bus", "p_min", "p_max", "q_min", "q_max", "c", "C1", "C2"}, "generator");
    FlexGen gen;
    gen.bus = require<int>(g, "bus", "generator");
    gen.p_min = require<double>(g, "p_min", "generator");
    gen.p_max = require<double>(g, "p_max", "generator");
    if (g["q_min"]) gen.q_min = read<double>(g, "q_min", 0.0);
    if (g["q_max"]) gen.q_max = read<double>(g, "q_max", 0.0);
    gen.c = read(g, "c", 0.0);
    gen.C1 = read(g, "C1", 0.0);
    gen.C2 = read(g, "C2", 0.0);
    cfg.generators.push_back(gen);
    lines.generators.push_back(line_of(g));
  }
}

void parse_agents(const YAML::Node& node, ScenarioConfig& cfg, SourceLines& lines) {
  if (!node.IsSequence()) fail_at(node, "'agents' must be a list");
  for (const auto& a : node) {
    check_keys(a, {"bus", "E_cap", "P_cap", "E_init", "E_end", "dt", "policies"}, "agent");
    AgentConfig ag;
    ag.bus = require<int>(a, "bus", "agent");
    ag.storage = StorageSpec::with_capacity(require<double>(a, "E_cap", "agent"));
    ag.storage.P_cap = read(a, "P_cap", ag.storage.P_cap);
    ag.storage.E_init = read(a, "E_init", ag.storage.E_init);
    ag.storage.E_end = read(a, "E_end", ag.storage.E_end);
    ag.storage.dt = read(a, "dt", ag.storage.dt);
    if (const YAML::Node pol = a["policies"]) {
      ag.policies.clear();
      for (const auto& p : pol) {
        const std::string name = p.as<std::string>();
        if (name != "rule" && name != "dp" && name != "hindsight") fail_at(p, "unknown policy '" + name + "'");
        ag.policies.push_back(name);
      }
    }
    cfg.agents.push_back(ag);
    lines.agents.push_back(line_of(a));
  }
}

std::string where(const std::vector<int>& lines, std::size_t i) {
  return i < lines.size() ? "line " + std::to_string(lines[i]) + ": " : "";
}

void validate_impl(const ScenarioConfig& c, const SourceLines& lines) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kValidationError, msg); };
  const int num_buses = static_cast<int>(c.network.buses.size());
  auto bus_ok = [&](int bus) { return bus >= 1 && bus < num_buses; };

  if (c.horizon < 2) fail("horizon must be at least 2");
  if (!(c.epsilon > 0.0 && c.epsilon <= 0.5)) fail("epsilon must lie in (0, 0.5]");
  if (c.germ.components.empty()) fail("germ needs at least one component");
  if (c.germ.degree < 1) fail("germ degree must be at least 1");
  for (const auto& comp : c.germ.components) {
    if (comp.distribution == Distribution::kBeta && !(comp.alpha > 0.0 && comp.beta > 0.0)) {
      fail("Beta germ shapes must be positive");
    }
  }
  if (c.threads < 1) fail("threads must be at least 1");
  if (!(c.network.slack_voltage > 0.0)) fail("slack voltage must be positive");
  for (std::size_t i = 0; i < c.network.branches.size(); ++i) {
    const auto& b = c.network.branches[i];
    if (b.from < 0 || b.from >= num_buses || b.to < 0 || b.to >= num_buses) {
      fail(where(lines.branches, i) + "branch " + std::to_string(b.from) + "-" + std::to_string(b.to) +
           " references a nonexistent bus");
    }
    if (b.r < 0.0 || b.x < 0.0 || !(b.f_max > 0.0)) {
      fail(where(lines.branches, i) + "branch " + std::to_string(b.from) + "-" + std::to_string(b.to) +
           " needs r >= 0, x >= 0, f_max > 0");
    }
  }
  for (const auto& b : c.network.buses) {
    if (!(b.v_min > 0.0 && b.v_min < b.v_max)) fail("bus " + std::to_string(b.id) + " needs 0 < v_min < v_max");
  }
  for (std::size_t i = 0; i < c.injections.size(); ++i) {
    const auto& inj = c.injections[i];
    const std::string at = where(lines.injections, i);
    if (!bus_ok(inj.bus)) fail(at + "injection references nonexistent bus " + std::to_string(inj.bus));
    if (inj.germ_index < 0 || inj.germ_index >= c.germ.dimension()) {
      fail(at + "injection at bus " + std::to_string(inj.bus) + " cites germ index " + std::to_string(inj.germ_index));
    }
    if (static_cast<int>(inj.mean.size()) != c.horizon || static_cast<int>(inj.scale.size()) != c.horizon) {
      fail(at + "injection at bus " + std::to_string(inj.bus) + " needs " + std::to_string(c.horizon) + " values");
    }
    if (!(inj.power_factor > 0.0 && inj.power_factor <= 1.0)) fail(at + "power factor must lie in (0, 1]");
    for (int t = 0; t < c.horizon; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      if (inj.kind == InjectionKind::kLoad && inj.mean[ut] < 0.0) fail(at + "load mean must be non-negative");
      if (inj.kind == InjectionKind::kPv && inj.scale[ut] < 0.0) fail(at + "PV scale must be non-negative");
    }
  }
  for (std::size_t i = 0; i < c.generators.size(); ++i) {
    const auto& g = c.generators[i];
    const std::string at = where(lines.generators, i);
    if (!bus_ok(g.bus)) fail(at + "generator references nonexistent bus " + std::to_string(g.bus));
    if (g.p_min > g.p_max || g.reactive_min() > g.reactive_max()) fail(at + "generator bounds are inverted");
    if (g.C1 < 0.0 || g.C2 < 0.0) fail(at + "generator quadratic costs must be non-negative");
  }
  if (c.slack.C1 < 0.0 || c.slack.C2 < 0.0) fail("slack quadratic costs must be non-negative");
  for (std::size_t i = 0; i < c.agents.size(); ++i) {
    const auto& a = c.agents[i];
    const std::string at = where(lines.agents, i);
    if (!bus_ok(a.bus)) fail(at + "agent references nonexistent bus " + std::to_string(a.bus));
    try {
      validate_storage(a.storage);
    } catch (const Error& e) {
      fail(at + e.what());
    }
    if (a.policies.empty()) fail(at + "agent needs at least one policy");
  }
  if (c.sampling.samples < 100) fail("sampling.samples must be at least 100");
  if (c.sampling.paths < 1) fail("sampling.paths must be at least 1");
  if (c.dp.levels < 2) fail("dp.levels must be at least 2");
  if (c.validation.samples < 1 || c.validation.samples > c.sampling.paths) {
    fail("validation.samples must lie in 1..sampling.paths");
  }
  for (int t : c.validation.timesteps) {
    if (t < 0 || t >= c.horizon) fail("validation timestep " + std::to_string(t) + " outside horizon");
  }
}

ScenarioConfig parse_node(const YAML::Node& root) {
  if (!root.IsMap()) throw Error(ErrorCode::kParseError, "scenario file must be a mapping");
  check_keys(root,
             {"name", "description", "network", "germ", "market", "slack", "generators", "profiles", "injections",
              "sampling", "agents", "dp", "validation", "output"},
             "scenario");
  ScenarioConfig cfg;
  SourceLines lines;
  cfg.name = read<std::string>(root, "name", cfg.name);
  cfg.description = read<std::string>(root, "description", "");
  if (!root["network"]) fail_at(root, "scenario needs a 'network' section");
  parse_network(root["network"], cfg, lines);
  if (!root["germ"]) fail_at(root, "scenario needs a 'germ' section");
  parse_germ(root["germ"], cfg);
  if (const YAML::Node m = root["market"]) {
    check_keys(m, {"horizon", "epsilon", "gamma", "threads"}, "market");
    cfg.horizon = read(m, "horizon", cfg.horizon);
    cfg.epsilon = read(m, "epsilon", cfg.epsilon);
    if (m["gamma"]) cfg.gamma_mode = parse_gamma(m["gamma"]);
    cfg.threads = read(m, "threads", cfg.threads);
  }
  if (const YAML::Node s = root["slack"]) {
    check_keys(s, {"c", "C1", "C2"}, "slack");
    cfg.slack = {read(s, "c", 0.0), read(s, "C1", 0.0), read(s, "C2", 0.0)};
  }
  if (const YAML::Node g = root["generators"]) parse_generators(g, cfg, lines);
  std::map<std::string, std::vector<double>> profiles;
  if (const YAML::Node p = root["profiles"]) {
    if (!p.IsMap()) fail_at(p, "'profiles' must map names to lists");
    for (const auto& kv : p) profiles[kv.first.as<std::string>()] = read_series(kv.second, "profile");
  }
  if (const YAML::Node inj = root["injections"]) parse_injections(inj, profiles, cfg, lines);
  if (const YAML::Node s = root["sampling"]) {
    check_keys(s, {"samples", "paths", "seed"}, "sampling");
    cfg.sampling.samples = read(s, "samples", cfg.sampling.samples);
    cfg.sampling.paths = read(s, "paths", cfg.sampling.paths);
    cfg.sampling.seed = read(s, "seed", cfg.sampling.seed);
  }
  if (const YAML::Node a = root["agents"]) parse_agents(a, cfg, lines);
  if (const YAML::Node d = root["dp"]) {
    check_keys(d, {"levels", "kappa"}, "dp");
    cfg.dp.levels = read(d, "levels", cfg.dp.levels);
    cfg.dp.kappa = read(d, "kappa", cfg.dp.kappa);
  }
  if (const YAML::Node v = root["validation"]) {
    check_keys(v, {"enabled", "samples", "timesteps"}, "validation");
    cfg.validation.enabled = read(v, "enabled", cfg.validation.enabled);
    cfg.validation.samples = read(v, "samples", cfg.validation.samples);
    cfg.validation.timesteps = read(v, "timesteps", cfg.validation.timesteps);
  }
  if (const YAML::Node o = root["output"]) {
    check_keys(o, {"directory"}, "output");
    cfg.output_dir = read(o, "directory", cfg.output_dir);
  }
  validate_impl(cfg, lines);
  return cfg;
}

void emit_series(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << x;
  e << YAML::EndSeq;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kParseError, source + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  try {
    return parse_node(root);
  } catch (const Error& e) {
    throw Error(e.code(), source + ": " + std::string(e.what()).substr(std::string(to_string(e.code())).size() + 2));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kValidationError, source + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string emit_scenario(const ScenarioConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.name;
  e << YAML::Key << "description" << YAML::Value << c.description;

  e << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "base_mva" << YAML::Value << c.network.base_mva;
  e << YAML::Key << "base_kv" << YAML::Value << c.network.base_kv;
  e << YAML::Key << "slack_voltage" << YAML::Value << c.network.slack_voltage;
  e << YAML::Key << "buses" << YAML::Value << YAML::BeginSeq;
  for (const auto& b : c.network.buses) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << b.id << YAML::Key << "v_min" << YAML::Value
      << b.v_min << YAML::Key << "v_max" << YAML::Value << b.v_max << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "branches" << YAML::Value << YAML::BeginSeq;
  for (const auto& b : c.network.branches) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "from" << YAML::Value << b.from << YAML::Key << "to" << YAML::Value
      << b.to << YAML::Key << "r" << YAML::Value << b.r << YAML::Key << "x" << YAML::Value << b.x << YAML::Key
      << "f_max" << YAML::Value << b.f_max << YAML::EndMap;
  }
  e << YAML::EndSeq << YAML::EndMap;

  e << YAML::Key << "germ" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "degree" << YAML::Value << c.germ.degree;
  e << YAML::Key << "components" << YAML::Value << YAML::BeginSeq;
  for (const auto& comp : c.germ.components) {
    e << YAML::Flow << YAML::BeginMap;
    if (comp.distribution == Distribution::kGaussian) {
      e << YAML::Key << "distribution" << YAML::Value << "gaussian";
    } else {
      e << YAML::Key << "distribution" << YAML::Value << "beta" << YAML::Key << "alpha" << YAML::Value << comp.alpha
        << YAML::Key << "beta" << YAML::Value << comp.beta;
    }
    e << YAML::EndMap;
  }
  e << YAML::EndSeq << YAML::EndMap;

  e << YAML::Key << "market" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "horizon" << YAML::Value << c.horizon;
  e << YAML::Key << "epsilon" << YAML::Value << c.epsilon;
  e << YAML::Key << "gamma" << YAML::Value << gamma_name(c.gamma_mode);
  e << YAML::Key << "threads" << YAML::Value << c.threads;
  e << YAML::EndMap;

  e << YAML::Key << "slack" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "c" << YAML::Value
    << c.slack.c << YAML::Key << "C1" << YAML::Value << c.slack.C1 << YAML::Key << "C2" << YAML::Value << c.slack.C2
    << YAML::EndMap;

  e << YAML::Key << "generators" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : c.generators) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "bus" << YAML::Value << g.bus << YAML::Key << "p_min"
      << YAML::Value << g.p_min << YAML::Key << "p_max" << YAML::Value << g.p_max;
    if (g.q_min) e << YAML::Key << "q_min" << YAML::Value << *g.q_min;
    if (g.q_max) e << YAML::Key << "q_max" << YAML::Value << *g.q_max;
    e << YAML::Key << "c" << YAML::Value << g.c << YAML::Key << "C1" << YAML::Value << g.C1 << YAML::Key << "C2"
      << YAML::Value << g.C2 << YAML::EndMap;
  }
  e << YAML::EndSeq;

  e << YAML::Key << "injections" << YAML::Value << YAML::BeginSeq;
  for (const auto& inj : c.injections) {
    e << YAML::BeginMap;
    e << YAML::Key << "bus" << YAML::Value << inj.bus;
    e << YAML::Key << "kind" << YAML::Value << (inj.kind == InjectionKind::kLoad ? "load" : "pv");
    e << YAML::Key << "germ" << YAML::Value << inj.germ_index;
    e << YAML::Key << "power_factor" << YAML::Value << inj.power_factor;
    e << YAML::Key << "mean" << YAML::Value;
    emit_series(e, inj.mean);
    e << YAML::Key << "scale" << YAML::Value;
    emit_series(e, inj.scale);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;

  e << YAML::Key << "sampling" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "samples" << YAML::Value
    << c.sampling.samples << YAML::Key << "paths" << YAML::Value << c.sampling.paths << YAML::Key << "seed"
    << YAML::Value << c.sampling.seed << YAML::EndMap;

  e << YAML::Key << "agents" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : c.agents) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "bus" << YAML::Value << a.bus << YAML::Key << "E_cap"
      << YAML::Value << a.storage.E_cap << YAML::Key << "P_cap" << YAML::Value << a.storage.P_cap << YAML::Key
      << "E_init" << YAML::Value << a.storage.E_init << YAML::Key << "E_end" << YAML::Value << a.storage.E_end
      << YAML::Key << "dt" << YAML::Value << a.storage.dt << YAML::Key << "policies" << YAML::Value << YAML::Flow
      << a.policies << YAML::EndMap;
  }
  e << YAML::EndSeq;

  e << YAML::Key << "dp" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "levels" << YAML::Value
    << c.dp.levels << YAML::Key << "kappa" << YAML::Value << c.dp.kappa << YAML::EndMap;
  e << YAML::Key << "validation" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "enabled"
    << YAML::Value << c.validation.enabled << YAML::Key << "samples" << YAML::Value << c.validation.samples
    << YAML::Key << "timesteps" << YAML::Value << YAML::Flow << c.validation.timesteps << YAML::EndMap;
  e << YAML::Key << "output" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "directory" << YAML::Value
    << c.output_dir << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

void validate_scenario(const ScenarioConfig& config) { validate_impl(config, SourceLines{}); }

RadialNetwork build_network(const NetworkConfig& config) {
  std::vector<Bus> buses;
  for (const auto& b : config.buses) buses.push_back({b.id, b.v_min * b.v_min, b.v_max * b.v_max});
  std::vector<Branch> branches;
  int id = 0;
  for (const auto& b : config.branches) branches.push_back({id++, b.from, b.to, b.r, b.x, b.f_max});
  return build_network(std::move(buses), std::move(branches), config.slack_voltage * config.slack_voltage);
}

CcOpfProblem build_problem(const ScenarioConfig& config) {
  validate_scenario(config);
  CcOpfProblem prob;
  prob.network = std::make_shared<const RadialNetwork>(build_network(config.network));
  prob.basis = std::make_shared<const PceBasis>(config.germ);
  prob.slack = config.slack;
  prob.generators = config.generators;
  prob.injections = config.injections;
  prob.epsilon = config.epsilon;
  prob.gamma_mode = config.gamma_mode;
  prob.horizon = config.horizon;
  validate_problem(prob);
  return prob;
}

void apply_overrides(ScenarioConfig& config, const RunOptions& o) {
  if (o.output_dir) config.output_dir = o.output_dir->string();
  if (o.samples) config.sampling.samples = *o.samples;
  if (o.seed) config.sampling.seed = *o.seed;
  if (o.epsilon) config.epsilon = *o.epsilon;
  if (o.gamma_mode) config.gamma_mode = *o.gamma_mode;
  if (o.degree) config.germ.degree = *o.degree;
  validate_scenario(config);
}

}  // namespace plmp
