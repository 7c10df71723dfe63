#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "plmp/scenario.hpp"

using namespace plmp;
namespace fs = std::filesystem;

namespace {

std::string data(const char* name) { return std::string(PLMP_DATA_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Scenario, BundledCasesLoad) {
  for (const char* name : {"case1.yaml", "case2.yaml", "case3.yaml"}) {
    const ScenarioConfig c = load_scenario(data(name));
    EXPECT_EQ(c.horizon, 24);
    EXPECT_EQ(c.network.buses.size(), 15u) << name;
    EXPECT_NO_THROW(validate_scenario(c));
  }
  const ScenarioConfig c1 = load_scenario(data("case1.yaml"));
  EXPECT_EQ(c1.slack, (SlackCost{50, 15, 200}));
  EXPECT_TRUE(c1.generators.empty());
  EXPECT_EQ(c1.agents.size(), 2u);
  const ScenarioConfig c2 = load_scenario(data("case2.yaml"));
  ASSERT_EQ(c2.generators.size(), 1u);
  EXPECT_EQ(c2.generators[0].bus, 9);
  EXPECT_DOUBLE_EQ(c2.generators[0].c, 100);
  EXPECT_DOUBLE_EQ(c2.generators[0].C1, 15);
  EXPECT_DOUBLE_EQ(c2.generators[0].C2, 20);
}

TEST(Scenario, EmitParseRoundTrip) {
  for (const char* name : {"case1.yaml", "case2.yaml", "case3.yaml"}) {
    const ScenarioConfig c = load_scenario(data(name));
    EXPECT_EQ(parse_scenario(emit_scenario(c)), c) << name;
  }
  const ScenarioConfig g = generate_synthetic_grid({30, 4});
  EXPECT_EQ(parse_scenario(emit_scenario(g)), g);
}

TEST(Scenario, NonexistentBusNamesBusAndLine) {
  try {
    load_scenario(std::string(PLMP_TEST_DATA_DIR) + "/bad_bus.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidationError);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("99"), std::string::npos);
    EXPECT_NE(msg.find("line"), std::string::npos);
  }
}

TEST(Scenario, MalformedYaml) {
  try {
    parse_scenario("network: [unclosed");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
  ScenarioConfig c = load_scenario(data("case1.yaml"));
  c.epsilon = 0.7;
  EXPECT_THROW(validate_scenario(c), Error);
}

TEST(Scenario, Overrides) {
  ScenarioConfig c = load_scenario(data("case1.yaml"));
  RunOptions o;
  o.samples = 321;
  o.seed = 5;
  o.epsilon = 0.1;
  o.degree = 1;
  apply_overrides(c, o);
  EXPECT_EQ(c.sampling.samples, 321);
  EXPECT_EQ(c.sampling.seed, 5u);
  EXPECT_DOUBLE_EQ(c.epsilon, 0.1);
  EXPECT_EQ(c.germ.degree, 1);
}

TEST(Scenario, SyntheticGridIsValidAndSeeded) {
  const ScenarioConfig a = generate_synthetic_grid({14, 7});
  EXPECT_EQ(a.network.buses.size(), 14u);
  EXPECT_NO_THROW(validate_scenario(a));
  EXPECT_EQ(a, generate_synthetic_grid({14, 7}));
  EXPECT_NE(a, generate_synthetic_grid({14, 8}));
  const CcOpfSolution s = solve(build_problem(a));
  for (const auto& st : s.steps) EXPECT_EQ(st.status, ConeQpStatus::kOptimal);
}

TEST(Scenario, CaseThreeBindsUpperVoltageAtMidday) {
  const ScenarioConfig c = load_scenario(data("case3.yaml"));
  const CcOpfProblem p = build_problem(c);
  const auto rep = feasibility_report(solve(p), p);
  std::vector<int> hours;
  for (int t = 0; t < c.horizon; ++t) {
    for (const auto& b : rep[static_cast<std::size_t>(t)].binding()) {
      if (b.spec.kind == ConstraintKind::kVoltageUpper && b.spec.index == 9) hours.push_back(t);
    }
  }
  ASSERT_FALSE(hours.empty());
  for (int t : hours) {
    EXPECT_GE(t, 9);
    EXPECT_LE(t, 15);
  }
}

TEST(Scenario, RunIsByteDeterministic) {
  ScenarioConfig c = load_scenario(data("case1.yaml"));
  c.sampling.samples = 200;
  c.sampling.paths = 50;
  c.validation.samples = 10;
  const fs::path base = fs::temp_directory_path() / "plmp_scenario_test";
  fs::remove_all(base);
  RunOptions a, b;
  a.output_dir = base / "a";
  b.output_dir = base / "b";
  const RunReport ra = run(c, a);
  run(c, b);
  ASSERT_FALSE(ra.files.empty());
  for (const char* f : {"prices_da.csv", "prices_rt_samples.csv", "price_quantiles.csv", "agent_runs.csv", "regret.csv",
                        "ac_validation.csv"}) {
    ASSERT_TRUE(fs::exists(base / "a" / f)) << f;
    EXPECT_EQ(slurp(base / "a" / f), slurp(base / "b" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(base / "a" / "run_report.json"));
  fs::remove_all(base);
}
