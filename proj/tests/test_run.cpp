#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "casimir/errors.hpp"
#include "casimir/run.hpp"

using namespace casimir;
using namespace casimir::run;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("casimir_run_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_pfa() {
  RunConfig c = preset("fig3");
  c.name = "pfa_theta";
  c.sweep = {Variable::theta, -30, 60, 10, false};
  c.numerics.n_xi = c.numerics.n_k = 32;
  c.numerics.boundary_samples = 120;
  return c;
}

}  // namespace

TEST(Run, PresetsAreValid) {
  for (const auto& n : preset_names()) {
    const auto c = preset(n);
    EXPECT_TRUE(violations(c).empty()) << n;
    EXPECT_EQ(c.scene.s_over_D, 0.25);
  }
  EXPECT_THROW(preset("fig9"), ValidationError);
}

TEST(Run, Fig4HasZeroAtCentreAndAFlaggedSignChange) {
  const auto r = evaluate(preset("fig4"));
  ASSERT_EQ(r.rows.front().x, 0.0);
  EXPECT_EQ(r.rows.front().values.at(0), 0.0);
  int flagged = 0;
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.status, "ok");
    flagged += row.sign_change;
  }
  EXPECT_EQ(flagged, 1);
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_LT(r.rows[i - 1].x, r.rows[i].x);
}

TEST(Run, ValidationListsEveryProblem) {
  RunConfig c = preset("fig4");
  c.scene.a = -1;
  c.sweep.steps = 0;
  c.scene.fluid = "unobtainium";
  c.numerics.n_xi = 2;
  try {
    validate(c);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_GE(e.problems().size(), 4u);
  }
  RunConfig empty = preset("fig4");
  empty.sweep.stop = empty.sweep.start;
  EXPECT_THROW(validate(empty), ValidationError);
  RunConfig bad = preset("fig4");
  bad.engine = Engine::exact;
  bad.scene.outer = "au";
  EXPECT_FALSE(violations(bad).empty());
}

TEST(Run, JsonRoundTripAndStrictKeys) {
  const auto c = preset("fig2");
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  auto j = config_to_json(c);
  j["scene"]["colour"] = "blue";
  j["sweep"]["variable"] = "phi";
  try {
    config_from_json(j);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.problems().size(), 2u);
  }
  // the worker count does not enter the hash
  auto w = c;
  w.numerics.workers = 7;
  EXPECT_EQ(config_hash(w), config_hash(c));
  w.numerics.resolution = 20;
  EXPECT_NE(config_hash(w), config_hash(c));
}

TEST(Run, CacheAndForce) {
  const auto dir = scratch("cache");
  auto c = small_pfa();
  const auto first = run::run(c, dir);
  EXPECT_FALSE(first.cached);
  const std::string bytes = slurp(dir / "pfa_theta.csv");
  const auto second = run::run(c, dir);
  EXPECT_TRUE(second.cached);
  EXPECT_EQ(second.rows.size(), first.rows.size());
  EXPECT_EQ(second.csv(), bytes);
  const auto third = run::run(c, dir, true);
  EXPECT_FALSE(third.cached);
  EXPECT_EQ(slurp(dir / "pfa_theta.csv"), bytes);
  // a manifest is itself a valid config
  const auto again = load_config(dir / "pfa_theta.manifest.json");
  EXPECT_EQ(config_hash(again), config_hash(c));
  fs::remove_all(dir);
}

TEST(Run, WorkerCountGivesIdenticalBytes) {
  auto c = small_pfa();
  c.numerics.workers = 1;
  const auto one = evaluate(c).csv();
  c.numerics.workers = 4;
  EXPECT_EQ(evaluate(c).csv(), one);
}

TEST(Run, FailuresBecomeErrorRows) {
  RunConfig c = preset("fig4");
  c.name = "narrow";
  c.materials = nlohmann::json::parse(R"({"narrow": {"type": "tabulated", "xi": [1e14, 1e15], "eps": [2.0, 1.5]}})");
  c.scene.fluid = "narrow";
  c.sweep = {Variable::d, 0.1, 0.5, 3, false};
  const auto r = evaluate(c);
  ASSERT_EQ(r.rows.size(), 3u);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.values.empty());
    EXPECT_EQ(row.status.rfind("error:", 0), 0u);
  }
  const auto csv = r.csv();
  EXPECT_EQ(csv.find("nan"), std::string::npos);
  EXPECT_EQ(r.metadata["error_rows"], 3);
}

TEST(Run, UnitSystems) {
  RunConfig c = preset("fig4");
  c.sweep = {Variable::d, 0.3, 0.3, 1, false};
  const double nat = evaluate(c).rows[0].values[0];
  c.units = UnitSystem::si;
  EXPECT_NEAR(evaluate(c).rows[0].values[0], nat * 0.0316152677, 1e-8 * std::abs(nat));
  c.units = UnitSystem::dimensionless;
  EXPECT_NEAR(evaluate(c).rows[0].values[0], nat * std::pow(0.0955, 4), 1e-12 * std::abs(nat));
}

TEST(Run, TransitionScans) {
  RunConfig c = preset("fig4");
  const auto pec = scan_transition(c, TransitionKind::positional);
  ASSERT_TRUE(pec.found);
  EXPECT_GT(pec.root, 0);
  EXPECT_LT(pec.root, 1);
  EXPECT_LE(pec.lo, pec.root);
  EXPECT_GE(pec.hi, pec.root);
  c.scene.outer = "au";
  const auto au = scan_transition(c, TransitionKind::positional);
  EXPECT_FALSE(au.found);
  EXPECT_EQ(au.message, "no transition found");

  RunConfig g = preset("fig4");
  g.sweep = {Variable::h, 0.005, 0.5, 2, true};
  const auto h = scan_transition(g, TransitionKind::gap_sign);
  ASSERT_TRUE(h.found);
  EXPECT_GT(h.root, 0.005);
  EXPECT_LT(h.root, 0.5);
  EXPECT_THROW(scan_transition(preset("fig4"), TransitionKind::gap_sign), ValidationError);
}

TEST(Run, CsvQuotesAwkwardFields) {
  SweepResult r;
  r.variable = "d";
  r.columns = {"force"};
  r.rows.push_back({0.5, {}, "error: a, \"quoted\" reason", false});
  EXPECT_NE(r.csv().find("\"error: a, \"\"quoted\"\" reason\""), std::string::npos);
}
