#include "support/cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

using namespace gemkit::testing;
using nlohmann::json;

namespace {

// Two adjacent hexes one unit apart.
const char* kPairGraph = R"({"side_length_m": 1, "adjacent_distance_m": 1, "neighborhood_order": 1,
  "vertices": [{"id": 0, "q": 0, "r": 0}, {"id": 1, "q": 1, "r": 0}]})";

const char* kSmallWorld = R"({"world": {"rows": 3, "cols": 3, "horizon_minutes": 60, "drivers": 15,
  "mean_orders_per_minute": 1.5, "seed": 2}, "switch_minutes": 10, "gem_trace": true,
  "policies": [{"kind": "A1"}, {"kind": "A3", "alpha3": 0.3, "alpha4": 1, "eta": 0.7}]})";

std::string csv_body(const std::string& text) { return text.substr(text.find('\n') + 1); }

}  // namespace

TEST(Cli, GemOnTwoVertexFixture) {
  const auto dir = scratch_dir("cli_gem");
  spit(dir / "g.json", kPairGraph);
  spit(dir / "s.csv", "timestamp,vertex_id,demand,supply\n0,0,0,2\n0,1,2,0\n");
  const auto r = run_cli("gem --graph " + (dir / "g.json").string() + " --snapshots " + (dir / "s.csv").string() +
                             " --lambda 0.5 --plans --out " + (dir / "out").string(),
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(csv_body(slurp(dir / "out" / "gem.csv")), "timestamp,rho,l1_term,cost_term\n0,1,0,2\n");
  EXPECT_EQ(csv_body(slurp(dir / "out" / "plan_0.csv")), "from_vertex,to_vertex,flow\n0,1,2\n");
  EXPECT_EQ(slurp(dir / "out" / "maps.csv").rfind("# gemkit ", 0), 0u);
}

TEST(Cli, EmptySnapshotsExitTwo) {
  const auto dir = scratch_dir("cli_empty");
  spit(dir / "g.json", kPairGraph);
  spit(dir / "s.csv", "timestamp,vertex_id,demand,supply\n");
  const auto r = run_cli("gem --graph " + (dir / "g.json").string() + " --snapshots " + (dir / "s.csv").string() +
                             " --out " + (dir / "out").string(),
                         dir);
  EXPECT_EQ(r.exit_code, 2);
  const auto err = json::parse(r.err);
  EXPECT_EQ(err["error"]["message"], "no snapshots");
  EXPECT_EQ(err["error"]["code"], 2);
}

TEST(Cli, StrictLambdaWarningExitsFour) {
  const auto dir = scratch_dir("cli_strict");
  spit(dir / "g.json", kPairGraph);
  spit(dir / "s.csv", "timestamp,vertex_id,demand,supply\n0,0,0,2\n0,1,2,0\n");
  const std::string base = "gem --graph " + (dir / "g.json").string() + " --snapshots " + (dir / "s.csv").string() +
                           " --lambda 3 --out " + (dir / "out").string();
  EXPECT_EQ(run_cli(base, dir).exit_code, 0);
  EXPECT_EQ(run_cli(base + " --strict", dir).exit_code, 4);
}

TEST(Cli, MetricsOnIdenticalStreamAreZero) {
  const auto dir = scratch_dir("cli_metrics");
  spit(dir / "g.json", kPairGraph);
  spit(dir / "s.csv", "timestamp,vertex_id,demand,supply\n0,0,3,3\n0,1,1,1\n4,0,2,2\n12,1,5,5\n");
  const auto r = run_cli("metrics --graph " + (dir / "g.json").string() + " --snapshots " +
                             (dir / "s.csv").string() + " --window-min 10 --out " + (dir / "out").string(),
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(csv_body(slurp(dir / "out" / "metrics.csv")),
            "window_start,metric_name,value\n"
            "0,gem,0\n0,gem_dsr,1\n0,hellinger,0\n0,l2,0\n0,wasserstein,0\n"
            "10,gem,0\n10,gem_dsr,1\n10,hellinger,0\n10,l2,0\n10,wasserstein,0\n");
}

TEST(Cli, ForcedMatchAnswersEverything) {
  const auto dir = scratch_dir("cli_forced");
  spit(dir / "g.json", kPairGraph);
  spit(dir / "c.json", R"({"horizon_minutes": 10, "initial_idle": [1, 0],
    "scheduled_orders": [{"minute": 0, "origin": 0, "destination": 1}]})");
  const auto r = run_cli("simulate --graph " + (dir / "g.json").string() + " --config " + (dir / "c.json").string() +
                             " --seed 1 --out " + (dir / "out").string(),
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto m = json::parse(slurp(dir / "out" / "metrics.json"));
  EXPECT_EQ(m["total_orders"], 1);
  EXPECT_EQ(m["answer_rate"], 1.0);
  EXPECT_EQ(m["provenance"].get<std::string>().rfind("# gemkit ", 0), 0u);
}

TEST(Cli, StochasticCommandsNeedSeed) {
  const auto dir = scratch_dir("cli_seed");
  spit(dir / "c.json", kSmallWorld);
  for (const std::string cmd : {"simulate", "search", "evaluate"}) {
    const auto r = run_cli(cmd + " --config " + (dir / "c.json").string() + " --out " + (dir / "out").string(), dir);
    EXPECT_EQ(r.exit_code, 2) << cmd;
  }
  EXPECT_EQ(run_cli("gem --bogus", dir).exit_code, 2);
}

TEST(Cli, PlantedSearchFindsOptimum) {
  const auto dir = scratch_dir("cli_search");
  ASSERT_EQ(run_cli("search --planted --seed 4 --out " + (dir / "out").string(), dir).exit_code, 0);
  const auto s = json::parse(slurp(dir / "out" / "search.json"));
  EXPECT_NEAR(s["alpha3"].get<double>(), 0.5, 0.01);
  EXPECT_EQ(s["alpha4"], 0.0);
}

TEST(Cli, EvaluateWritesReport) {
  const auto dir = scratch_dir("cli_evaluate");
  spit(dir / "c.json", kSmallWorld);
  const auto r = run_cli("evaluate --config " + (dir / "c.json").string() +
                             " --seed 3 --days 6 --history-days 1 --outcomes gmv,answer_rate --out " +
                             (dir / "out").string(),
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto rep = json::parse(slurp(dir / "out" / "report.json"));
  ASSERT_EQ(rep["outcomes"].size(), 2u);
  EXPECT_EQ(rep["outcomes"][0]["outcome"], "gmv");
  EXPECT_EQ(rep["outcomes"][0]["df"], 5);
  // Re-fitting the written panel reproduces the report.
  const auto again = run_cli("evaluate --panel " + (dir / "out" / "panel.csv").string() + " --out " +
                                 (dir / "again").string(),
                             dir);
  ASSERT_EQ(again.exit_code, 0) << again.err;
  const auto rep2 = json::parse(slurp(dir / "again" / "report.json"));
  EXPECT_EQ(rep2["outcomes"][0]["ate"], rep["outcomes"][0]["ate"]);
  EXPECT_EQ(rep2["outcomes"][1]["p_two_sided"], rep["outcomes"][1]["p_two_sided"]);
}

TEST(Cli, JobsDoNotChangeOutputs) {
  const auto dir = scratch_dir("cli_jobs");
  spit(dir / "c.json", kSmallWorld);
  const std::string base = "simulate --config " + (dir / "c.json").string() + " --seed 9 --compare --days 3";
  ASSERT_EQ(run_cli(base + " --jobs 1 --out " + (dir / "a").string(), dir).exit_code, 0);
  ASSERT_EQ(run_cli(base + " --jobs 3 --out " + (dir / "b").string(), dir).exit_code, 0);
  EXPECT_EQ(dir_contents(dir / "a"), dir_contents(dir / "b"));
}
