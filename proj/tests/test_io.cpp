#include "gemkit/error.hpp"
#include "gemkit/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace gemkit;
using namespace gemkit::io;

TEST(Format, ShortestRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    EXPECT_EQ(parse_double(format_double(v), "v"), v);
  }
  EXPECT_EQ(format_double(-0.0), "0");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Provenance, HashesConfigAndSeed) {
  const auto a = provenance_line("x=1", 7);
  EXPECT_EQ(a.rfind("# gemkit ", 0), 0u);
  EXPECT_NE(a.find(" seed=7"), std::string::npos);
  EXPECT_EQ(a, provenance_line("x=1", 7));
  EXPECT_NE(a, provenance_line("x=2", 7));
  EXPECT_NE(provenance_line("x=1", std::nullopt).find("seed=none"), std::string::npos);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Csv, SkipsCommentsAndChecksWidth) {
  const auto t = parse_csv("# provenance\na,b\n\n1,2\r\n3,4\n");
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][0], "3");
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_THROW(t.column("c"), InputError);
  EXPECT_THROW(parse_csv("a,b\n1\n"), InputError);
  EXPECT_THROW(parse_csv("# only a comment\n"), InputError);
  EXPECT_THROW(parse_double("1.5x", "v"), InputError);
  EXPECT_THROW(parse_long("2.0", "v"), InputError);
}

TEST(Snapshots, MissingRowsAreZeroAndTimesSorted) {
  const auto s = parse_snapshots(parse_csv("timestamp,vertex_id,demand,supply\n5,1,2,0\n3,0,1,4\n"), 2);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].timestamp, 3);
  EXPECT_EQ(s[0].supply, Eigen::Vector2d(4, 0));
  EXPECT_EQ(s[1].demand, Eigen::Vector2d(0, 2));
  EXPECT_EQ(parse_snapshots(parse_csv(snapshots_csv(s)), 2)[1].demand, s[1].demand);
}

TEST(Snapshots, RejectsBadInput) {
  try {
    parse_snapshots(parse_csv("timestamp,vertex_id,demand,supply\n"), 2);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_STREQ(e.what(), "no snapshots");
  }
  const std::string h = "timestamp,vertex_id,demand,supply\n";
  EXPECT_THROW(parse_snapshots(parse_csv(h + "0,2,1,1\n"), 2), InputError);
  EXPECT_THROW(parse_snapshots(parse_csv(h + "0,0,-1,1\n"), 2), InputError);
  EXPECT_THROW(parse_snapshots(parse_csv(h + "0,0,nan,1\n"), 2), InputError);
  EXPECT_THROW(parse_snapshots(parse_csv(h + "0,0,1,1\n0,0,1,1\n"), 2), InputError);
  EXPECT_THROW(parse_snapshots(parse_csv("t,vertex_id,demand,supply\n0,0,1,1\n"), 2), InputError);
}

TEST(GraphFile, RoundTripIsStable) {
  GraphFile g{HexGridSpec::parallelogram(3, 2, 1000, 1800), 1};
  g.spec.blocked = {{3, 1}, {0, 1}};
  const std::string text = graph_json(g);
  const GraphFile back = parse_graph_json(text);
  EXPECT_EQ(graph_json(back), text);
  const auto a = g.build(), b = back.build();
  EXPECT_TRUE((a.costs().array() == b.costs().array()).all());
  EXPECT_EQ(back.neighborhood_order, 1);
  EXPECT_GT(b.costs()(0, 1), 1800.0);  // the blocked edge forces a detour
}

TEST(GraphFile, RejectsBadIds) {
  EXPECT_THROW(parse_graph_json(R"({"vertices":[{"id":1,"q":0,"r":0}]})"), InputError);
  EXPECT_THROW(parse_graph_json(R"({"vertices":[]})"), InputError);
  EXPECT_THROW(parse_graph_json("not json"), InputError);
  EXPECT_THROW(parse_graph_json(R"({"vertices":[{"id":0,"q":0,"r":0}],"neighborhood_order":-1})"), InputError);
}

TEST(Panels, RoundTrip) {
  PanelDataset p;
  p.outcome = "gmv";
  p.y = Eigen::MatrixXd{{1.5, 2.0}, {0.25, 3.0}};
  p.arm = interleaved_arms(2, 2);
  p.covariates = {Eigen::MatrixXd{{10, 11}, {12, 13}}, Eigen::MatrixXd{{100, 101}, {102, 103}}};
  const std::vector<PanelDataset> in{p};
  const auto out = parse_panels(parse_csv(panels_csv(in)));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].outcome, "gmv");
  EXPECT_EQ(out[0].y, p.y);
  EXPECT_EQ(out[0].arm, p.arm);
  EXPECT_EQ(out[0].covariates[1], p.covariates[1]);
  const std::string h = "day,interval,arm,outcome_name,outcome,demand_total,supply_time_total\n";
  EXPECT_THROW(parse_panels(parse_csv(h + "0,0,1,g,1,1,1\n0,0,-1,g,1,1,1\n")), InputError);
  EXPECT_THROW(parse_panels(parse_csv(h + "0,0,1,g,1,1,1\n1,1,-1,g,1,1,1\n")), InputError);
}

TEST(SimConfigJson, WorldWithOverrides) {
  const auto c = parse_sim_config(R"({"world":{"rows":3,"cols":2,"drivers":9,"seed":4},
    "commission":0.2,"policies":[{"kind":"A2","alpha3":0.4,"eta":0.7}],"seed":11})");
  EXPECT_EQ(c.graph->size(), 6);
  EXPECT_EQ(c.commission, 0.2);
  EXPECT_EQ(c.initial_idle.sum() + c.initial_offline.sum(), 9);
  ASSERT_EQ(c.policies.size(), 1u);
  EXPECT_EQ(c.policies[0].kind, PolicyKind::A2);
  EXPECT_EQ(c.policies[0].alpha3, 0.4);
  EXPECT_EQ(c.policies[0].eta, 0.7);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_THROW(parse_sim_config(R"({"commission":0.2})"), InputError);
  EXPECT_THROW(parse_sim_config(R"({"world":{"rows":2},"policies":[{"kind":"A9"}]})"), InputError);
}
