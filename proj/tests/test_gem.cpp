#include "gemkit/gem.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gemkit;
using gemkit::testing::brute_force_gem;
using gemkit::testing::random_cost_graph;
using gemkit::testing::random_counts;
using gemkit::testing::to_vector;

namespace {

std::shared_ptr<const WeightedGraph> share(WeightedGraph g) { return std::make_shared<const WeightedGraph>(std::move(g)); }

std::shared_ptr<const WeightedGraph> pair_graph(double c01, std::vector<std::vector<VertexId>> hoods) {
  Eigen::MatrixXd c(2, 2);
  c << 0, c01, c01, 0;
  return share(WeightedGraph::from_costs(c, std::move(hoods)));
}

double rho(std::shared_ptr<const WeightedGraph> g, const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, double lambda) {
  return compute_gem<double>(std::move(g), mu, nu, lambda).rho;
}

}  // namespace

TEST(AssembleLp, SingleVertexShapes) {
  auto g = share(build_hex_grid(HexGridSpec::parallelogram(1, 1), 2));
  GemProblem<double> p{g, Eigen::VectorXd::Constant(1, 3), Eigen::VectorXd::Constant(1, 5), 0.1};
  auto lp = assemble_lp(p);
  EXPECT_EQ(lp.rows(), 3);
  EXPECT_EQ(lp.cols(), 4);
  EXPECT_EQ(lp.b, Eigen::Vector3d(3, 5, 5));
}

TEST(AssembleLp, ChainSupplyRows) {
  auto g = pair_graph(1.0, {{0, 1}, {0, 1}});
  GemProblem<double> p{g, Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 1), 0.5};
  auto lp = assemble_lp(p);
  Eigen::MatrixXd a = lp.A;
  ASSERT_EQ(g->flow_variable_count(), 4);
  EXPECT_EQ(lp.cols(), 4 + 6);
  EXPECT_EQ(a.block(0, 0, 2, 4), (Eigen::MatrixXd(2, 4) << 1, 1, 0, 0, 0, 0, 1, 1).finished());
  // A2 rows: column (i, j) lands on row j.
  EXPECT_EQ(a.block(2, 0, 2, 4), (Eigen::MatrixXd(2, 4) << 1, 0, 1, 0, 0, 1, 0, 1).finished());
  EXPECT_EQ(a.block(4, 0, 2, 4), a.block(2, 0, 2, 4));
  Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2), z2 = Eigen::MatrixXd::Zero(2, 2);
  EXPECT_EQ(a.block(2, 4, 2, 6), (Eigen::MatrixXd(2, 6) << i2, -i2, z2).finished());
  EXPECT_EQ(a.block(4, 4, 2, 6), (Eigen::MatrixXd(2, 6) << -i2, z2, i2).finished());
  EXPECT_EQ(lp.cost.head(4), Eigen::Vector4d(0, 0.5, 0.5, 0));
  EXPECT_EQ(lp.cost.segment(4, 2), Eigen::Vector2d(1, 1));
  EXPECT_TRUE(lp.cost.tail(4).isZero());
}

TEST(AssembleLp, ColumnCountOnHexGrid) {
  auto g = share(build_hex_grid(HexGridSpec::parallelogram(4, 5), 2));
  GemProblem<double> p{g, Eigen::VectorXd::Ones(20), Eigen::VectorXd::Ones(20), 1e-4};
  EXPECT_EQ(assemble_lp(p).cols(), g->flow_variable_count() + 60);
}

TEST(AssembleLp, RejectsSizeMismatch) {
  auto g = pair_graph(1.0, {{0, 1}, {1}});
  GemProblem<double> p{g, Eigen::Vector3d(1, 1, 1), Eigen::Vector2d(1, 1), 0.5};
  EXPECT_THROW(assemble_lp(p), InputError);
  p.mu = Eigen::Vector2d(-1, 1);
  EXPECT_THROW(assemble_lp(p), InputError);
}

TEST(ComputeGem, IdenticalMassesGiveZero) {
  auto g = share(build_hex_grid(HexGridSpec::parallelogram(3, 3), 2));
  Eigen::VectorXd mu(9);
  mu << 1, 0, 2, 3, 0, 1, 4, 1, 0;
  auto plan = compute_gem<double>(g, mu, mu, 0.45 / 2400);
  EXPECT_NEAR(plan.rho, 0, 1e-12);
  EXPECT_TRUE(plan.mu_tilde.isApprox(mu));
  for (const auto& f : plan.flows)
    if (f.from != f.to) EXPECT_EQ(f.amount, 0.0);
}

TEST(ComputeGem, NoTransportAllowed) {
  auto g = pair_graph(1.0, {{0}, {1}});
  auto plan = compute_gem<double>(g, Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 2), 0.5);
  EXPECT_NEAR(plan.rho, 4, 1e-12);
  EXPECT_EQ(plan.mu_tilde, Eigen::Vector2d(2, 0));
}

TEST(ComputeGem, HandInstanceMovesBothUnits) {
  auto g = pair_graph(1.0, {{0, 1}, {1}});
  auto plan = compute_gem<double>(g, Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 2), 0.5);
  EXPECT_NEAR(plan.rho, 1.0, 1e-12);
  EXPECT_NEAR(plan.flow(0, 1), 2.0, 1e-12);
  EXPECT_NEAR(plan.l1_term, 0.0, 1e-12);
  EXPECT_NEAR(plan.cost_term, 2.0, 1e-12);
  EXPECT_NEAR(plan.lp_objective, plan.dual_objective, 1e-10);
}

TEST(ComputeGem, PlanInvariants) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 5;
    auto g = share(random_cost_graph(rng, n, trial % 2 == 0));
    auto mu = to_vector(random_counts(rng, n, 7));
    auto nu = to_vector(random_counts(rng, n, 5));
    auto plan = compute_gem<double>(g, mu, nu, 0.3);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (const auto& f : plan.flows) {
      EXPECT_GE(f.amount, 0.0);
      EXPECT_TRUE(g->in_neighborhood(f.from, f.to));
      out(f.from) += f.amount;
    }
    EXPECT_TRUE(out.isApprox(mu, 1e-12));
    EXPECT_NEAR(plan.mu_tilde.sum(), mu.sum(), 1e-10);
    EXPECT_NEAR(plan.rho, plan.l1_term + 0.3 * plan.cost_term, 1e-12);
    EXPECT_NEAR(plan.rho, plan.lp_objective, 1e-9);
    EXPECT_TRUE(plan.slack.isApprox((nu - plan.mu_tilde).cwiseAbs(), 1e-9) ||
                (plan.slack - (nu - plan.mu_tilde).cwiseAbs()).norm() < 1e-9);
  }
}

TEST(ComputeGem, MatchesIntegerEnumeration) {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> lam(0.0, 0.6);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 6;
    auto g = share(random_cost_graph(rng, n, trial % 3 == 0, 6.0, 0.6));
    auto mu = random_counts(rng, n, 1 + trial % 5);
    auto nu = random_counts(rng, n, 1 + (trial / 2) % 4);
    const double lambda = std::round(lam(rng) * 8) / 8;
    const double lp = rho(g, to_vector(mu), to_vector(nu), lambda);
    EXPECT_NEAR(lp, brute_force_gem(*g, mu, nu, lambda), 1e-9) << "trial " << trial;
  }
}

TEST(ComputeGem, PositivelyHomogeneous) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = share(random_cost_graph(rng, 5, false));
    auto mu = to_vector(random_counts(rng, 5, 6));
    auto nu = to_vector(random_counts(rng, 5, 4));
    const double base = rho(g, mu, nu, 0.2);
    EXPECT_NEAR(rho(g, 2.5 * mu, 2.5 * nu, 0.2), 2.5 * base, 1e-9);
  }
}

TEST(ComputeGem, LambdaThreshold) {
  // Surplus at 0, deficit at 1: moving pays iff lambda * c < 2.
  auto g = pair_graph(4.0, {{0, 1}, {1}});
  for (double lambda : {0.25, 0.49, 0.5, 0.51, 1.0}) {
    auto plan = compute_gem<double>(g, Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), lambda);
    if (lambda * 4.0 < 2.0)
      EXPECT_GT(plan.flow(0, 1), 0.0) << lambda;
    else
      EXPECT_EQ(plan.flow(0, 1), 0.0) << lambda;
  }
}

TEST(ComputeGem, LambdaWarningFlag) {
  auto g = share(build_hex_grid(HexGridSpec::parallelogram(3, 3), 2));
  Eigen::VectorXd m = Eigen::VectorXd::Ones(9);
  EXPECT_FALSE(compute_gem<double>(g, m, m, default_lambda(*g)).lambda_above_transport_bound);
  EXPECT_TRUE(compute_gem<double>(g, m, m, 2.0 / 4800).lambda_above_transport_bound);
  EXPECT_NEAR(default_lambda(*g) * 2400, 0.45, 1e-15);
}

TEST(ComputeGem, SelfCostCharged) {
  Eigen::MatrixXd c(1, 1);
  c << 2.0;
  auto g = share(WeightedGraph::from_costs(c, {{0}}));
  auto plan = compute_gem<double>(g, Eigen::VectorXd::Constant(1, 3), Eigen::VectorXd::Constant(1, 1), 0.5);
  EXPECT_NEAR(plan.rho, 2 + 0.5 * 2 * 3, 1e-12);
}

TEST(ComputeGem, DefaultGridSolvesWithZeroMasses) {
  auto g = share(build_hex_grid(HexGridSpec::parallelogram(6, 6), 2));
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(36), nu = Eigen::VectorXd::Zero(36);
  mu(0) = 5;
  nu(35) = 2;
  nu(1) = 3;
  auto plan = compute_gem<double>(g, mu, nu, default_lambda(*g));
  EXPECT_NEAR(plan.flow(0, 1), 3, 1e-12);
  EXPECT_NEAR(plan.rho, 2 + 2 + 3 * 0.45, 1e-12);
}

TEST(EquilibriumMapTest, Conventions) {
  Eigen::Vector3d mt(3, 0, 4), o(3, 5, 0);
  auto m = equilibrium_map<double>(mt, o, 7);
  EXPECT_EQ(m.dsr, Eigen::Vector3d(1, 5, 0));
  EXPECT_EQ(m.dsd, Eigen::Vector3d(0, 5, -4));
  EXPECT_EQ(m.timestamp, 7);
}

TEST(AggregateMaps, WeightedMeans) {
  EquilibriumMap<double> m;
  m.dsr = Eigen::Vector2d(1, 3);
  m.dsd = Eigen::Vector2d(-1, 2);
  m.demand = Eigen::Vector2d(1, 1);
  m.optimal_supply = Eigen::Vector2d(1, 1);
  std::vector<EquilibriumMap<double>> maps{m};
  EXPECT_DOUBLE_EQ(aggregate_maps<double>(maps).dsr, 2.0);
  EXPECT_DOUBLE_EQ(aggregate_maps<double>(maps).adsd, 1.5);
  maps[0].demand = Eigen::Vector2d(3, 1);
  EXPECT_DOUBLE_EQ(aggregate_maps<double>(maps).dsr, 1.5);
  std::vector<VertexId> one{1};
  EXPECT_DOUBLE_EQ(aggregate_maps<double>(maps, std::span<const VertexId>(one)).dsr, 3.0);
  maps[0].optimal_supply = Eigen::Vector2d(1, 5);
  // weights (3+1)/2 = 2 and (1+5)/2 = 3
  EXPECT_DOUBLE_EQ(aggregate_maps<double>(maps, AggregateWeight::MeanSupplyDemand).dsr, (2 * 1 + 3 * 3) / 5.0);
}

TEST(AggregateMaps, ZeroWeightsAreUndefined) {
  auto m = equilibrium_map<double>(Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0));
  std::vector<EquilibriumMap<double>> maps{m};
  EXPECT_THROW(aggregate_maps<double>(maps), UndefinedAggregateError);
}

TEST(Multilevel, IdentityFactor) {
  auto spec = HexGridSpec::parallelogram(3, 3);
  auto g = share(build_hex_grid(spec, 2));
  Eigen::VectorXd mu(9), nu(9);
  mu << 4, 0, 0, 1, 0, 2, 0, 0, 1;
  nu << 0, 1, 3, 0, 2, 0, 1, 1, 0;
  const double lambda = default_lambda(*g);
  EXPECT_NEAR(multilevel_gem<double>(spec, mu, nu, 1, 2, lambda).rho, rho(g, mu, nu, lambda), 1e-12);
}

TEST(Multilevel, SingleCellIsMassDifference) {
  auto spec = HexGridSpec::parallelogram(2, 2);
  Eigen::Vector4d mu(4, 0, 1, 0), nu(0, 1, 1, 1);
  auto plan = multilevel_gem<double>(spec, mu, nu, 2, 2, 1e-4);
  EXPECT_NEAR(plan.rho, 2.0, 1e-12);
  EXPECT_EQ(plan.mu_tilde.size(), 1);
}

TEST(Multilevel, FourToOneMergeByHand) {
  // 2x4 grid, factor 2: coarse cells {0,1,4,5} and {2,3,6,7}.
  auto spec = HexGridSpec::parallelogram(2, 4);
  Eigen::VectorXd mu(8), nu(8);
  mu << 1, 2, 0, 0, 3, 0, 0, 1;
  nu << 0, 0, 1, 2, 0, 1, 2, 1;
  const double lambda = 0.45 / 4800;
  auto plan = multilevel_gem<double>(spec, mu, nu, 2, 2, lambda);
  // Coarse masses mu = (6, 1), nu = (1, 6); moving t units costs 4800 lambda each.
  // Objective 10 - 2t + 0.45 t at t = 5 gives 10 - 7.75 = 2.25.
  EXPECT_NEAR(plan.rho, 2.25, 1e-12);
}

TEST(Multilevel, RejectsBadGrouping) {
  Eigen::Vector3d m(1, 1, 1);
  std::vector<std::vector<VertexId>> overlap{{0, 1}, {1, 2}}, missing{{0}, {1}}, empty{{0, 1, 2}, {}};
  EXPECT_THROW(coarsen_masses<double>(m, overlap), InputError);
  EXPECT_THROW(coarsen_masses<double>(m, missing), InputError);
  EXPECT_THROW(coarsen_masses<double>(m, empty), InputError);
}
