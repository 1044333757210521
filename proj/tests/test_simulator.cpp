#include "gemkit/error.hpp"
#include "gemkit/simulator.hpp"

#include <gtest/gtest.h>

using namespace gemkit;

namespace {

SimConfig single_cell(int drivers) {
  SimConfig c;
  c.graph = std::make_shared<const WeightedGraph>(build_hex_grid(HexGridSpec::parallelogram(1, 1), 2));
  c.horizon_minutes = 20;
  c.demand_rate = Eigen::MatrixXd::Zero(1, 1);
  c.initial_idle = Eigen::VectorXi::Constant(1, drivers);
  c.seed = 3;
  return c;
}

SimConfig small_world(std::uint64_t world_seed, long horizon = 120) {
  WorldSpec w;
  w.rows = 4;
  w.cols = 4;
  w.drivers = 30;
  w.horizon_minutes = horizon;
  w.seed = world_seed;
  return synthetic_world(w);
}

}  // namespace

TEST(Simulator, ForcedMatch) {
  SimConfig c = single_cell(1);
  c.scheduled_orders = {{0, 0, 0, std::nullopt}};
  const auto m = run_episode(c);
  ASSERT_EQ(m.total_orders, 1);
  EXPECT_DOUBLE_EQ(*m.answer_rate(), 1.0);
  EXPECT_DOUBLE_EQ(*m.finish_rate(), 1.0);
  const double price = c.base_price + c.price_per_km * 1.4;  // intra-cell trip = side length
  EXPECT_DOUBLE_EQ(m.drivers_revenue, price);
  EXPECT_DOUBLE_EQ(m.gmv, price);
  EXPECT_EQ(m.snapshots[0].supply(0), 1.0);
  EXPECT_EQ(m.snapshots[0].demand(0), 1.0);
  EXPECT_EQ(m.snapshots[1].supply(0), 0.0);  // busy
  EXPECT_EQ(m.counts[1].busy, 1);
}

TEST(Simulator, ZeroDemandHasNoOrders) {
  const auto m = run_episode(single_cell(2));
  EXPECT_EQ(m.total_orders, 0);
  EXPECT_FALSE(m.answer_rate().has_value());
  EXPECT_FALSE(m.finish_rate().has_value());
  for (const auto& iv : m.intervals) EXPECT_FALSE(iv.answer_rate().has_value());
}

TEST(Simulator, SeedIsMandatoryAndRatesNonnegative) {
  SimConfig c = single_cell(1);
  c.seed.reset();
  EXPECT_THROW(run_episode(c), InputError);
  c = single_cell(1);
  c.demand_rate(0, 0) = -1;
  EXPECT_THROW(run_episode(c), InputError);
  c = single_cell(1);
  c.policies = {PolicyParams{PolicyKind::A2}};
  EXPECT_THROW(run_episode(c), InputError);  // no value table
}

TEST(Simulator, Deterministic) {
  SimConfig c = small_world(5);
  c.gem_trace = true;
  c.record_trajectories = true;
  const auto a = run_episode(c), b = run_episode(c);
  EXPECT_EQ(a.total_orders, b.total_orders);
  EXPECT_EQ(a.answered, b.answered);
  EXPECT_EQ(a.drivers_revenue, b.drivers_revenue);
  ASSERT_EQ(a.gem_per_minute.size(), b.gem_per_minute.size());
  for (std::size_t k = 0; k < a.gem_per_minute.size(); ++k) EXPECT_EQ(a.gem_per_minute[k], b.gem_per_minute[k]);
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    EXPECT_EQ(a.snapshots[k].supply, b.snapshots[k].supply);
    EXPECT_EQ(a.snapshots[k].demand, b.snapshots[k].demand);
  }
  c.seed = 6;
  EXPECT_NE(run_episode(c).drivers_revenue, a.drivers_revenue);
}

TEST(Simulator, ConservationAndRates) {
  SimConfig c = small_world(9);
  c.commission = 0.2;
  const auto m = run_episode(c);
  ASSERT_EQ(m.snapshots.size(), static_cast<std::size_t>(c.horizon_minutes));
  long interval_orders = 0, interval_answered = 0;
  for (std::size_t t = 0; t < m.snapshots.size(); ++t) {
    const auto& k = m.counts[t];
    EXPECT_EQ(k.idle + k.busy + k.offline, m.total_drivers);
    EXPECT_EQ(m.snapshots[t].supply.sum(), k.idle);
    EXPECT_EQ(m.snapshots[t].timestamp, static_cast<long>(t));
  }
  for (const auto& iv : m.intervals) {
    interval_orders += iv.orders;
    interval_answered += iv.answered;
    EXPECT_LE(iv.finished, iv.answered);
    EXPECT_LE(iv.answered, iv.orders);
  }
  EXPECT_EQ(interval_orders, m.total_orders);
  EXPECT_EQ(interval_answered, m.answered);
  ASSERT_GT(m.total_orders, 0);
  EXPECT_LE(*m.finish_rate(), *m.answer_rate());
  EXPECT_LE(*m.answer_rate(), 1.0);
  EXPECT_GE(m.gmv, m.drivers_revenue);
  EXPECT_NEAR(m.drivers_revenue, 0.8 * m.gmv, 1e-6 * m.gmv);
}

TEST(Simulator, NoMatchBeyondPickupRadius) {
  SimConfig c = small_world(2);
  c.max_pickup_m = 0.0;  // intra-cell pickups are U[0, side], almost surely positive
  const auto m = run_episode(c);
  EXPECT_GT(m.total_orders, 0);
  EXPECT_EQ(m.answered, 0);
}

TEST(Simulator, OpenOrdersExpireAfterPatience) {
  SimConfig c = single_cell(0);
  c.scheduled_orders = {{0, 0, 0, std::nullopt}};
  c.patience_minutes = 3;
  const auto m = run_episode(c);
  EXPECT_EQ(m.snapshots[2].demand(0), 1.0);
  EXPECT_EQ(m.snapshots[3].demand(0), 0.0);
}

TEST(Simulator, CommonRandomNumbersAcrossPolicies) {
  SimConfig c = small_world(4);
  auto values = std::make_shared<ValueTable>(ValueTable::zeros(c.graph->size(), 12, 10));
  values->v1.setRandom();
  c.values = values;
  SimConfig other = c;
  other.policies = {PolicyParams{PolicyKind::A2, 1.0, 0.001, 5.0}};
  const auto a = generate_orders(c), b = generate_orders(other);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].minute, b[k].minute);
    EXPECT_EQ(a[k].origin, b[k].origin);
    EXPECT_EQ(a[k].destination, b[k].destination);
    EXPECT_EQ(a[k].price, b[k].price);
  }
  const auto ma = run_episode(c), mb = run_episode(other);
  EXPECT_EQ(ma.total_orders, mb.total_orders);
  for (std::size_t k = 0; k < ma.intervals.size(); ++k) EXPECT_EQ(ma.intervals[k].orders, mb.intervals[k].orders);
}

TEST(Simulator, ScheduleSwitchesPolicies) {
  SimConfig c = small_world(4);
  c.values = std::make_shared<ValueTable>(ValueTable::zeros(c.graph->size(), 12, 10));
  c.policies = {PolicyParams{}, PolicyParams{PolicyKind::A2}};
  c.schedule = {0, 1, 0, 1};
  const auto m = run_episode(c);
  ASSERT_EQ(m.intervals.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(m.intervals[k].policy, c.schedule[k]);
}

TEST(Simulator, GemTraceIsDemandWeighted) {
  SimConfig c = small_world(8, 60);
  c.gem_trace = true;
  const auto m = run_episode(c);
  ASSERT_EQ(m.gem_per_minute.size(), 60u);
  double num = 0, den = 0;
  for (long t = 0; t < 30; ++t) {
    num += m.snapshots[t].demand.sum() * m.gem_per_minute[t];
    den += m.snapshots[t].demand.sum();
  }
  ASSERT_GT(den, 0);
  EXPECT_NEAR(*m.intervals[0].gem, num / den, 1e-12);
}

TEST(Simulator, AnswerRateNondecreasingInDriverPool) {
  double small = 0, large = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    WorldSpec w;
    w.rows = 4;
    w.cols = 4;
    w.horizon_minutes = 90;
    w.seed = 100 + s;
    w.drivers = 12;
    SimConfig a = synthetic_world(w);
    w.drivers = 36;
    SimConfig b = synthetic_world(w);
    a.seed = b.seed = s;
    small += run_episode(a).answer_rate().value_or(0);
    large += run_episode(b).answer_rate().value_or(0);
  }
  EXPECT_GE(large, small);
}

TEST(ComparePolicies, RelativeImprovement) {
  EXPECT_NEAR(relative_improvement(1191316, 1240518), 4.13, 0.005);
  EXPECT_THROW(relative_improvement(0, 1), InputError);
}

TEST(ComparePolicies, IdenticalPoliciesGiveIdenticalRows) {
  const SimConfig c = small_world(3, 60);
  const auto rows = compare_policies(c, {PolicyParams{}, PolicyParams{}}, {1, 2}, 2);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t day = 0; day < 2; ++day) {
    EXPECT_EQ(rows[2 * day].revenue, rows[2 * day + 1].revenue);
    EXPECT_EQ(rows[2 * day + 1].revenue_improvement_pct, 0.0);
  }
  EXPECT_THROW(compare_policies(c, {}, {1}), InputError);
}

TEST(ComparePolicies, PickupTermFlipsTheMatching) {
  // One driver, two orders: the dearer order is farther away.
  DispatchInstance inst;
  inst.orders = {{0, 0, 0, 11.0}, {1, 0, 0, 10.0}};
  inst.drivers = {{0, 0}};
  inst.pickup_m = (Eigen::MatrixXd(2, 1) << 1900.0, 100.0).finished();
  const auto with_pickup = dispatch(PolicyParams{}, inst);
  PolicyParams no_pickup;
  no_pickup.alpha2 = 0.0;
  const auto without = dispatch(no_pickup, inst);
  ASSERT_EQ(with_pickup.pairs.size(), 1u);
  ASSERT_EQ(without.pairs.size(), 1u);
  EXPECT_EQ(with_pickup.pairs[0].order_index, 1);
  EXPECT_EQ(without.pairs[0].order_index, 0);

  const SimConfig c = small_world(3, 60);
  const auto rows = compare_policies(c, {PolicyParams{}, no_pickup}, {11}, 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].policy, "A1");
  EXPECT_EQ(rows[1].policy, "A1");
}

TEST(ValueTables, BuiltFromHistory) {
  SimConfig c = small_world(12, 60);
  c.record_trajectories = true;
  std::vector<EpisodeMetrics> history{run_episode(c)};
  c.seed = 13;
  history.push_back(run_episode(c));
  const ValueTable t = build_value_table(history, *c.graph, default_lambda(*c.graph), 60, 1.0, 10, 2);
  EXPECT_EQ(t.v1.rows(), c.graph->size());
  EXPECT_EQ(t.v1.cols(), 6);
  EXPECT_TRUE((t.v1.array() >= 0).all());
  EXPECT_GT(t.v1.maxCoeff(), 0.0);
  // Remaining-day earnings shrink toward the end of the horizon.
  EXPECT_GE(t.v1.col(0).maxCoeff(), t.v1.col(5).maxCoeff());
  EXPECT_TRUE(t.v2.allFinite());
}
