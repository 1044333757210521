#pragma once

#include "gemkit/dispatch.hpp"
#include "gemkit/graph.hpp"
#include "gemkit/snapshot.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gemkit {

/// An order injected at a fixed minute in addition to the Poisson stream.
struct ScheduledOrder {
  long minute = 0;
  VertexId origin = 0;
  VertexId destination = 0;
  std::optional<double> price;  // default: price model
};

/// Discrete-time (1-minute) supply-demand world. Rates indexed by "rate
/// buckets" of `rate_bucket_minutes`; a single column or entry applies to
/// the whole horizon.
struct SimConfig {
  std::shared_ptr<const WeightedGraph> graph;
  long horizon_minutes = 480;

  Eigen::MatrixXd demand_rate;          // vertices x rate buckets, new orders per minute
  int rate_bucket_minutes = 30;
  Eigen::MatrixXd destination_weights;  // vertices x vertices; empty: uniform over reachable vertices
  std::vector<ScheduledOrder> scheduled_orders;

  Eigen::VectorXi initial_idle;     // per vertex
  Eigen::VectorXi initial_offline;  // per vertex; empty: none
  Eigen::VectorXd online_prob;      // per rate bucket, chance an offline driver logs on each minute
  Eigen::VectorXd offline_prob;     // per rate bucket, chance an idle driver logs off each minute

  double idle_move_prob = 0.3;
  double speed_m_per_min = 500.0;
  double base_price = 8.0;
  double price_per_km = 2.0;
  int patience_minutes = 5;
  double max_pickup_m = 2000.0;
  double cancel_prob = 0.0;  // accepted orders cancelled before the trip
  double commission = 0.0;

  std::vector<PolicyParams> policies{PolicyParams{}};
  int switch_minutes = 30;
  std::vector<int> schedule;  // policy index per switch period; empty: policies[0] throughout
  std::shared_ptr<const ValueTable> values;

  int interval_minutes = 30;  // metric aggregation period
  bool gem_trace = false;
  double lambda = 0.0;        // 0: default_lambda(graph)
  bool record_trajectories = false;

  std::optional<std::uint64_t> seed;

  void check() const;
  int rate_buckets() const { return static_cast<int>(demand_rate.cols()); }
  double rate_at(const Eigen::VectorXd& per_bucket, long minute) const;
};

struct IntervalMetrics {
  long start_minute = 0;
  int policy = 0;
  long orders = 0;
  long answered = 0;
  long finished = 0;
  double gmv = 0.0;
  double revenue = 0.0;
  double supply_minutes = 0.0;  // idle + busy driver-minutes
  double demand_total = 0.0;    // orders created
  std::optional<double> gem;    // demand-weighted mean per-minute GEM

  std::optional<double> answer_rate() const {
    return orders > 0 ? std::optional<double>(double(answered) / orders) : std::nullopt;
  }
  std::optional<double> finish_rate() const {
    return orders > 0 ? std::optional<double>(double(finished) / orders) : std::nullopt;
  }
};

struct DriverCounts {
  int idle = 0;
  int busy = 0;
  int offline = 0;
};

struct EpisodeMetrics {
  long total_orders = 0;
  long answered = 0;
  long finished = 0;
  double drivers_revenue = 0.0;
  double gmv = 0.0;
  int total_drivers = 0;

  SnapshotSeries snapshots;            // taken each minute before matching
  std::vector<DriverCounts> counts;    // per minute, same instant as snapshots
  std::vector<double> gem_per_minute;  // when gem_trace
  std::vector<IntervalMetrics> intervals;
  std::vector<DriverTrajectory> trajectories;  // per driver, when record_trajectories

  /// nullopt when no order arrived ("no orders").
  std::optional<double> answer_rate() const {
    return total_orders > 0 ? std::optional<double>(double(answered) / total_orders) : std::nullopt;
  }
  std::optional<double> finish_rate() const {
    return total_orders > 0 ? std::optional<double>(double(finished) / total_orders) : std::nullopt;
  }
};

/// Runs one seeded episode. The order stream and every per-driver draw come
/// from counter-based hashes of (seed, purpose, minute, entity), so policies
/// run on the same seed see identical arrivals (common random numbers).
EpisodeMetrics run_episode(const SimConfig& config);

/// Orders of the Poisson stream plus scheduled ones, as run_episode sees them.
struct GeneratedOrder {
  int id = 0;
  long minute = 0;
  VertexId origin = 0;
  VertexId destination = 0;
  double price = 0.0;
  double trip_m = 0.0;
  double cancel_draw = 1.0;
};
std::vector<GeneratedOrder> generate_orders(const SimConfig& config);

/// (new - base) / base * 100.
double relative_improvement(double base, double candidate);

struct PolicyComparisonRow {
  std::string policy;
  std::uint64_t day_seed = 0;
  double revenue = 0.0;
  std::optional<double> answer_rate;
  double revenue_improvement_pct = 0.0;  // versus the first policy on the same day
  std::optional<double> answer_rate_improvement_pct;
};

/// Runs every policy on every day seed with common random numbers.
std::vector<PolicyComparisonRow> compare_policies(const SimConfig& config, const std::vector<PolicyParams>& policies,
                                                  const std::vector<std::uint64_t>& day_seeds, int jobs = 1);

/// Value tables from historical episodes: V1 from driver trajectories, V2 from
/// per-minute GEM maps, each averaged over the supplied days.
ValueTable build_value_table(const std::vector<EpisodeMetrics>& history, const WeightedGraph& graph, double lambda,
                             long horizon_minutes, double eta, int bucket_minutes = 10, int jobs = 1);

/// Parameters of a randomly drawn synthetic city used by tests, the acceptance
/// suite and the CLI's default world.
struct WorldSpec {
  int rows = 5;
  int cols = 5;
  long horizon_minutes = 480;
  int drivers = 60;
  double mean_orders_per_minute = 3.0;
  double max_pickup_m = 2500.0;
  double cancel_prob = 0.05;
  int neighborhood_order = 2;
  std::uint64_t seed = 1;
};

/// Hex city with a demand hot spot whose strength and location drift through
/// the day, and time-varying driver log-on / log-off rates.
SimConfig synthetic_world(const WorldSpec& spec);

}  // namespace gemkit
