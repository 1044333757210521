#pragma once

#include "gemkit/gem.hpp"
#include "gemkit/graph.hpp"
#include "gemkit/km.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace gemkit {

struct Order {
  int id = 0;
  VertexId origin = 0;
  VertexId destination = 0;
  double price = 0.0;
};

struct Driver {
  int id = 0;
  VertexId vertex = 0;
};

/// One matching round. `pickup_m(k, l)` is the pickup distance from driver l
/// to order k; `serve_buckets(k, l)` the estimated time to finish order k with
/// driver l, in whole value-table buckets.
struct DispatchInstance {
  std::vector<Order> orders;
  std::vector<Driver> drivers;
  Eigen::MatrixXd pickup_m;
  Eigen::MatrixXi serve_buckets;
  double max_pickup_m = 2000.0;
  long minute = 0;

  bool admissible(int k, int l) const { return pickup_m(k, l) <= max_pickup_m; }
  void check() const;
};

/// ceil(((pickup + trip) / speed) / bucket_minutes); zero distance gives zero.
int estimate_serve_buckets(double pickup_m, double trip_m, double speed_m_per_min, int bucket_minutes);

enum class PolicyKind { A1, A2, A3 };

const char* to_string(PolicyKind kind);
PolicyKind policy_from_string(const std::string& name);

/// A1 = alpha1 r - alpha2 c; A2 adds alpha3 (eta^dt V1(s') - V1(s)); A3 adds
/// alpha4 (eta^dt V2(s') - V2(s)) on top of A2.
struct PolicyParams {
  PolicyKind kind = PolicyKind::A1;
  double alpha1 = 1.0;
  double alpha2 = 0.001;
  double alpha3 = 0.0;
  double alpha4 = 0.0;
  double eta = 1.0;
};

/// Tabular state values indexed by (vertex, bucket). Lookups past the last
/// bucket return 0 (end of day).
struct ValueTable {
  int bucket_minutes = 10;
  Eigen::MatrixXd v1;  // vertices x buckets
  Eigen::MatrixXd v2;  // vertices x buckets

  static ValueTable zeros(int vertices, int buckets, int bucket_minutes = 10);

  long bucket_of(long minute) const { return minute / bucket_minutes; }
  double value1(VertexId v, long bucket) const { return lookup(v1, v, bucket); }
  double value2(VertexId v, long bucket) const { return lookup(v2, v, bucket); }

 private:
  static double lookup(const Eigen::MatrixXd& m, VertexId v, long bucket);
};

/// A(k, l) for an admissible pair. s_l = (driver vertex, current bucket),
/// s'_lk = (order destination, current bucket + serve_buckets(k, l)).
double edge_weight(const PolicyParams& policy, const DispatchInstance& instance, int k, int l,
                   const ValueTable* values = nullptr);

/// Orders x drivers weights with kExcludedPair outside the pickup radius.
Eigen::MatrixXd edge_weights(const PolicyParams& policy, const DispatchInstance& instance,
                             const ValueTable* values = nullptr);

struct Matching {
  struct Pair {
    int order_index = 0;
    int driver_index = 0;
    double weight = 0.0;
  };
  std::vector<Pair> pairs;
  double total_weight = 0.0;
  std::vector<int> unmatched_orders;   // indices into instance.orders
  std::vector<int> unmatched_drivers;  // indices into instance.drivers
};

/// Maximum total weight over admissible, positive-weight pairs.
Matching km_match(const DispatchInstance& instance, const Eigen::MatrixXd& weights);

inline Matching dispatch(const PolicyParams& policy, const DispatchInstance& instance,
                         const ValueTable* values = nullptr) {
  return km_match(instance, edge_weights(policy, instance, values));
}

/// One logged driver-day: minutes at which the driver was idle at a vertex,
/// and the earnings it realised (minute of payment, amount).
struct DriverTrajectory {
  std::vector<std::pair<VertexId, long>> idle_states;
  std::vector<std::pair<long, double>> earnings;
};

/// V1(v, b): mean over idle observations (v, t) with t in bucket b of
/// sum_{earnings at t' >= t} eta^(bucket(t') - b) * amount. Unobserved states are 0.
Eigen::MatrixXd estimate_v1(std::span<const DriverTrajectory> logs, int vertices, int buckets, double eta,
                            int bucket_minutes = 10);

/// V2(v, b): sum of DSd(v, t) over the maps whose timestamp (minute) falls in bucket b.
Eigen::MatrixXd compute_v2(std::span<const EquilibriumMap<double>> maps, int vertices, int buckets,
                           int bucket_minutes = 10);

/// Objective maximised by the alpha search, typically mean drivers' revenue of
/// seeded simulations run with A3(alpha3, alpha4).
using AlphaObjective = std::function<double(double alpha3, double alpha4, std::uint64_t seed)>;

struct AlphaSearchSpec {
  std::optional<std::uint64_t> seed;  // mandatory
  double alpha3_low = 0.0;
  double alpha3_high = 1.0;
  double bracket_width = 0.1;
  double probe_offset = 0.01;  // dichotomous search probes mid +- offset
  double grid_step = 0.01;
  std::vector<double> alpha4_grid{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int jobs = 1;
};

struct AlphaSearchResult {
  double alpha3 = 0.0;
  double alpha4 = 0.0;
  double objective = 0.0;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  int evaluations = 0;
};

/// Dichotomous search on alpha3 with alpha4 = 0 down to a bracket of the given
/// width, a grid scan inside it, then a scan over alpha4_grid with alpha3 fixed.
/// Ties keep the lower probe half and the lowest grid point.
AlphaSearchResult grid_search_alphas(const AlphaObjective& objective, const AlphaSearchSpec& spec);

}  // namespace gemkit
