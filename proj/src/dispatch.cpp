#include "gemkit/dispatch.hpp"

#include "gemkit/error.hpp"
#include "gemkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gemkit {

void DispatchInstance::check() const {
  const auto k = static_cast<Eigen::Index>(orders.size());
  const auto l = static_cast<Eigen::Index>(drivers.size());
  if (pickup_m.rows() != k || pickup_m.cols() != l) throw InputError("pickup matrix must be orders x drivers");
  if (serve_buckets.size() != 0 && (serve_buckets.rows() != k || serve_buckets.cols() != l))
    throw InputError("serve-time matrix must be orders x drivers");
  if (k > 0 && l > 0 && (pickup_m.array() < 0.0).any()) throw InputError("pickup distances must be >= 0");
  for (const auto& o : orders)
    if (!(o.price >= 0.0)) throw InputError("order price must be >= 0");
}

int estimate_serve_buckets(double pickup_m, double trip_m, double speed_m_per_min, int bucket_minutes) {
  if (!(speed_m_per_min > 0.0) || bucket_minutes <= 0) throw InputError("speed and bucket length must be positive");
  const double minutes = (pickup_m + trip_m) / speed_m_per_min;
  return static_cast<int>(std::ceil(minutes / bucket_minutes - 1e-12));
}

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::A1: return "A1";
    case PolicyKind::A2: return "A2";
    case PolicyKind::A3: return "A3";
  }
  return "?";
}

PolicyKind policy_from_string(const std::string& name) {
  if (name == "A1") return PolicyKind::A1;
  if (name == "A2") return PolicyKind::A2;
  if (name == "A3") return PolicyKind::A3;
  throw InputError("unknown policy '" + name + "'");
}

ValueTable ValueTable::zeros(int vertices, int buckets, int bucket_minutes) {
  ValueTable t;
  t.bucket_minutes = bucket_minutes;
  t.v1 = Eigen::MatrixXd::Zero(vertices, buckets);
  t.v2 = Eigen::MatrixXd::Zero(vertices, buckets);
  return t;
}

double ValueTable::lookup(const Eigen::MatrixXd& m, VertexId v, long bucket) {
  if (bucket < 0 || bucket >= m.cols() || v < 0 || v >= m.rows()) return 0.0;
  return m(v, bucket);
}

double edge_weight(const PolicyParams& policy, const DispatchInstance& instance, int k, int l,
                   const ValueTable* values) {
  const Order& o = instance.orders[k];
  const double base = policy.alpha1 * o.price - policy.alpha2 * instance.pickup_m(k, l);
  if (policy.kind == PolicyKind::A1 || values == nullptr) return base;
  const long now = values->bucket_of(instance.minute);
  const int dt = instance.serve_buckets.size() ? instance.serve_buckets(k, l) : 0;
  const double discount = std::pow(policy.eta, dt);
  const VertexId from = instance.drivers[l].vertex;
  double w = base + policy.alpha3 * (discount * values->value1(o.destination, now + dt) - values->value1(from, now));
  if (policy.kind == PolicyKind::A3)
    w += policy.alpha4 * (discount * values->value2(o.destination, now + dt) - values->value2(from, now));
  return w;
}

Eigen::MatrixXd edge_weights(const PolicyParams& policy, const DispatchInstance& instance, const ValueTable* values) {
  instance.check();
  const auto rows = static_cast<int>(instance.orders.size());
  const auto cols = static_cast<int>(instance.drivers.size());
  Eigen::MatrixXd w(rows, cols);
  for (int k = 0; k < rows; ++k)
    for (int l = 0; l < cols; ++l)
      w(k, l) = instance.admissible(k, l) ? edge_weight(policy, instance, k, l, values) : kExcludedPair;
  return w;
}

Matching km_match(const DispatchInstance& instance, const Eigen::MatrixXd& weights) {
  const auto rows = static_cast<int>(instance.orders.size());
  const auto cols = static_cast<int>(instance.drivers.size());
  if (weights.rows() != rows || weights.cols() != cols) throw InputError("weight matrix must be orders x drivers");
  Eigen::MatrixXd w = weights;
  for (int k = 0; k < rows; ++k)
    for (int l = 0; l < cols; ++l)
      if (!instance.admissible(k, l)) w(k, l) = kExcludedPair;
  const Assignment a = max_weight_assignment(w);
  Matching m;
  std::vector<char> order_used(rows, 0), driver_used(cols, 0);
  for (auto [k, l] : a.pairs) {
    m.pairs.push_back({k, l, w(k, l)});
    order_used[k] = 1;
    driver_used[l] = 1;
  }
  m.total_weight = a.total_weight;
  for (int k = 0; k < rows; ++k)
    if (!order_used[k]) m.unmatched_orders.push_back(k);
  for (int l = 0; l < cols; ++l)
    if (!driver_used[l]) m.unmatched_drivers.push_back(l);
  return m;
}

Eigen::MatrixXd estimate_v1(std::span<const DriverTrajectory> logs, int vertices, int buckets, double eta,
                            int bucket_minutes) {
  if (logs.empty()) throw InputError("value estimation needs at least one logged trajectory");
  if (!(eta > 0.0 && eta <= 1.0)) throw InputError("discount eta must lie in (0, 1]");
  if (bucket_minutes <= 0) throw InputError("bucket length must be positive");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(vertices, buckets);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(vertices, buckets);
  for (const auto& traj : logs) {
    auto earnings = traj.earnings;
    std::sort(earnings.begin(), earnings.end());
    for (auto [v, minute] : traj.idle_states) {
      const long b = minute / bucket_minutes;
      if (v < 0 || v >= vertices || b < 0 || b >= buckets) continue;
      double g = 0.0;
      auto it = std::lower_bound(earnings.begin(), earnings.end(), std::pair<long, double>{minute, -1e300});
      for (; it != earnings.end(); ++it) g += std::pow(eta, it->first / bucket_minutes - b) * it->second;
      sum(v, b) += g;
      count(v, b) += 1;
    }
  }
  return (count.array() > 0).select(sum.array() / count.array().max(1.0), 0.0).matrix();
}

Eigen::MatrixXd compute_v2(std::span<const EquilibriumMap<double>> maps, int vertices, int buckets,
                           int bucket_minutes) {
  if (bucket_minutes <= 0) throw InputError("bucket length must be positive");
  Eigen::MatrixXd v2 = Eigen::MatrixXd::Zero(vertices, buckets);
  for (const auto& m : maps) {
    if (m.dsd.size() != vertices) throw InputError("map size differs from vertex count");
    const long b = m.timestamp / bucket_minutes;
    if (b < 0 || b >= buckets) continue;
    v2.col(b) += m.dsd;
  }
  return v2;
}

namespace {

// Evaluates objective points once each; batches run over `jobs` workers.
class CachedObjective {
 public:
  CachedObjective(const AlphaObjective& f, std::uint64_t seed, int jobs) : f_(f), seed_(seed), jobs_(jobs) {}

  std::vector<double> operator()(const std::vector<std::pair<double, double>>& points) {
    std::vector<std::pair<double, double>> todo;
    for (const auto& p : points)
      if (!cache_.count(key(p)) && std::find(todo.begin(), todo.end(), p) == todo.end()) todo.push_back(p);
    std::vector<double> fresh(todo.size());
    parallel_for(todo.size(), jobs_, [&](std::size_t k) { fresh[k] = f_(todo[k].first, todo[k].second, seed_); });
    for (std::size_t k = 0; k < todo.size(); ++k) cache_[key(todo[k])] = fresh[k];
    evaluations_ += static_cast<int>(todo.size());
    std::vector<double> out;
    for (const auto& p : points) out.push_back(cache_.at(key(p)));
    return out;
  }

  int evaluations() const { return evaluations_; }

 private:
  static std::pair<long long, long long> key(const std::pair<double, double>& p) {
    return {std::llround(p.first * 1e9), std::llround(p.second * 1e9)};
  }

  const AlphaObjective& f_;
  std::uint64_t seed_;
  int jobs_;
  std::map<std::pair<long long, long long>, double> cache_;
  int evaluations_ = 0;
};

// Index of the largest value, lowest index on ties.
std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

}  // namespace

AlphaSearchResult grid_search_alphas(const AlphaObjective& objective, const AlphaSearchSpec& spec) {
  if (!spec.seed) throw InputError("alpha search needs a fixed simulator seed");
  if (!objective) throw InputError("alpha search needs an objective");
  if (!(spec.alpha3_high > spec.alpha3_low) || !(spec.grid_step > 0.0) || !(spec.bracket_width > 0.0) ||
      !(spec.probe_offset > 0.0) || 2 * spec.probe_offset >= spec.bracket_width)
    throw InputError("invalid alpha search ranges");
  if (spec.alpha4_grid.empty()) throw InputError("alpha4 grid is empty");

  CachedObjective f(objective, *spec.seed, spec.jobs);
  double lo = spec.alpha3_low, hi = spec.alpha3_high;
  while (hi - lo > spec.bracket_width + 1e-12) {
    const double mid = (lo + hi) / 2;
    const auto v = f({{mid - spec.probe_offset, 0.0}, {mid + spec.probe_offset, 0.0}});
    if (v[0] >= v[1])
      hi = mid + spec.probe_offset;
    else
      lo = mid - spec.probe_offset;
  }

  AlphaSearchResult out;
  out.bracket_low = lo;
  out.bracket_high = hi;
  const long first = static_cast<long>(std::floor(lo / spec.grid_step + 1e-9));
  const long last = static_cast<long>(std::ceil(hi / spec.grid_step - 1e-9));
  std::vector<std::pair<double, double>> scan;
  for (long g = first; g <= last; ++g) {
    const double a3 = std::clamp(g * spec.grid_step, spec.alpha3_low, spec.alpha3_high);
    if (scan.empty() || scan.back().first != a3) scan.push_back({a3, 0.0});
  }
  const auto v3 = f(scan);
  out.alpha3 = scan[argmax_first(v3)].first;

  std::vector<std::pair<double, double>> scan4;
  for (double a4 : spec.alpha4_grid) scan4.push_back({out.alpha3, a4});
  const auto v4 = f(scan4);
  const std::size_t best = argmax_first(v4);
  out.alpha4 = spec.alpha4_grid[best];
  out.objective = v4[best];
  out.evaluations = f.evaluations();
  return out;
}

}  // namespace gemkit
