#include "gemkit/simulator.hpp"

#include "gemkit/error.hpp"
#include "gemkit/gem.hpp"
#include "gemkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace gemkit {

namespace {

// Purposes of counter-based draws; each gets an independent stream.
enum Stream : std::uint64_t {
  kOrderStream = 1,
  kChurn = 2,
  kMove = 3,
  kMoveDirection = 4,
  kPickup = 5,
  kWorld = 6,
};

class Draws {
 public:
  explicit Draws(std::uint64_t seed) : base_(mix64(seed)) {}

  std::uint64_t bits(std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0) const {
    return mix64(mix64(mix64(base_ ^ mix64(stream)) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
  }
  double uniform(std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0) const {
    return unit_from_bits(bits(stream, a, b));
  }

 private:
  std::uint64_t base_;
};

enum class Status { Idle, Busy, Offline };

struct DriverState {
  VertexId vertex = 0;
  Status status = Status::Idle;
  long busy_until = 0;
  VertexId next_vertex = 0;
  double pending = 0.0;
};

double intra_vertex_length(const WeightedGraph& g) { return g.side_length_m().value_or(0.0); }

double trip_length(const WeightedGraph& g, VertexId from, VertexId to) {
  return from == to ? intra_vertex_length(g) : g.cost(from, to);
}

long ceil_minutes(double meters, double speed) {
  return std::max(1L, static_cast<long>(std::ceil(meters / speed - 1e-9)));
}

}  // namespace

void SimConfig::check() const {
  if (!seed) throw InputError("simulation needs a seed");
  if (!graph) throw InputError("simulation needs a graph");
  const int n = graph->size();
  if (horizon_minutes < 0) throw InputError("horizon must be >= 0");
  if (demand_rate.rows() != n || demand_rate.cols() < 1) throw InputError("demand_rate must be vertices x buckets");
  if (!demand_rate.allFinite() || (demand_rate.array() < 0).any()) throw InputError("demand rates must be >= 0");
  if (rate_bucket_minutes <= 0 || switch_minutes <= 0 || interval_minutes <= 0)
    throw InputError("bucket, switch and interval lengths must be positive");
  if (destination_weights.size() != 0 &&
      (destination_weights.rows() != n || destination_weights.cols() != n || (destination_weights.array() < 0).any()))
    throw InputError("destination_weights must be a nonnegative vertices x vertices matrix");
  if (initial_idle.size() != n || (initial_idle.array() < 0).any()) throw InputError("initial_idle must have one count >= 0 per vertex");
  if (initial_offline.size() != 0 && (initial_offline.size() != n || (initial_offline.array() < 0).any()))
    throw InputError("initial_offline must have one count >= 0 per vertex");
  for (const auto* p : {&online_prob, &offline_prob})
    if (p->size() != 0 && ((p->array() < 0).any() || (p->array() > 1).any()))
      throw InputError("log-on/log-off probabilities must lie in [0, 1]");
  if (!(idle_move_prob >= 0 && idle_move_prob <= 1) || !(cancel_prob >= 0 && cancel_prob <= 1))
    throw InputError("probabilities must lie in [0, 1]");
  if (!(speed_m_per_min > 0)) throw InputError("speed must be positive");
  if (!(base_price >= 0) || !(price_per_km >= 0)) throw InputError("prices must be >= 0");
  if (patience_minutes < 1) throw InputError("order patience must be >= 1 minute");
  if (!(max_pickup_m >= 0)) throw InputError("max pickup distance must be >= 0");
  if (!(commission >= 0 && commission < 1)) throw InputError("commission must lie in [0, 1)");
  if (policies.empty()) throw InputError("at least one dispatch policy is required");
  for (int s : schedule)
    if (s < 0 || s >= static_cast<int>(policies.size())) throw InputError("schedule references unknown policy");
  for (const auto& p : policies)
    if (p.kind != PolicyKind::A1 && !values) throw InputError("value-augmented policies need a value table");
  for (const auto& o : scheduled_orders)
    if (o.origin < 0 || o.origin >= n || o.destination < 0 || o.destination >= n || o.minute < 0)
      throw InputError("scheduled order out of range");
}

double SimConfig::rate_at(const Eigen::VectorXd& per_bucket, long minute) const {
  if (per_bucket.size() == 0) return 0.0;
  const long b = std::min<long>(minute / rate_bucket_minutes, per_bucket.size() - 1);
  return per_bucket(b);
}

std::vector<GeneratedOrder> generate_orders(const SimConfig& config) {
  config.check();
  const WeightedGraph& g = *config.graph;
  const int n = g.size();
  const Draws draws(*config.seed);
  std::vector<GeneratedOrder> out;
  std::vector<double> weights(n);
  auto price_of = [&](double trip_m) { return config.base_price + config.price_per_km * trip_m / 1000.0; };

  std::vector<ScheduledOrder> scheduled = config.scheduled_orders;
  std::stable_sort(scheduled.begin(), scheduled.end(), [](const auto& a, const auto& b) { return a.minute < b.minute; });
  auto next_scheduled = scheduled.begin();

  for (long t = 0; t < config.horizon_minutes; ++t) {
    for (; next_scheduled != scheduled.end() && next_scheduled->minute == t; ++next_scheduled) {
      const double trip = trip_length(g, next_scheduled->origin, next_scheduled->destination);
      out.push_back({0, t, next_scheduled->origin, next_scheduled->destination,
                     next_scheduled->price.value_or(price_of(trip)), trip, 1.0});
    }
    const long bucket = std::min<long>(t / config.rate_bucket_minutes, config.rate_buckets() - 1);
    for (VertexId v = 0; v < n; ++v) {
      const double rate = config.demand_rate(v, bucket);
      if (!(rate > 0)) continue;
      std::mt19937_64 rng(draws.bits(kOrderStream, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(v)));
      const int count = std::poisson_distribution<int>(rate)(rng);
      double total = 0;
      for (VertexId j = 0; j < n; ++j) {
        const bool ok = reachable(g.cost(v, j));
        weights[j] = !ok ? 0.0 : config.destination_weights.size() ? config.destination_weights(v, j) : 1.0;
        total += weights[j];
      }
      if (!(total > 0)) continue;
      for (int k = 0; k < count; ++k) {
        double pick = unit_from_bits(rng()) * total;
        VertexId dest = n - 1;
        for (VertexId j = 0; j < n; ++j) {
          if (pick < weights[j]) {
            dest = j;
            break;
          }
          pick -= weights[j];
        }
        while (weights[dest] == 0.0) --dest;  // round-off landed past the last positive weight
        const double trip = trip_length(g, v, dest);
        out.push_back({0, t, v, dest, price_of(trip), trip, unit_from_bits(rng())});
      }
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k].id = static_cast<int>(k);
  return out;
}

EpisodeMetrics run_episode(const SimConfig& config) {
  config.check();
  const WeightedGraph& g = *config.graph;
  const int n = g.size();
  const Draws draws(*config.seed);
  const auto orders = generate_orders(config);
  const int value_bucket = config.values ? config.values->bucket_minutes : 10;

  std::vector<std::vector<VertexId>> adjacent(n);
  for (VertexId v = 0; v < n; ++v) adjacent[v] = g.adjacent(v);

  std::vector<DriverState> drivers;
  for (VertexId v = 0; v < n; ++v)
    for (int k = 0; k < config.initial_idle(v); ++k) drivers.push_back({v, Status::Idle, 0, v, 0.0});
  if (config.initial_offline.size())
    for (VertexId v = 0; v < n; ++v)
      for (int k = 0; k < config.initial_offline(v); ++k) drivers.push_back({v, Status::Offline, 0, v, 0.0});
  const int total_drivers = static_cast<int>(drivers.size());

  EpisodeMetrics m;
  m.total_drivers = total_drivers;
  if (config.record_trajectories) m.trajectories.resize(total_drivers);
  const long interval_count = (config.horizon_minutes + config.interval_minutes - 1) / config.interval_minutes;
  m.intervals.resize(static_cast<std::size_t>(interval_count));
  for (long k = 0; k < interval_count; ++k) m.intervals[k].start_minute = k * config.interval_minutes;
  auto policy_index = [&](long t) {
    if (config.schedule.empty()) return 0;
    const auto period = std::min<std::size_t>(static_cast<std::size_t>(t / config.switch_minutes), config.schedule.size() - 1);
    return config.schedule[period];
  };
  for (auto& iv : m.intervals) iv.policy = policy_index(iv.start_minute);

  std::vector<int> open;  // indices into `orders`, ascending
  std::size_t next_order = 0;
  std::vector<int> idle;
  std::vector<char> moved(total_drivers);

  for (long t = 0; t < config.horizon_minutes; ++t) {
    IntervalMetrics& now_interval = m.intervals[static_cast<std::size_t>(t / config.interval_minutes)];

    for (int d = 0; d < total_drivers; ++d) {
      auto& s = drivers[d];
      if (s.status == Status::Busy && s.busy_until <= t) {
        s.status = Status::Idle;
        s.vertex = s.next_vertex;
        if (config.record_trajectories && s.pending > 0) m.trajectories[d].earnings.emplace_back(s.busy_until, s.pending);
        s.pending = 0.0;
      }
    }

    const double p_off = config.rate_at(config.offline_prob, t);
    const double p_on = config.rate_at(config.online_prob, t);
    for (int d = 0; d < total_drivers; ++d) {
      auto& s = drivers[d];
      if (s.status == Status::Busy) continue;
      const double u = draws.uniform(kChurn, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(t));
      if (s.status == Status::Idle && u < p_off)
        s.status = Status::Offline;
      else if (s.status == Status::Offline && u < p_on)
        s.status = Status::Idle;
    }

    for (; next_order < orders.size() && orders[next_order].minute == t; ++next_order) {
      open.push_back(static_cast<int>(next_order));
      IntervalMetrics& iv = m.intervals[static_cast<std::size_t>(t / config.interval_minutes)];
      ++iv.orders;
      iv.demand_total += 1;
      ++m.total_orders;
    }

    Snapshot snap{t, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    DriverCounts counts;
    idle.clear();
    for (int d = 0; d < total_drivers; ++d) {
      const auto& s = drivers[d];
      if (s.status == Status::Idle) {
        ++counts.idle;
        snap.supply(s.vertex) += 1;
        idle.push_back(d);
        if (config.record_trajectories) m.trajectories[d].idle_states.emplace_back(s.vertex, t);
      } else if (s.status == Status::Busy) {
        ++counts.busy;
      } else {
        ++counts.offline;
      }
    }
    for (int k : open) snap.demand(orders[k].origin) += 1;
    now_interval.supply_minutes += counts.idle + counts.busy;
    m.snapshots.push_back(std::move(snap));
    m.counts.push_back(counts);

    std::fill(moved.begin(), moved.end(), 0);
    if (!open.empty() && !idle.empty()) {
      DispatchInstance inst;
      inst.minute = t;
      inst.max_pickup_m = config.max_pickup_m;
      for (int k : open) inst.orders.push_back({orders[k].id, orders[k].origin, orders[k].destination, orders[k].price});
      for (int d : idle) inst.drivers.push_back({d, drivers[d].vertex});
      const auto rows = static_cast<Eigen::Index>(open.size()), cols = static_cast<Eigen::Index>(idle.size());
      inst.pickup_m.resize(rows, cols);
      inst.serve_buckets.resize(rows, cols);
      for (Eigen::Index k = 0; k < rows; ++k) {
        const auto& o = orders[open[k]];
        for (Eigen::Index l = 0; l < cols; ++l) {
          const VertexId at = drivers[idle[l]].vertex;
          const double pickup = at == o.origin ? intra_vertex_length(g) * draws.uniform(kPickup, o.id, idle[l])
                                               : g.cost(at, o.origin);
          inst.pickup_m(k, l) = pickup;
          inst.serve_buckets(k, l) =
              reachable(pickup) ? estimate_serve_buckets(pickup, o.trip_m, config.speed_m_per_min, value_bucket) : 0;
        }
      }
      const auto& policy = config.policies[static_cast<std::size_t>(policy_index(t))];
      const Matching match = dispatch(policy, inst, config.values.get());
      std::vector<char> taken(open.size(), 0);
      for (const auto& p : match.pairs) {
        const auto& o = orders[open[p.order_index]];
        const int d = idle[p.driver_index];
        auto& s = drivers[d];
        const double pickup = inst.pickup_m(p.order_index, p.driver_index);
        IntervalMetrics& iv = m.intervals[static_cast<std::size_t>(o.minute / config.interval_minutes)];
        ++iv.answered;
        ++m.answered;
        s.status = Status::Busy;
        moved[d] = 1;
        if (o.cancel_draw < config.cancel_prob) {
          s.busy_until = t + ceil_minutes(pickup, config.speed_m_per_min);
          s.next_vertex = o.origin;
        } else {
          const double earned = o.price * (1.0 - config.commission);
          ++iv.finished;
          ++m.finished;
          iv.gmv += o.price;
          iv.revenue += earned;
          m.gmv += o.price;
          m.drivers_revenue += earned;
          s.busy_until = t + ceil_minutes(pickup + o.trip_m, config.speed_m_per_min);
          s.next_vertex = o.destination;
          s.pending = earned;
        }
        taken[static_cast<std::size_t>(p.order_index)] = 1;
      }
      std::vector<int> still_open;
      for (std::size_t k = 0; k < open.size(); ++k)
        if (!taken[k]) still_open.push_back(open[k]);
      open.swap(still_open);
    }

    for (int d : idle) {
      if (moved[d] || drivers[d].status != Status::Idle) continue;
      const auto& adj = adjacent[drivers[d].vertex];
      if (adj.empty()) continue;
      if (draws.uniform(kMove, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(t)) >= config.idle_move_prob) continue;
      const double u = draws.uniform(kMoveDirection, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(t));
      drivers[d].vertex = adj[std::min(adj.size() - 1, static_cast<std::size_t>(u * adj.size()))];
    }

    std::erase_if(open, [&](int k) { return t - orders[k].minute + 1 >= config.patience_minutes; });
  }

  if (config.record_trajectories)
    for (int d = 0; d < total_drivers; ++d)
      if (drivers[d].status == Status::Busy && drivers[d].pending > 0)
        m.trajectories[d].earnings.emplace_back(drivers[d].busy_until, drivers[d].pending);

  if (config.gem_trace) {
    const double lambda = config.lambda > 0 ? config.lambda : default_lambda(g);
    auto shared = config.graph;
    m.gem_per_minute.resize(m.snapshots.size());
    for (std::size_t k = 0; k < m.snapshots.size(); ++k)
      m.gem_per_minute[k] = compute_gem<double>(shared, m.snapshots[k].supply, m.snapshots[k].demand, lambda).rho;
    std::vector<double> num(m.intervals.size(), 0.0), den(m.intervals.size(), 0.0);
    for (std::size_t k = 0; k < m.snapshots.size(); ++k) {
      const auto iv = static_cast<std::size_t>(m.snapshots[k].timestamp / config.interval_minutes);
      const double w = m.snapshots[k].demand.sum();
      num[iv] += w * m.gem_per_minute[k];
      den[iv] += w;
    }
    for (std::size_t iv = 0; iv < m.intervals.size(); ++iv)
      if (den[iv] > 0) m.intervals[iv].gem = num[iv] / den[iv];
  }
  return m;
}

double relative_improvement(double base, double candidate) {
  if (base == 0.0) throw InputError("relative improvement undefined for a zero baseline");
  return (candidate - base) / base * 100.0;
}

std::vector<PolicyComparisonRow> compare_policies(const SimConfig& config, const std::vector<PolicyParams>& policies,
                                                  const std::vector<std::uint64_t>& day_seeds, int jobs) {
  if (policies.empty()) throw InputError("no policies to compare");
  if (day_seeds.empty()) throw InputError("no days to compare");
  const std::size_t p = policies.size();
  std::vector<EpisodeMetrics> runs(p * day_seeds.size());
  parallel_for(runs.size(), jobs, [&](std::size_t k) {
    SimConfig c = config;
    c.seed = day_seeds[k / p];
    c.policies = {policies[k % p]};
    c.schedule.clear();
    c.gem_trace = false;
    c.record_trajectories = false;
    runs[k] = run_episode(c);
  });
  std::vector<PolicyComparisonRow> rows;
  for (std::size_t day = 0; day < day_seeds.size(); ++day) {
    const auto& base = runs[day * p];
    for (std::size_t j = 0; j < p; ++j) {
      const auto& r = runs[day * p + j];
      PolicyComparisonRow row;
      row.policy = to_string(policies[j].kind);
      row.day_seed = day_seeds[day];
      row.revenue = r.drivers_revenue;
      row.answer_rate = r.answer_rate();
      row.revenue_improvement_pct = base.drivers_revenue > 0 ? relative_improvement(base.drivers_revenue, r.drivers_revenue) : 0.0;
      if (base.answer_rate() && r.answer_rate() && *base.answer_rate() > 0)
        row.answer_rate_improvement_pct = relative_improvement(*base.answer_rate(), *r.answer_rate());
      rows.push_back(row);
    }
  }
  return rows;
}

ValueTable build_value_table(const std::vector<EpisodeMetrics>& history, const WeightedGraph& graph, double lambda,
                             long horizon_minutes, double eta, int bucket_minutes, int jobs) {
  if (history.empty()) throw InputError("value tables need at least one historical episode");
  const int n = graph.size();
  const int buckets = static_cast<int>((horizon_minutes + bucket_minutes - 1) / bucket_minutes);
  ValueTable table = ValueTable::zeros(n, buckets, bucket_minutes);

  std::vector<DriverTrajectory> logs;
  for (const auto& h : history) logs.insert(logs.end(), h.trajectories.begin(), h.trajectories.end());
  if (!logs.empty()) table.v1 = estimate_v1(logs, n, buckets, eta, bucket_minutes);

  auto shared = std::make_shared<const WeightedGraph>(graph);
  for (const auto& h : history) {
    std::vector<EquilibriumMap<double>> maps(h.snapshots.size());
    parallel_for(maps.size(), jobs, [&](std::size_t k) {
      const auto& s = h.snapshots[k];
      const auto plan = compute_gem<double>(shared, s.supply, s.demand, lambda);
      maps[k] = equilibrium_map<double>(plan.mu_tilde, s.demand, s.timestamp);
    });
    table.v2 += compute_v2(maps, n, buckets, bucket_minutes);
  }
  table.v2 /= static_cast<double>(history.size());
  return table;
}

SimConfig synthetic_world(const WorldSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1 || spec.neighborhood_order < 0 || spec.drivers < 0 || spec.horizon_minutes < 1 || !(spec.mean_orders_per_minute >= 0))
    throw InputError("invalid world spec");
  const Draws draws(spec.seed);
  std::uint64_t counter = 0;
  auto u = [&] { return draws.uniform(kWorld, counter++); };

  SimConfig c;
  c.graph = std::make_shared<const WeightedGraph>(build_hex_grid(HexGridSpec::parallelogram(spec.rows, spec.cols), spec.neighborhood_order));
  const WeightedGraph& g = *c.graph;
  const int n = g.size();
  c.horizon_minutes = spec.horizon_minutes;
  c.rate_bucket_minutes = 30;
  c.max_pickup_m = spec.max_pickup_m;
  c.cancel_prob = spec.cancel_prob;
  const int buckets = static_cast<int>((spec.horizon_minutes + 29) / 30);

  // Two demand peaks through the day; the hot spot drifts between two cells.
  const double peak1 = 0.2 + 0.2 * u(), peak2 = 0.6 + 0.25 * u();
  const double width = 0.08 + 0.06 * u();
  const VertexId hot_a = static_cast<VertexId>(u() * n), hot_b = static_cast<VertexId>(u() * n);
  const double concentration = 0.5 + 1.0 * u();
  c.demand_rate = Eigen::MatrixXd::Zero(n, buckets);
  c.online_prob = Eigen::VectorXd(buckets);
  c.offline_prob = Eigen::VectorXd(buckets);
  for (int b = 0; b < buckets; ++b) {
    const double x = (b + 0.5) / buckets;
    const double profile = 0.5 + std::exp(-std::pow((x - peak1) / width, 2)) + 0.8 * std::exp(-std::pow((x - peak2) / width, 2));
    const VertexId hot = x < 0.5 ? hot_a : hot_b;
    Eigen::VectorXd spatial(n);
    for (VertexId v = 0; v < n; ++v) spatial(v) = std::exp(-concentration * g.cost(hot, v) / g.adjacent_distance_m().value());
    spatial /= spatial.sum();
    c.demand_rate.col(b) = spec.mean_orders_per_minute * profile / 1.4 * spatial;
    // Supply follows its own rhythm, so the balance moves through the day.
    c.online_prob(b) = 0.01 + 0.03 * (0.5 + 0.5 * std::sin(2 * std::numbers::pi * (x + u() * 0.1)));
    c.offline_prob(b) = 0.005 + 0.015 * u();
  }
  c.destination_weights = Eigen::MatrixXd(n, n);
  for (VertexId i = 0; i < n; ++i)
    for (VertexId j = 0; j < n; ++j)
      c.destination_weights(i, j) = 0.3 + std::exp(-0.5 * g.cost(hot_b, j) / g.adjacent_distance_m().value());
  c.initial_idle = Eigen::VectorXi::Zero(n);
  c.initial_offline = Eigen::VectorXi::Zero(n);
  for (int d = 0; d < spec.drivers; ++d) {
    const VertexId v = static_cast<VertexId>(u() * n);
    if (d % 3 == 0)
      c.initial_offline(v) += 1;
    else
      c.initial_idle(v) += 1;
  }
  c.seed = spec.seed;
  return c;
}

}  // namespace gemkit
