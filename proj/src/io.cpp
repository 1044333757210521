#include "gemkit/io.hpp"

#include "gemkit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gemkit::io {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string provenance_line(std::string_view config_text, std::optional<std::uint64_t> seed) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(config_text)));
  return std::string("# gemkit ") + GEMKIT_VERSION + " config=" + hash +
         " seed=" + (seed ? std::to_string(*seed) : std::string("none"));
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InputError("missing CSV column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

CsvTable parse_csv(std::string_view text, std::string_view what) {
  CsvTable t;
  bool have_header = false;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_fields(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != t.header.size())
        throw InputError(std::string(what) + ": line " + std::to_string(line_no) + " has " +
                         std::to_string(fields.size()) + " fields, expected " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw InputError(std::string(what) + ": missing header row");
  return t;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw InputError("write failed for '" + path + "'");
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

double parse_double(std::string_view s, std::string_view what) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError("invalid number '" + std::string(s) + "' for " + std::string(what));
  return v;
}

long parse_long(std::string_view s, std::string_view what) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError("invalid integer '" + std::string(s) + "' for " + std::string(what));
  return v;
}

GraphFile parse_graph_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("graph JSON: ") + e.what());
  }
  GraphFile g;
  try {
    g.spec.side_length_m = j.value("side_length_m", 1400.0);
    g.spec.adjacent_distance_m = j.value("adjacent_distance_m", 2400.0);
    g.spec.self_cost = j.value("self_cost", 0.0);
    g.neighborhood_order = j.value("neighborhood_order", 2);
    const auto& vs = j.at("vertices");
    std::vector<std::pair<int, AxialCoord>> cells;
    for (const auto& v : vs) cells.emplace_back(v.at("id").get<int>(), AxialCoord{v.at("q").get<int>(), v.at("r").get<int>()});
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (cells[k].first != static_cast<int>(k)) throw InputError("graph JSON: vertex ids must be 0..N-1");
      g.spec.cells.push_back(cells[k].second);
    }
    if (j.contains("blocked"))
      for (const auto& b : j.at("blocked")) g.spec.blocked.emplace_back(b.at("from").get<int>(), b.at("to").get<int>());
  } catch (const json::exception& e) {
    throw InputError(std::string("graph JSON: ") + e.what());
  }
  if (g.spec.cells.empty()) throw InputError("graph JSON: no vertices");
  if (g.neighborhood_order < 0) throw InputError("graph JSON: neighborhood_order must be >= 0");
  return g;
}

std::string graph_json(const GraphFile& g) {
  json j;
  j["side_length_m"] = g.spec.side_length_m;
  j["adjacent_distance_m"] = g.spec.adjacent_distance_m;
  j["self_cost"] = g.spec.self_cost;
  j["neighborhood_order"] = g.neighborhood_order;
  j["vertices"] = json::array();
  for (std::size_t k = 0; k < g.spec.cells.size(); ++k)
    j["vertices"].push_back({{"id", k}, {"q", g.spec.cells[k].q}, {"r", g.spec.cells[k].r}});
  auto blocked = g.spec.blocked;
  std::sort(blocked.begin(), blocked.end());
  j["blocked"] = json::array();
  for (auto [from, to] : blocked) j["blocked"].push_back({{"from", from}, {"to", to}});
  return j.dump(2) + "\n";
}

SnapshotSeries parse_snapshots(const CsvTable& table, int vertices) {
  if (table.rows.empty()) throw InputError("no snapshots");
  const auto ct = table.column("timestamp"), cv = table.column("vertex_id"), cd = table.column("demand"),
             cs = table.column("supply");
  std::map<long, Snapshot> by_time;
  std::set<std::pair<long, long>> seen;
  for (const auto& row : table.rows) {
    const long t = parse_long(row[ct], "timestamp");
    const long v = parse_long(row[cv], "vertex_id");
    if (v < 0 || v >= vertices) throw InputError("vertex_id " + row[cv] + " outside the graph");
    if (!seen.emplace(t, v).second)
      throw InputError("duplicate row for timestamp " + row[ct] + ", vertex " + row[cv]);
    const double d = parse_double(row[cd], "demand"), s = parse_double(row[cs], "supply");
    if (!(d >= 0) || !(s >= 0) || !std::isfinite(d) || !std::isfinite(s))
      throw InputError("masses must be finite and >= 0 (timestamp " + row[ct] + ")");
    auto [it, fresh] = by_time.try_emplace(t);
    if (fresh) it->second = {t, Eigen::VectorXd::Zero(vertices), Eigen::VectorXd::Zero(vertices)};
    it->second.demand(v) += d;
    it->second.supply(v) += s;
  }
  SnapshotSeries out;
  for (auto& [t, s] : by_time) out.push_back(std::move(s));
  return out;
}

std::string snapshots_csv(const SnapshotSeries& series) {
  std::string out = "timestamp,vertex_id,demand,supply\n";
  for (const auto& s : series)
    for (Eigen::Index v = 0; v < s.demand.size(); ++v)
      out += std::to_string(s.timestamp) + "," + std::to_string(v) + "," + format_double(s.demand(v)) + "," +
             format_double(s.supply(v)) + "\n";
  return out;
}

std::string plan_csv(const TransportPlan<double>& plan) {
  std::string out = "from_vertex,to_vertex,flow\n";
  for (const auto& f : plan.flows)
    if (f.amount > 0)
      out += std::to_string(f.from) + "," + std::to_string(f.to) + "," + format_double(f.amount) + "\n";
  return out;
}

std::string maps_csv(std::span<const EquilibriumMap<double>> maps) {
  std::string out = "timestamp,vertex_id,dsr,dsd\n";
  for (const auto& m : maps)
    for (Eigen::Index v = 0; v < m.dsr.size(); ++v)
      out += std::to_string(m.timestamp) + "," + std::to_string(v) + "," + format_double(m.dsr(v)) + "," +
             format_double(m.dsd(v)) + "\n";
  return out;
}

std::string panels_csv(std::span<const PanelDataset> panels) {
  std::string out = "day,interval,arm,outcome_name,outcome,demand_total,supply_time_total\n";
  for (const auto& p : panels) {
    if (p.covariates.size() != 2) throw InputError("panel CSV needs exactly the demand and supply-time covariates");
    for (int m = 0; m < p.days(); ++m)
      for (int k = 0; k < p.intervals(); ++k)
        out += std::to_string(m) + "," + std::to_string(k) + "," + std::to_string(p.arm(m, k)) + "," + p.outcome +
               "," + format_double(p.y(m, k)) + "," + format_double(p.covariates[0](m, k)) + "," +
               format_double(p.covariates[1](m, k)) + "\n";
  }
  return out;
}

std::vector<PanelDataset> parse_panels(const CsvTable& table) {
  if (table.rows.empty()) throw InputError("panel CSV has no rows");
  const auto cd = table.column("day"), ci = table.column("interval"), ca = table.column("arm"),
             cn = table.column("outcome_name"), co = table.column("outcome"), cx = table.column("demand_total"),
             cs = table.column("supply_time_total");
  std::vector<std::string> names;
  long days = 0, intervals = 0;
  for (const auto& row : table.rows) {
    if (std::find(names.begin(), names.end(), row[cn]) == names.end()) names.push_back(row[cn]);
    days = std::max(days, parse_long(row[cd], "day") + 1);
    intervals = std::max(intervals, parse_long(row[ci], "interval") + 1);
  }
  std::vector<PanelDataset> out;
  for (const auto& name : names) {
    PanelDataset p;
    p.outcome = name;
    p.y = Eigen::MatrixXd::Constant(days, intervals, std::nan(""));
    p.arm = Eigen::MatrixXi::Zero(days, intervals);
    p.covariates = {Eigen::MatrixXd::Zero(days, intervals), Eigen::MatrixXd::Zero(days, intervals)};
    p.unbalanced = intervals % 2 == 1;
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(days, intervals);
    for (const auto& row : table.rows) {
      if (row[cn] != name) continue;
      const long m = parse_long(row[cd], "day"), k = parse_long(row[ci], "interval");
      if (m < 0 || k < 0) throw InputError("panel day and interval must be >= 0");
      if (seen(m, k)++) throw InputError("duplicate panel cell for outcome " + name);
      p.arm(m, k) = static_cast<int>(parse_long(row[ca], "arm"));
      p.y(m, k) = parse_double(row[co], "outcome");
      p.covariates[0](m, k) = parse_double(row[cx], "demand_total");
      p.covariates[1](m, k) = parse_double(row[cs], "supply_time_total");
    }
    if ((seen.array() == 0).any()) throw InputError("panel for outcome " + name + " is missing cells");
    p.check();
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

Eigen::MatrixXd matrix_from_json(const json& j, std::string_view what) {
  if (!j.is_array() || j.empty()) throw InputError(std::string(what) + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw InputError(std::string(what) + " rows differ in length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = j[k].get<double>();
  return v;
}

PolicyParams policy_from_json(const json& j) {
  PolicyParams p;
  p.kind = policy_from_string(j.value("kind", std::string("A1")));
  p.alpha1 = j.value("alpha1", p.alpha1);
  p.alpha2 = j.value("alpha2", p.alpha2);
  p.alpha3 = j.value("alpha3", p.alpha3);
  p.alpha4 = j.value("alpha4", p.alpha4);
  p.eta = j.value("eta", p.eta);
  return p;
}

}  // namespace

SimConfig parse_sim_config(std::string_view text, std::shared_ptr<const WeightedGraph> graph) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config JSON: ") + e.what());
  }
  try {
    SimConfig c;
    if (j.contains("world")) {
      const auto& w = j.at("world");
      WorldSpec spec;
      spec.rows = w.value("rows", spec.rows);
      spec.cols = w.value("cols", spec.cols);
      spec.horizon_minutes = w.value("horizon_minutes", spec.horizon_minutes);
      spec.drivers = w.value("drivers", spec.drivers);
      spec.mean_orders_per_minute = w.value("mean_orders_per_minute", spec.mean_orders_per_minute);
      spec.max_pickup_m = w.value("max_pickup_m", spec.max_pickup_m);
      spec.cancel_prob = w.value("cancel_prob", spec.cancel_prob);
      spec.neighborhood_order = w.value("neighborhood_order", spec.neighborhood_order);
      spec.seed = w.value("seed", spec.seed);
      c = synthetic_world(spec);
      c.seed.reset();
      if (graph && graph->size() != c.graph->size()) throw InputError("config world and --graph disagree on size");
    }
    if (graph) c.graph = std::move(graph);
    if (!c.graph) throw InputError("config needs a \"world\" or a graph file");
    const int n = c.graph->size();
    c.horizon_minutes = j.value("horizon_minutes", c.horizon_minutes);
    c.rate_bucket_minutes = j.value("rate_bucket_minutes", c.rate_bucket_minutes);
    if (j.contains("demand_rate")) c.demand_rate = matrix_from_json(j.at("demand_rate"), "demand_rate");
    if (c.demand_rate.size() == 0) c.demand_rate = Eigen::MatrixXd::Zero(n, 1);
    if (j.contains("destination_weights"))
      c.destination_weights = matrix_from_json(j.at("destination_weights"), "destination_weights");
    if (j.contains("initial_idle")) c.initial_idle = vector_from_json(j.at("initial_idle")).cast<int>();
    if (c.initial_idle.size() == 0) c.initial_idle = Eigen::VectorXi::Zero(n);
    if (j.contains("initial_offline")) c.initial_offline = vector_from_json(j.at("initial_offline")).cast<int>();
    if (j.contains("online_prob")) c.online_prob = vector_from_json(j.at("online_prob"));
    if (j.contains("offline_prob")) c.offline_prob = vector_from_json(j.at("offline_prob"));
    c.idle_move_prob = j.value("idle_move_prob", c.idle_move_prob);
    c.speed_m_per_min = j.value("speed_m_per_min", c.speed_m_per_min);
    c.base_price = j.value("base_price", c.base_price);
    c.price_per_km = j.value("price_per_km", c.price_per_km);
    c.patience_minutes = j.value("patience_minutes", c.patience_minutes);
    c.max_pickup_m = j.value("max_pickup_m", c.max_pickup_m);
    c.cancel_prob = j.value("cancel_prob", c.cancel_prob);
    c.commission = j.value("commission", c.commission);
    if (j.contains("policies")) {
      c.policies.clear();
      for (const auto& p : j.at("policies")) c.policies.push_back(policy_from_json(p));
    }
    c.switch_minutes = j.value("switch_minutes", c.switch_minutes);
    if (j.contains("schedule")) c.schedule = j.at("schedule").get<std::vector<int>>();
    c.interval_minutes = j.value("interval_minutes", c.interval_minutes);
    c.gem_trace = j.value("gem_trace", c.gem_trace);
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("scheduled_orders"))
      for (const auto& o : j.at("scheduled_orders")) {
        ScheduledOrder s{o.at("minute").get<long>(), o.at("origin").get<int>(), o.at("destination").get<int>(), std::nullopt};
        if (o.contains("price")) s.price = o.at("price").get<double>();
        c.scheduled_orders.push_back(s);
      }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("config JSON: ") + e.what());
  }
}

}  // namespace gemkit::io
