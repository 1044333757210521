#include "gemkit/baselines.hpp"
#include "gemkit/dispatch.hpp"
#include "gemkit/error.hpp"
#include "gemkit/evaluation.hpp"
#include "gemkit/gem.hpp"
#include "gemkit/io.hpp"
#include "gemkit/parallel.hpp"
#include "gemkit/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gemkit;

namespace {

enum ExitCode { kOk = 0, kInputError = 2, kNumericalError = 3, kStrictFailure = 4 };

/// A warning promoted to an error by --strict.
class StrictFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string graph_path;
  std::string snapshots_path;
  std::string config_path;
  std::string panel_path;
  std::optional<double> lambda;
  std::optional<int> order;
  int window_min = 10;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string out = ".";
  bool strict = false;
  bool plans = false;

  int rows = 5, cols = 5;
  double side_m = 1400.0, adjacent_m = 2400.0;

  int days = 14;
  int history_days = 3;
  int search_days = 2;
  bool compare = false;
  bool planted = false;
  std::vector<double> alpha4_grid{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::string covariance = "unstructured";
  std::string correction = "mancl-derouen";
  std::vector<std::string> outcomes{"answer_rate", "finish_rate", "gmv", "gem"};

  /// Everything that determines output contents (not --out or --jobs), plus
  /// the bytes of every input file.
  std::string fingerprint() const {
    json j;
    j["command"] = command;
    for (const auto& [key, path] : {std::pair{"graph", graph_path}, {"snapshots", snapshots_path},
                                    {"config", config_path}, {"panel", panel_path}})
      if (!path.empty()) j[key] = io::read_file(path);
    if (lambda) j["lambda"] = *lambda;
    if (order) j["order"] = *order;
    j["window_min"] = window_min;
    j["plans"] = plans;
    j["strict"] = strict;
    j["grid"] = {rows, cols, side_m, adjacent_m};
    j["days"] = {days, history_days, search_days};
    j["compare"] = compare;
    j["planted"] = planted;
    j["alpha4_grid"] = alpha4_grid;
    j["gee"] = {covariance, correction};
    j["outcomes"] = outcomes;
    return j.dump();
  }

  std::string header() const { return io::provenance_line(fingerprint(), seed); }
};

void require(bool ok, const std::string& message) {
  if (!ok) throw InputError(message);
}

std::uint64_t require_seed(const RunConfig& rc) {
  require(rc.seed.has_value(), rc.command + " is stochastic and needs --seed");
  return *rc.seed;
}

void prepare_out(const RunConfig& rc) {
  std::error_code ec;
  fs::create_directories(rc.out, ec);
  require(!ec && fs::is_directory(rc.out), "cannot create output directory '" + rc.out + "'");
}

std::string out_path(const RunConfig& rc, const std::string& name) { return (fs::path(rc.out) / name).string(); }

void write_csv(const RunConfig& rc, const std::string& name, const std::string& body) {
  io::write_file(out_path(rc, name), rc.header() + "\n" + body);
  spdlog::info("wrote {}", out_path(rc, name));
}

void write_json(const RunConfig& rc, const std::string& name, json j) {
  j["provenance"] = rc.header();
  io::write_file(out_path(rc, name), j.dump(2) + "\n");
  spdlog::info("wrote {}", out_path(rc, name));
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::shared_ptr<const WeightedGraph> load_graph(const RunConfig& rc) {
  require(!rc.graph_path.empty(), "--graph is required");
  auto file = io::parse_graph_json(io::read_file(rc.graph_path));
  if (rc.order) file.neighborhood_order = *rc.order;
  return std::make_shared<const WeightedGraph>(file.build());
}

SnapshotSeries load_snapshots(const RunConfig& rc, int vertices) {
  require(!rc.snapshots_path.empty(), "--snapshots is required");
  return io::parse_snapshots(io::read_csv(rc.snapshots_path), vertices);
}

double resolve_lambda(const RunConfig& rc, const WeightedGraph& g) {
  const double lambda = rc.lambda.value_or(default_lambda(g));
  require(lambda >= 0 && std::isfinite(lambda), "--lambda must be finite and >= 0");
  return lambda;
}

int cmd_graph_build(const RunConfig& rc) {
  require(rc.rows > 0 && rc.cols > 0, "--rows and --cols must be positive");
  io::GraphFile g{HexGridSpec::parallelogram(rc.rows, rc.cols, rc.side_m, rc.adjacent_m), rc.order.value_or(2)};
  g.build();  // validates
  prepare_out(rc);
  io::write_file(out_path(rc, "graph.json"), io::graph_json(g));
  return kOk;
}

int cmd_gem(const RunConfig& rc) {
  const auto graph = load_graph(rc);
  const auto snaps = load_snapshots(rc, graph->size());
  const double lambda = resolve_lambda(rc, *graph);
  std::vector<TransportPlan<double>> plans(snaps.size());
  parallel_for(snaps.size(), rc.jobs, [&](std::size_t t) {
    plans[t] = compute_gem<double>(GemProblem<double>{graph, snaps[t].supply, snaps[t].demand, lambda});
  });
  if (!plans.empty() && plans[0].lambda_above_transport_bound) {
    const std::string msg = "lambda * adjacent cost >= 2: no transport can lower rho";
    if (rc.strict) throw StrictFailure(msg);
    spdlog::warn(msg);
  }
  prepare_out(rc);
  std::string series = "timestamp,rho,l1_term,cost_term\n";
  std::vector<EquilibriumMap<double>> maps;
  for (std::size_t t = 0; t < snaps.size(); ++t) {
    const auto& p = plans[t];
    series += std::to_string(snaps[t].timestamp) + "," + io::format_double(p.rho) + "," +
              io::format_double(p.l1_term) + "," + io::format_double(p.cost_term) + "\n";
    maps.push_back(equilibrium_map<double>(p.mu_tilde, snaps[t].demand, snaps[t].timestamp));
    if (rc.plans) write_csv(rc, "plan_" + std::to_string(snaps[t].timestamp) + ".csv", io::plan_csv(p));
  }
  write_csv(rc, "gem.csv", series);
  write_csv(rc, "maps.csv", io::maps_csv(maps));
  return kOk;
}

int cmd_metrics(const RunConfig& rc) {
  require(rc.window_min > 0, "--window-min must be positive");
  const auto graph = load_graph(rc);
  const auto snaps = load_snapshots(rc, graph->size());
  const double lambda = resolve_lambda(rc, *graph);
  std::vector<double> rho(snaps.size());
  std::vector<EquilibriumMap<double>> maps(snaps.size());
  parallel_for(snaps.size(), rc.jobs, [&](std::size_t t) {
    const auto plan = compute_gem<double>(graph, snaps[t].supply, snaps[t].demand, lambda);
    rho[t] = plan.rho;
    maps[t] = equilibrium_map<double>(plan.mu_tilde, snaps[t].demand);
  });
  auto window_of = [&](long t) {
    const long w = t >= 0 ? t / rc.window_min : -((-t + rc.window_min - 1) / rc.window_min);
    return w * rc.window_min;
  };
  std::map<long, std::vector<std::size_t>> windows;
  for (std::size_t t = 0; t < snaps.size(); ++t) windows[window_of(snaps[t].timestamp)].push_back(t);

  std::string body = "window_start,metric_name,value\n";
  for (const auto& [start, members] : windows) {
    std::vector<Eigen::VectorXd> demand, supply;
    std::vector<double> values, weights;
    std::vector<EquilibriumMap<double>> window_maps;
    double dsum = 0, ssum = 0;
    for (auto t : members) {
      window_maps.push_back(maps[t]);
      demand.push_back(snaps[t].demand);
      supply.push_back(snaps[t].supply);
      values.push_back(rho[t]);
      weights.push_back(snaps[t].demand.sum());
      dsum += snaps[t].demand.sum();
      ssum += snaps[t].supply.sum();
    }
    const double nan = std::nan("");
    double gem = nan, dsr = nan, wass = nan;
    try {
      gem = weighted_window_mean<double>(values, weights);
      dsr = aggregate_maps<double>(std::span<const EquilibriumMap<double>>(window_maps)).dsr;
    } catch (const UndefinedAggregateError&) {
    }
    try {
      wass = windowed_wasserstein<double>(demand, supply, graph->costs());
    } catch (const UndefinedAggregateError&) {
    }
    const double hell = dsum > 0 && ssum > 0 ? windowed_hellinger<double>(demand, supply) : nan;
    const double l2 = windowed_l2<double>(demand, supply);
    for (const auto& [name, v] : {std::pair{"gem", gem}, {"gem_dsr", dsr}, {"hellinger", hell}, {"l2", l2}, {"wasserstein", wass}})
      body += std::to_string(start) + "," + name + "," + io::format_double(v) + "\n";
  }
  prepare_out(rc);
  write_csv(rc, "metrics.csv", body);
  return kOk;
}

SimConfig load_sim_config(const RunConfig& rc) {
  require(!rc.config_path.empty(), "--config is required");
  std::shared_ptr<const WeightedGraph> graph;
  if (!rc.graph_path.empty()) graph = load_graph(rc);
  SimConfig c = io::parse_sim_config(io::read_file(rc.config_path), graph);
  if (rc.lambda) c.lambda = *rc.lambda;
  c.seed = require_seed(rc);
  return c;
}

/// V1/V2 tables from A1 history days whose seeds derive from the run seed.
std::shared_ptr<const ValueTable> history_values(const SimConfig& config, std::uint64_t seed, int days, int jobs,
                                                 double eta) {
  require(days > 0, "--history-days must be positive");
  std::vector<EpisodeMetrics> history(static_cast<std::size_t>(days));
  parallel_for(history.size(), jobs, [&](std::size_t k) {
    SimConfig h = config;
    h.seed = derive_seed(seed, 1'000'000 + k);
    h.policies = {PolicyParams{}};
    h.schedule.clear();
    h.values.reset();
    h.gem_trace = false;
    h.record_trajectories = true;
    history[k] = run_episode(h);
  });
  const double lambda = config.lambda > 0 ? config.lambda : default_lambda(*config.graph);
  spdlog::info("building value tables from {} history days", days);
  return std::make_shared<const ValueTable>(
      build_value_table(history, *config.graph, lambda, config.horizon_minutes, eta, 10, jobs));
}

bool needs_values(const std::vector<PolicyParams>& policies) {
  for (const auto& p : policies)
    if (p.kind != PolicyKind::A1) return true;
  return false;
}

double value_eta(const std::vector<PolicyParams>& policies) {
  for (const auto& p : policies)
    if (p.kind != PolicyKind::A1) return p.eta;
  return 1.0;
}

json episode_json(const EpisodeMetrics& m) {
  json j;
  j["total_orders"] = m.total_orders;
  j["answered"] = m.answered;
  j["finished"] = m.finished;
  j["answer_rate"] = optional_json(m.answer_rate());
  j["finish_rate"] = optional_json(m.finish_rate());
  j["drivers_revenue"] = m.drivers_revenue;
  j["gmv"] = m.gmv;
  j["total_drivers"] = m.total_drivers;
  j["intervals"] = json::array();
  for (const auto& iv : m.intervals)
    j["intervals"].push_back({{"start_minute", iv.start_minute},
                              {"policy", iv.policy},
                              {"orders", iv.orders},
                              {"answered", iv.answered},
                              {"finished", iv.finished},
                              {"answer_rate", optional_json(iv.answer_rate())},
                              {"gmv", iv.gmv},
                              {"revenue", iv.revenue},
                              {"supply_minutes", iv.supply_minutes},
                              {"gem", optional_json(iv.gem)}});
  return j;
}

int cmd_simulate(const RunConfig& rc) {
  SimConfig c = load_sim_config(rc);
  const std::uint64_t seed = *c.seed;
  if (needs_values(c.policies)) c.values = history_values(c, seed, rc.history_days, rc.jobs, value_eta(c.policies));
  const EpisodeMetrics m = run_episode(c);
  prepare_out(rc);
  json report = episode_json(m);
  report["seed"] = seed;
  write_json(rc, "metrics.json", report);
  write_csv(rc, "snapshots.csv", io::snapshots_csv(m.snapshots));
  if (c.gem_trace) {
    std::string trace = "interval_start,gem\n";
    for (const auto& iv : m.intervals)
      trace += std::to_string(iv.start_minute) + "," + (iv.gem ? io::format_double(*iv.gem) : "nan") + "\n";
    write_csv(rc, "gem_trace.csv", trace);
  }
  if (rc.compare) {
    require(rc.days > 0, "--days must be positive");
    std::vector<std::uint64_t> day_seeds;
    for (int d = 0; d < rc.days; ++d) day_seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(d)));
    const auto rows = compare_policies(c, c.policies, day_seeds, rc.jobs);
    std::string table = "policy,day_seed,revenue,answer_rate,revenue_improvement_pct,answer_rate_improvement_pct\n";
    for (const auto& r : rows)
      table += r.policy + "," + std::to_string(r.day_seed) + "," + io::format_double(r.revenue) + "," +
               (r.answer_rate ? io::format_double(*r.answer_rate) : "nan") + "," +
               io::format_double(r.revenue_improvement_pct) + "," +
               (r.answer_rate_improvement_pct ? io::format_double(*r.answer_rate_improvement_pct) : "nan") + "\n";
    write_csv(rc, "comparison.csv", table);
  }
  return kOk;
}

int cmd_search(const RunConfig& rc) {
  const std::uint64_t seed = require_seed(rc);
  AlphaSearchSpec spec;
  spec.seed = seed;
  spec.jobs = rc.jobs;
  spec.alpha4_grid = rc.alpha4_grid;
  AlphaObjective objective;
  if (rc.planted) {
    // Known optimum at (0.5, 0) for checking the search itself.
    objective = [](double a3, double a4, std::uint64_t) { return 100.0 - 100.0 * (a3 - 0.5) * (a3 - 0.5) - a4; };
  } else {
    require(rc.search_days > 0, "--search-days must be positive");
    SimConfig c = load_sim_config(rc);
    PolicyParams base;
    base.kind = PolicyKind::A3;
    if (!c.policies.empty()) {
      base.alpha1 = c.policies.front().alpha1;
      base.alpha2 = c.policies.front().alpha2;
      base.eta = c.policies.front().eta;
    }
    c.values = history_values(c, seed, rc.history_days, rc.jobs, base.eta);
    c.schedule.clear();
    c.gem_trace = false;
    const int days = rc.search_days;
    objective = [c, base, days](double a3, double a4, std::uint64_t s) {
      double total = 0;
      for (int d = 0; d < days; ++d) {
        SimConfig run = c;
        PolicyParams p = base;
        p.alpha3 = a3;
        p.alpha4 = a4;
        run.policies = {p};
        run.seed = derive_seed(s, static_cast<std::uint64_t>(d));
        total += run_episode(run).drivers_revenue;
      }
      return total / days;
    };
  }
  const auto r = grid_search_alphas(objective, spec);
  prepare_out(rc);
  write_json(rc, "search.json",
             {{"alpha3", r.alpha3},
              {"alpha4", r.alpha4},
              {"objective", r.objective},
              {"bracket", {r.bracket_low, r.bracket_high}},
              {"evaluations", r.evaluations},
              {"seed", seed}});
  return kOk;
}

WorkingCovariance covariance_from(const std::string& s) {
  if (s == "independence") return WorkingCovariance::Independence;
  if (s == "exchangeable") return WorkingCovariance::Exchangeable;
  if (s == "unstructured") return WorkingCovariance::Unstructured;
  throw InputError("unknown --covariance '" + s + "'");
}

SandwichCorrection correction_from(const std::string& s) {
  if (s == "none") return SandwichCorrection::None;
  if (s == "kauermann-carroll") return SandwichCorrection::KauermannCarroll;
  if (s == "mancl-derouen") return SandwichCorrection::ManclDeRouen;
  throw InputError("unknown --correction '" + s + "'");
}

int cmd_evaluate(const RunConfig& rc) {
  const GeeOptions options{covariance_from(rc.covariance)};
  const SandwichCorrection correction = correction_from(rc.correction);
  std::vector<PanelDataset> panels;
  prepare_out(rc);
  if (!rc.panel_path.empty()) {
    require(rc.config_path.empty(), "give either --panel or --config, not both");
    panels = io::parse_panels(io::read_csv(rc.panel_path));
  } else {
    SimConfig c = load_sim_config(rc);
    const std::uint64_t seed = *c.seed;
    require(c.policies.size() >= 1 && c.policies.size() <= 2, "evaluate needs one (A/A) or two (A/B) policies");
    const PolicyParams baseline = c.policies.front(), treatment = c.policies.back();
    if (needs_values(c.policies)) c.values = history_values(c, seed, rc.history_days, rc.jobs, value_eta(c.policies));
    std::vector<PanelOutcome> outcomes;
    for (const auto& o : rc.outcomes) outcomes.push_back(panel_outcome_from_string(o));
    std::vector<std::uint64_t> day_seeds;
    for (int d = 0; d < rc.days; ++d) day_seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(d)));
    panels = interleaved_design(c, baseline, treatment, day_seeds, outcomes, rc.jobs);
    write_csv(rc, "panel.csv", io::panels_csv(panels));
  }
  json report;
  report["outcomes"] = json::array();
  std::string md = "| outcome | relative improvement % | p-value |\n|---|---|---|\n";
  std::vector<std::string> unconverged;
  for (const auto& p : panels) {
    const GeeFit fit = fit_gee(p, options);
    const AteResult a = test_ate(fit, 1.0, correction);
    if (!fit.converged) unconverged.push_back(p.outcome);
    if (!a.warning.empty()) spdlog::warn("{}: {}", p.outcome, a.warning);
    report["outcomes"].push_back({{"outcome", p.outcome},
                                  {"ate", a.ate},
                                  {"se", a.se},
                                  {"t", a.t},
                                  {"df", a.df},
                                  {"p_two_sided", a.p_two_sided},
                                  {"p_one_sided", a.p_one_sided},
                                  {"relative_improvement_pct", a.relative_improvement_pct},
                                  {"converged", fit.converged},
                                  {"iterations", fit.iterations},
                                  {"unbalanced", p.unbalanced},
                                  {"unidentified", fit.unidentified.size()},
                                  {"warning", a.warning}});
    md += "| " + p.outcome + " | " + io::format_double(std::round(a.relative_improvement_pct * 100) / 100) + " | " +
          io::format_double(a.p_two_sided) + " |\n";
  }
  report["seed"] = rc.seed ? json(*rc.seed) : json(nullptr);
  write_json(rc, "report.json", report);
  io::write_file(out_path(rc, "report.md"), "<!-- " + rc.header().substr(2) + " -->\n" + md);
  if (!unconverged.empty()) {
    const std::string msg = "GEE did not converge for " + unconverged.front();
    if (rc.strict) throw StrictFailure(msg);
    spdlog::warn(msg);
  }
  return kOk;
}

void print_error(int code, const std::string& type, const std::string& message) {
  std::cerr << json{{"error", {{"code", code}, {"type", type}, {"message", message}}}}.dump() << "\n";
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("gemkit");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("GEMKIT_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  RunConfig rc;
  CLI::App app{"gemkit: supply-demand equilibrium metrics, dispatch simulation and policy evaluation"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--jobs", rc.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", rc.out, "Output directory");
    sub->add_flag("--strict", rc.strict, "Treat warnings (lambda bound, non-convergence) as errors");
  };
  auto graph_opts = [&](CLI::App* sub) {
    sub->add_option("--graph", rc.graph_path, "Graph JSON");
    sub->add_option("--order", rc.order, "Override the neighborhood order");
    sub->add_option("--lambda", rc.lambda, "Transport cost weight (default: 0.45 / max adjacent cost)");
  };

  auto* gb = app.add_subcommand("graph-build", "Write a hexagonal city graph");
  gb->add_option("--rows", rc.rows, "Grid rows")->capture_default_str();
  gb->add_option("--cols", rc.cols, "Grid columns")->capture_default_str();
  gb->add_option("--side-m", rc.side_m, "Hexagon side length in metres")->capture_default_str();
  gb->add_option("--adjacent-m", rc.adjacent_m, "Cost between adjacent cells in metres")->capture_default_str();
  gb->add_option("--order", rc.order, "Neighborhood order (default: 2)");
  gb->add_option("--out", rc.out, "Output directory");

  auto* gem = app.add_subcommand("gem", "GEM per snapshot, equilibrium maps, optional plans");
  graph_opts(gem);
  common(gem);
  gem->add_option("--snapshots", rc.snapshots_path, "Snapshot CSV")->required();
  gem->add_flag("--plans", rc.plans, "Also write plan_<t>.csv per timestamp");

  auto* metrics = app.add_subcommand("metrics", "GEM, Hellinger, L2 and Wasserstein per window");
  graph_opts(metrics);
  common(metrics);
  metrics->add_option("--snapshots", rc.snapshots_path, "Snapshot CSV")->required();
  metrics->add_option("--window-min", rc.window_min, "Window length in timestamp units");

  auto sim_opts = [&](CLI::App* sub) {
    graph_opts(sub);
    common(sub);
    sub->add_option("--config", rc.config_path, "Simulation config JSON");
    sub->add_option("--seed", rc.seed, "Random seed (required)");
    sub->add_option("--history-days", rc.history_days, "History days for value tables");
  };
  auto* simulate = app.add_subcommand("simulate", "Run one simulated day");
  sim_opts(simulate);
  simulate->add_flag("--compare", rc.compare, "Also compare every configured policy over --days days");
  simulate->add_option("--days", rc.days, "Days for --compare");

  auto* search = app.add_subcommand("search", "Tune (alpha3, alpha4) of the A3 policy");
  sim_opts(search);
  search->add_option("--search-days", rc.search_days, "Simulated days per objective evaluation");
  search->add_option("--alpha4-grid", rc.alpha4_grid, "alpha4 candidates")->delimiter(',');
  search->add_flag("--planted", rc.planted, "Use a planted objective with optimum (0.5, 0)");

  auto* evaluate = app.add_subcommand("evaluate", "GEE treatment-effect report");
  sim_opts(evaluate);
  evaluate->add_option("--panel", rc.panel_path, "Panel CSV (instead of simulating)");
  evaluate->add_option("--days", rc.days, "Simulated days");
  evaluate->add_option("--outcomes", rc.outcomes, "Comma list of answer_rate, finish_rate, gmv, gem")->delimiter(',');
  evaluate->add_option("--covariance", rc.covariance, "independence | exchangeable | unstructured");
  evaluate->add_option("--correction", rc.correction, "none | kauermann-carroll | mancl-derouen");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error(kInputError, "usage", e.what());
    return kInputError;
  }

  try {
    if (gb->parsed()) {
      rc.command = "graph-build";
      return cmd_graph_build(rc);
    }
    if (gem->parsed()) {
      rc.command = "gem";
      return cmd_gem(rc);
    }
    if (metrics->parsed()) {
      rc.command = "metrics";
      return cmd_metrics(rc);
    }
    if (simulate->parsed()) {
      rc.command = "simulate";
      return cmd_simulate(rc);
    }
    if (search->parsed()) {
      rc.command = "search";
      return cmd_search(rc);
    }
    rc.command = "evaluate";
    return cmd_evaluate(rc);
  } catch (const InputError& e) {
    print_error(kInputError, "input", e.what());
    return kInputError;
  } catch (const NumericalError& e) {
    print_error(kNumericalError, "numerical", e.what());
    return kNumericalError;
  } catch (const StrictFailure& e) {
    print_error(kStrictFailure, "strict", e.what());
    return kStrictFailure;
  } catch (const std::exception& e) {
    print_error(kNumericalError, "internal", e.what());
    return kNumericalError;
  }
}
