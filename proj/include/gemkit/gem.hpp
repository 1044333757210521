#pragma once

#include "gemkit/error.hpp"
#include "gemkit/graph.hpp"
#include "gemkit/lp.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gemkit {

enum class MassRole { Supply, Demand };

/// Nonnegative point masses on the vertices at one timestamp.
template <typename Scalar = double>
struct MassVector {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector values;
  MassRole role = MassRole::Supply;
  long timestamp = 0;

  Scalar total() const { return values.sum(); }
  Eigen::Index size() const { return values.size(); }

  void check() const {
    if (!values.allFinite()) throw InputError("mass vector has non-finite entries");
    if ((values.array() < Scalar(0)).any()) throw InputError("mass vector has negative entries");
  }
};

/// Supply `mu` is transported inside neighbourhoods to meet fixed demand `nu`.
template <typename Scalar = double>
struct GemProblem {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::shared_ptr<const WeightedGraph> graph;
  Vector mu;
  Vector nu;
  Scalar lambda = 0;

  void check() const {
    if (!graph) throw InputError("GEM problem has no graph");
    if (mu.size() != graph->size() || nu.size() != graph->size())
      throw InputError("mass vectors must have one entry per vertex");
    MassVector<Scalar>{mu}.check();
    MassVector<Scalar>{nu}.check();
    if (!(lambda >= Scalar(0)) || !std::isfinite(static_cast<double>(lambda)))
      throw InputError("lambda must be finite and >= 0");
  }

  /// True when lambda * max_{j in N_i, j != i} c_ij >= 2, i.e. some admissible
  /// move can never pay for itself and the neighbourhood is wider than useful.
  bool lambda_above_transport_bound() const {
    return static_cast<double>(lambda) * graph->max_neighborhood_cost() >= 2.0;
  }
};

template <typename Scalar = double>
struct TransportPlan {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Flow {
    VertexId from = 0;
    VertexId to = 0;
    Scalar amount = 0;
  };

  std::vector<Flow> flows;  // every admissible pair, canonical column order
  Vector mu_tilde;          // mass after transport
  Vector slack;             // |nu - mu_tilde| as recovered from the LP
  Scalar rho = 0;           // l1_term + lambda * cost_term
  Scalar l1_term = 0;
  Scalar cost_term = 0;
  Scalar lambda = 0;
  Scalar lp_objective = 0;
  Scalar dual_objective = 0;
  long iterations = 0;
  bool lambda_above_transport_bound = false;

  Scalar flow(VertexId from, VertexId to) const {
    for (const auto& f : flows)
      if (f.from == from && f.to == to) return f.amount;
    return Scalar(0);
  }
};

/// Canonical LP column of gamma_ij: offset(i) + position of j in N_i, or -1.
inline Eigen::Index flow_column(const WeightedGraph& g, VertexId i, VertexId j) {
  auto h = g.neighborhood(i);
  auto it = std::lower_bound(h.begin(), h.end(), j);
  if (it == h.end() || *it != j) return -1;
  return g.flow_offsets()[i] + (it - h.begin());
}

/// Block layout of the GEM linear program. Columns: gamma (N0), S, w1, w2
/// (N each). Rows: supply marginals, then the two |nu - A2 gamma| <= S rows.
///
///   [A1   0   0  0] [gamma]   [mu]
///   [A2   I  -I  0] [S    ] = [nu]
///   [A2  -I   0  I] [w1   ]   [nu]
///                   [w2   ]
///
/// Row i of A1 has ones on the columns of the flows leaving i; row j of A2 has
/// ones on the columns gamma_ij for every i with j in N_i.
template <typename Scalar>
StandardFormLP<Scalar> assemble_lp(const GemProblem<Scalar>& problem,
                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* flow_costs = nullptr) {
  problem.check();
  const WeightedGraph& g = *problem.graph;
  const Eigen::Index n = g.size();
  const Eigen::Index n0 = g.flow_variable_count();
  if (flow_costs && flow_costs->size() != n0) throw InputError("one flow cost per admissible pair expected");

  StandardFormLP<Scalar> lp;
  lp.A.resize(3 * n, n0 + 3 * n);
  lp.b.resize(3 * n);
  lp.b << problem.mu, problem.nu, problem.nu;
  lp.cost = StandardFormLP<Scalar>::Vector::Zero(n0 + 3 * n);

  lp.A.reserve(Eigen::VectorXi::Constant(n0 + 3 * n, 3));
  for (VertexId i = 0; i < n; ++i) {
    auto hood = g.neighborhood(i);
    for (std::size_t p = 0; p < hood.size(); ++p) {
      const Eigen::Index col = g.flow_offsets()[i] + static_cast<Eigen::Index>(p);
      const VertexId j = hood[p];
      lp.A.insert(i, col) = Scalar(1);
      lp.A.insert(n + j, col) = Scalar(1);
      lp.A.insert(2 * n + j, col) = Scalar(1);
      const Scalar c = flow_costs ? (*flow_costs)(col) : static_cast<Scalar>(g.cost(i, j));
      lp.cost(col) = problem.lambda * c;
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    lp.A.insert(n + k, n0 + k) = Scalar(1);   // S
    lp.A.insert(2 * n + k, n0 + k) = Scalar(-1);
    lp.A.insert(n + k, n0 + n + k) = Scalar(-1);  // w1
    lp.A.insert(2 * n + k, n0 + 2 * n + k) = Scalar(1);  // w2
    lp.cost(n0 + k) = Scalar(1);
  }
  lp.A.makeCompressed();
  return lp;
}

/// Basis of the "nothing moves" plan gamma = diag(mu): gamma_ii, S_i, and
/// whichever of w1_i / w2_i absorbs the imbalance. Always primal feasible.
template <typename Scalar>
std::vector<Eigen::Index> gem_initial_basis(const GemProblem<Scalar>& problem) {
  const WeightedGraph& g = *problem.graph;
  const Eigen::Index n = g.size();
  const Eigen::Index n0 = g.flow_variable_count();
  std::vector<Eigen::Index> basis(3 * n);
  for (VertexId i = 0; i < n; ++i) {
    basis[i] = flow_column(g, i, i);
    basis[n + i] = n0 + i;
    basis[2 * n + i] = problem.mu(i) >= problem.nu(i) ? n0 + n + i : n0 + 2 * n + i;
  }
  return basis;
}

namespace detail {

template <typename Scalar>
TransportPlan<Scalar> plan_from_solution(const GemProblem<Scalar>& problem, const LPSolution<Scalar>& sol,
                                         const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* flow_costs) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const WeightedGraph& g = *problem.graph;
  const Eigen::Index n = g.size();
  const Eigen::Index n0 = g.flow_variable_count();
  TransportPlan<Scalar> plan;
  plan.lambda = problem.lambda;
  plan.mu_tilde = Vector::Zero(n);
  plan.flows.reserve(static_cast<std::size_t>(n0));
  for (VertexId i = 0; i < n; ++i) {
    auto hood = g.neighborhood(i);
    for (std::size_t p = 0; p < hood.size(); ++p) {
      const Eigen::Index col = g.flow_offsets()[i] + static_cast<Eigen::Index>(p);
      const Scalar amount = std::max(Scalar(0), sol.x(col));
      plan.flows.push_back({i, hood[p], amount});
      plan.mu_tilde(hood[p]) += amount;
      const Scalar c = flow_costs ? (*flow_costs)(col) : static_cast<Scalar>(g.cost(i, hood[p]));
      plan.cost_term += c * amount;
    }
  }
  plan.slack = sol.x.segment(n0, n);
  plan.l1_term = (problem.nu - plan.mu_tilde).template lpNorm<1>();
  plan.rho = plan.l1_term + problem.lambda * plan.cost_term;
  plan.lp_objective = sol.objective;
  plan.dual_objective = sol.dual_objective;
  plan.iterations = sol.iterations;
  plan.lambda_above_transport_bound = problem.lambda_above_transport_bound();
  return plan;
}

}  // namespace detail

/// rho_lambda(mu, nu | G, C) and its optimal plan. The plan is one of possibly
/// many optima; only rho, the marginals and the objective split are stable.
/// `flow_costs` optionally replaces c_ij per admissible pair (canonical order).
template <typename Scalar>
TransportPlan<Scalar> compute_gem(const GemProblem<Scalar>& problem, const LPTolerances<Scalar>& tol = {},
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* flow_costs = nullptr) {
  const auto lp = assemble_lp(problem, flow_costs);
  const auto basis = gem_initial_basis(problem);
  const auto sol = solve(lp, tol, std::span<const Eigen::Index>(basis));
  if (!sol.optimal())
    throw NumericalError(std::string("GEM linear program not optimal: ") + to_string(sol.status));
  return detail::plan_from_solution(problem, sol, flow_costs);
}

template <typename Scalar>
TransportPlan<Scalar> compute_gem(std::shared_ptr<const WeightedGraph> graph,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mu,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& nu, Scalar lambda) {
  return compute_gem(GemProblem<Scalar>{std::move(graph), mu, nu, lambda});
}

/// Default lambda: lambda * (largest first-layer cost) = 0.45.
inline double default_lambda(const WeightedGraph& g) {
  double c = 0.0;
  for (VertexId i = 0; i < g.size(); ++i)
    for (VertexId j : g.adjacent(i))
      if (reachable(g.cost(i, j))) c = std::max(c, g.cost(i, j));
  return c > 0.0 ? 0.45 / c : 0.0;
}

/// Per-vertex optimal supply-demand ratio and difference at one timestamp.
template <typename Scalar = double>
struct EquilibriumMap {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector dsr;             // o / (d~ + [d~ == 0])
  Vector dsd;             // o - d~
  Vector demand;          // o
  Vector optimal_supply;  // d~ = mu_tilde
  long timestamp = 0;
};

template <typename Scalar>
EquilibriumMap<Scalar> equilibrium_map(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mu_tilde,
                                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& demand,
                                       long timestamp = 0) {
  if (mu_tilde.size() != demand.size()) throw InputError("plan and demand sizes differ");
  EquilibriumMap<Scalar> m;
  m.demand = demand;
  m.optimal_supply = mu_tilde;
  m.timestamp = timestamp;
  m.dsd = demand - mu_tilde;
  m.dsr = demand.array() / (mu_tilde.array() + (mu_tilde.array() == Scalar(0)).template cast<Scalar>());
  return m;
}

template <typename Scalar>
EquilibriumMap<Scalar> equilibrium_map(const TransportPlan<Scalar>& plan, const MassVector<Scalar>& demand) {
  return equilibrium_map(plan.mu_tilde, demand.values, demand.timestamp);
}

enum class AggregateWeight {
  Demand,             // w = o
  MeanSupplyDemand,   // w = (o + d~) / 2
};

template <typename Scalar = double>
struct MapAggregate {
  Scalar dsr = 0;   // weighted mean of DSr
  Scalar adsd = 0;  // weighted mean of |DSd|
  Scalar weight = 0;
};

/// Weighted averages of DSr and |DSd| over a region and a window of maps.
/// Throws UndefinedAggregateError when every weight is zero.
template <typename Scalar>
MapAggregate<Scalar> aggregate_maps(std::span<const EquilibriumMap<Scalar>> maps, std::span<const VertexId> region,
                                    AggregateWeight mode = AggregateWeight::Demand) {
  if (maps.empty() || region.empty()) throw InputError("aggregate needs a nonempty window and region");
  MapAggregate<Scalar> out;
  Scalar dsr_sum = 0, adsd_sum = 0;
  for (const auto& m : maps) {
    for (VertexId i : region) {
      if (i < 0 || i >= m.dsr.size()) throw InputError("region vertex out of range");
      const Scalar w = mode == AggregateWeight::Demand ? m.demand(i) : (m.demand(i) + m.optimal_supply(i)) / 2;
      out.weight += w;
      dsr_sum += w * m.dsr(i);
      adsd_sum += w * std::abs(m.dsd(i));
    }
  }
  if (!(out.weight > Scalar(0))) throw UndefinedAggregateError("aggregate weights sum to zero");
  out.dsr = dsr_sum / out.weight;
  out.adsd = adsd_sum / out.weight;
  return out;
}

template <typename Scalar>
MapAggregate<Scalar> aggregate_maps(std::span<const EquilibriumMap<Scalar>> maps,
                                    AggregateWeight mode = AggregateWeight::Demand) {
  if (maps.empty()) throw InputError("aggregate needs a nonempty window");
  std::vector<VertexId> all(static_cast<std::size_t>(maps.front().dsr.size()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<VertexId>(i);
  return aggregate_maps(maps, std::span<const VertexId>(all), mode);
}

/// Sums fine masses into coarse cells; `groups[c]` lists the fine members of
/// coarse vertex c. Every fine vertex must belong to exactly one group.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coarsen_masses(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& fine,
                                                       std::span<const std::vector<VertexId>> groups) {
  std::vector<int> hits(static_cast<std::size_t>(fine.size()), 0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coarse =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) throw InputError("coarsening map is not surjective: empty coarse cell");
    for (VertexId v : groups[c]) {
      if (v < 0 || v >= fine.size()) throw InputError("coarsening map references unknown fine vertex");
      ++hits[static_cast<std::size_t>(v)];
      coarse(static_cast<Eigen::Index>(c)) += fine(v);
    }
  }
  for (int h : hits) {
    if (h == 0) throw InputError("coarsening map leaves a fine vertex unassigned");
    if (h > 1) throw InputError("coarsening map assigns a fine vertex to several coarse cells");
  }
  return coarse;
}

/// GEM on a coarser tessellation: masses are summed per coarse cell and the
/// metric recomputed there. The coarse value summarises, it does not equal, the fine one.
template <typename Scalar>
TransportPlan<Scalar> multilevel_gem(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mu,
                                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& nu,
                                     std::span<const std::vector<VertexId>> groups,
                                     std::shared_ptr<const WeightedGraph> coarse, Scalar lambda) {
  if (!coarse || coarse->size() != static_cast<int>(groups.size()))
    throw InputError("coarse graph must have one vertex per group");
  GemProblem<Scalar> p{std::move(coarse), coarsen_masses(mu, groups), coarsen_masses(nu, groups), lambda};
  return compute_gem(p);
}

template <typename Scalar>
TransportPlan<Scalar> multilevel_gem(const HexGridSpec& fine, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mu,
                                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& nu, int factor,
                                     int neighborhood_order, Scalar lambda) {
  auto [coarse_spec, groups] = coarsen_hex_grid(fine, factor);
  auto coarse = std::make_shared<const WeightedGraph>(build_hex_grid(coarse_spec, neighborhood_order));
  return multilevel_gem(mu, nu, std::span<const std::vector<VertexId>>(groups), std::move(coarse), lambda);
}

}  // namespace gemkit
