#include "gemkit/graph.hpp"

#include "gemkit/error.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

namespace gemkit {

namespace {

constexpr int kHexDirections[6][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

std::vector<std::vector<VertexId>> layered_neighborhoods(
    int n, const std::vector<DirectedEdge>& edges, int order) {
  std::vector<std::vector<VertexId>> out(n);
  for (const auto& e : edges) {
    if (reachable(e.weight) && e.from != e.to) out[e.from].push_back(e.to);
  }
  for (auto& a : out) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  std::vector<std::vector<VertexId>> hoods(n);
  std::vector<int> depth(n, -1);
  for (VertexId s = 0; s < n; ++s) {
    std::fill(depth.begin(), depth.end(), -1);
    std::vector<VertexId> frontier{s};
    depth[s] = 0;
    hoods[s].push_back(s);
    for (int layer = 1; layer <= order && !frontier.empty(); ++layer) {
      std::vector<VertexId> next;
      for (VertexId u : frontier) {
        for (VertexId v : out[u]) {
          if (depth[v] < 0) {
            depth[v] = layer;
            next.push_back(v);
            hoods[s].push_back(v);
          }
        }
      }
      frontier = std::move(next);
    }
    std::sort(hoods[s].begin(), hoods[s].end());
  }
  return hoods;
}

}  // namespace

HexGridSpec HexGridSpec::parallelogram(int rows, int cols, double side_length_m,
                                       double adjacent_distance_m) {
  if (rows <= 0 || cols <= 0) throw InputError("hex grid must have at least one row and column");
  HexGridSpec spec;
  spec.side_length_m = side_length_m;
  spec.adjacent_distance_m = adjacent_distance_m;
  spec.cells.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int q = 0; q < cols; ++q) spec.cells.push_back({q, r});
  return spec;
}

Eigen::MatrixXd geodesic_costs(int n, std::span<const DirectedEdge> edges, double self_cost) {
  if (n < 0) throw InputError("negative vertex count");
  if (!(self_cost >= 0.0) || !std::isfinite(self_cost)) throw InputError("self cost must be finite and >= 0");
  std::vector<std::vector<std::pair<VertexId, double>>> adj(n);
  for (const auto& e : edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) throw InputError("edge endpoint out of range");
    if (std::isnan(e.weight) || e.weight < 0.0) throw InputError("negative or NaN edge weight");
    if (reachable(e.weight)) adj[e.from].emplace_back(e.to, e.weight);
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(n, n, kUnreachable);
  using Item = std::pair<double, VertexId>;
  std::vector<double> dist(n);
  for (VertexId s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), kUnreachable);
    dist[s] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (auto [v, w] : adj[u]) {
        if (d + w < dist[v]) {
          dist[v] = d + w;
          heap.emplace(dist[v], v);
        }
      }
    }
    for (VertexId t = 0; t < n; ++t) c(s, t) = dist[t];
    c(s, s) = self_cost;
  }
  return c;
}

WeightedGraph WeightedGraph::from_edges(int n, std::vector<DirectedEdge> edges, int order,
                                        double self_cost) {
  if (n <= 0) throw InputError("graph must have at least one vertex");
  if (order < 0) throw InputError("neighborhood order must be >= 0");
  WeightedGraph g;
  g.costs_ = geodesic_costs(n, edges, self_cost);
  g.neighborhoods_ = layered_neighborhoods(n, edges, order);
  g.edges_ = std::move(edges);
  g.self_cost_ = self_cost;
  g.order_ = order;
  g.index_neighborhoods();
  return g;
}

WeightedGraph WeightedGraph::from_costs(Eigen::MatrixXd costs,
                                        std::vector<std::vector<VertexId>> neighborhoods) {
  const auto n = static_cast<Eigen::Index>(neighborhoods.size());
  if (n == 0) throw InputError("graph must have at least one vertex");
  if (costs.rows() != n || costs.cols() != n) throw InputError("cost matrix must be N x N");
  WeightedGraph g;
  for (auto& h : neighborhoods) {
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
  }
  g.costs_ = std::move(costs);
  g.neighborhoods_ = std::move(neighborhoods);
  g.self_cost_ = g.costs_(0, 0);
  g.order_ = -1;
  g.index_neighborhoods();
  g.validate();
  return g;
}

WeightedGraph build_hex_grid(const HexGridSpec& spec, int order) {
  const int n = static_cast<int>(spec.cells.size());
  if (n == 0) throw InputError("empty hex grid");
  if (!(spec.side_length_m > 0.0)) throw InputError("hex side length must be positive");
  if (!(spec.adjacent_distance_m > 0.0)) throw InputError("adjacent distance must be positive");
  if (order < 0) throw InputError("neighborhood order must be >= 0");

  std::map<std::pair<int, int>, VertexId> index;
  for (VertexId i = 0; i < n; ++i) {
    if (!index.emplace(std::pair{spec.cells[i].q, spec.cells[i].r}, i).second)
      throw InputError("duplicate hex cell");
  }
  std::set<std::pair<VertexId, VertexId>> blocked;
  for (auto [a, b] : spec.blocked) {
    if (a < 0 || a >= n || b < 0 || b >= n) throw InputError("blocked pair references unknown vertex");
    blocked.emplace(a, b);
  }
  std::vector<DirectedEdge> edges;
  for (VertexId i = 0; i < n; ++i) {
    for (const auto& d : kHexDirections) {
      auto it = index.find({spec.cells[i].q + d[0], spec.cells[i].r + d[1]});
      if (it == index.end()) continue;
      const double w = blocked.count({i, it->second}) ? kUnreachable : spec.adjacent_distance_m;
      edges.push_back({i, it->second, w});
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const auto& a, const auto& b) { return std::pair{a.from, a.to} < std::pair{b.from, b.to}; });
  WeightedGraph g = WeightedGraph::from_edges(n, std::move(edges), order, spec.self_cost);
  g.coords_ = spec.cells;
  g.side_length_ = spec.side_length_m;
  g.adjacent_distance_ = spec.adjacent_distance_m;
  return g;
}

std::pair<HexGridSpec, std::vector<std::vector<VertexId>>> coarsen_hex_grid(const HexGridSpec& fine,
                                                                             int factor) {
  if (factor < 1) throw InputError("coarsening factor must be >= 1");
  if (fine.cells.empty()) throw InputError("empty hex grid");
  if (factor == 1) {
    // Identity coarsening keeps the fine numbering and blocked pairs.
    std::vector<std::vector<VertexId>> groups(fine.cells.size());
    for (VertexId i = 0; i < static_cast<VertexId>(fine.cells.size()); ++i) groups[i] = {i};
    return {fine, groups};
  }
  std::map<std::pair<int, int>, std::vector<VertexId>> blocks;
  for (VertexId i = 0; i < static_cast<VertexId>(fine.cells.size()); ++i) {
    const auto& c = fine.cells[i];
    blocks[{floor_div(c.r, factor), floor_div(c.q, factor)}].push_back(i);
  }
  HexGridSpec coarse;
  coarse.side_length_m = fine.side_length_m * factor;
  coarse.adjacent_distance_m = fine.adjacent_distance_m * factor;
  coarse.self_cost = fine.self_cost;
  std::vector<std::vector<VertexId>> groups;
  for (auto& [rq, members] : blocks) {
    coarse.cells.push_back({rq.second, rq.first});
    groups.push_back(std::move(members));
  }
  return {coarse, groups};
}

std::span<const VertexId> WeightedGraph::neighborhood(VertexId i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("vertex id " + std::to_string(i) + " out of range");
  return neighborhoods_[i];
}

bool WeightedGraph::in_neighborhood(VertexId i, VertexId j) const {
  auto h = neighborhood(i);
  return std::binary_search(h.begin(), h.end(), j);
}

std::vector<VertexId> WeightedGraph::adjacent(VertexId i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("vertex id out of range");
  std::vector<VertexId> out;
  for (const auto& e : edges_)
    if (e.from == i && e.to != i && reachable(e.weight)) out.push_back(e.to);
  if (edges_.empty()) {
    for (VertexId j : neighborhoods_[i])
      if (j != i) out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

WeightedGraph WeightedGraph::with_costs(Eigen::MatrixXd costs) const {
  if (costs.rows() != size() || costs.cols() != size()) throw InputError("cost override must be N x N");
  WeightedGraph g = *this;
  g.costs_ = std::move(costs);
  g.validate();
  return g;
}

double WeightedGraph::max_neighborhood_cost() const {
  double m = 0.0;
  for (VertexId i = 0; i < size(); ++i)
    for (VertexId j : neighborhoods_[i])
      if (j != i) m = std::max(m, costs_(i, j));
  return m;
}

void WeightedGraph::index_neighborhoods() {
  offsets_.assign(1, 0);
  for (const auto& h : neighborhoods_) offsets_.push_back(offsets_.back() + static_cast<Eigen::Index>(h.size()));
}

void WeightedGraph::validate() const {
  for (VertexId i = 0; i < size(); ++i) {
    const auto& h = neighborhoods_[i];
    if (!std::binary_search(h.begin(), h.end(), i))
      throw InputError("neighborhood of vertex " + std::to_string(i) + " must contain the vertex itself");
    for (VertexId j : h) {
      if (j < 0 || j >= size()) throw InputError("neighborhood references unknown vertex");
      if (!reachable(costs_(i, j)) || costs_(i, j) < 0.0)
        throw InputError("cost inside a neighborhood must be finite and >= 0");
    }
  }
}

}  // namespace gemkit
