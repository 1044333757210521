#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace gemkit {

using VertexId = int;

/// Sentinel for "no directed path" in weights and cost matrices.
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

inline bool reachable(double cost) { return std::isfinite(cost); }

struct DirectedEdge {
  VertexId from = 0;
  VertexId to = 0;
  double weight = 0.0;
};

/// Axial hexagon coordinate (pointy-top). The six neighbours of (q, r) are
/// (q+1, r), (q-1, r), (q, r+1), (q, r-1), (q+1, r-1), (q-1, r+1).
struct AxialCoord {
  int q = 0;
  int r = 0;
  friend bool operator==(const AxialCoord&, const AxialCoord&) = default;
};

/// Hexagonal tessellation of a city. Vertex ids are the positions in `cells`;
/// `parallelogram` numbers cells row-major, id = r * cols + q.
struct HexGridSpec {
  std::vector<AxialCoord> cells;
  double side_length_m = 1400.0;
  double adjacent_distance_m = 2400.0;
  /// Adjacent directed pairs that traffic cannot traverse (weight forced to infinity).
  std::vector<std::pair<VertexId, VertexId>> blocked;
  double self_cost = 0.0;

  static HexGridSpec parallelogram(int rows, int cols, double side_length_m = 1400.0,
                                   double adjacent_distance_m = 2400.0);
};

/// All-pairs shortest directed path lengths. Absent or infinite-weight edges
/// are not traversable; the diagonal is set to `self_cost`.
Eigen::MatrixXd geodesic_costs(int vertex_count, std::span<const DirectedEdge> edges,
                               double self_cost = 0.0);

/// The (G, W, C) triple: directed weighted edges, geodesic costs and k-layer
/// neighbourhoods. Immutable once built.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  /// Neighbourhoods are the vertices reachable in at most `neighborhood_order`
  /// hops over finite-weight edges.
  static WeightedGraph from_edges(int vertex_count, std::vector<DirectedEdge> edges,
                                  int neighborhood_order = 2, double self_cost = 0.0);

  /// Explicit cost matrix and neighbourhoods, for synthetic instances. Each
  /// neighbourhood is sorted and must contain its own vertex with finite costs.
  static WeightedGraph from_costs(Eigen::MatrixXd costs,
                                  std::vector<std::vector<VertexId>> neighborhoods);

  int size() const { return static_cast<int>(neighborhoods_.size()); }
  const Eigen::MatrixXd& costs() const { return costs_; }
  double cost(VertexId from, VertexId to) const { return costs_(from, to); }
  double self_cost() const { return self_cost_; }
  int neighborhood_order() const { return order_; }
  const std::vector<DirectedEdge>& edges() const { return edges_; }

  /// Ascending vertex ids of N_i; throws std::out_of_range for a bad id.
  std::span<const VertexId> neighborhood(VertexId i) const;
  bool in_neighborhood(VertexId i, VertexId j) const;

  /// Number of admissible (i, j in N_i) pairs.
  Eigen::Index flow_variable_count() const { return offsets_.back(); }
  /// Column of the first flow variable leaving vertex i; size() + 1 entries.
  std::span<const Eigen::Index> flow_offsets() const { return offsets_; }

  /// First-layer neighbours (one finite-weight hop), ascending, excluding i.
  std::vector<VertexId> adjacent(VertexId i) const;

  const std::vector<AxialCoord>& coords() const { return coords_; }
  std::optional<double> side_length_m() const { return side_length_; }
  std::optional<double> adjacent_distance_m() const { return adjacent_distance_; }

  /// Same topology with a per-timestamp cost override; neighbourhood costs must stay finite.
  WeightedGraph with_costs(Eigen::MatrixXd costs) const;

  /// Largest c_ij over j in N_i, j != i (0 when no such pair exists).
  double max_neighborhood_cost() const;

 private:
  friend WeightedGraph build_hex_grid(const HexGridSpec&, int);

  void index_neighborhoods();
  void validate() const;

  Eigen::MatrixXd costs_;
  std::vector<std::vector<VertexId>> neighborhoods_;
  std::vector<Eigen::Index> offsets_{0};
  std::vector<DirectedEdge> edges_;
  std::vector<AxialCoord> coords_;
  std::optional<double> side_length_;
  std::optional<double> adjacent_distance_;
  double self_cost_ = 0.0;
  int order_ = 0;
};

WeightedGraph build_hex_grid(const HexGridSpec& spec, int neighborhood_order = 2);

/// Merges fine cells into factor x factor axial blocks, each becoming one coarse
/// cell with side length and adjacent distance scaled by `factor`. Returns the
/// coarse spec and, per coarse vertex, its fine members. Blocked pairs are not
/// carried over.
std::pair<HexGridSpec, std::vector<std::vector<VertexId>>> coarsen_hex_grid(
    const HexGridSpec& fine, int factor);

}  // namespace gemkit
