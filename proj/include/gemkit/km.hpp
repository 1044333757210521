#pragma once

#include <Eigen/Dense>

#include <limits>
#include <utility>
#include <vector>

namespace gemkit {

/// Marks a pair that may never be matched.
inline constexpr double kExcludedPair = -std::numeric_limits<double>::infinity();

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), ascending by row
  double total_weight = 0.0;
};

/// Maximum-weight bipartite matching (Kuhn-Munkres with potentials, O(n^3) on
/// the square padding of `weights`). Pairs with weight <= 0 or kExcludedPair are
/// never reported, so rows and columns may stay unmatched. Deterministic: rows
/// are inserted in index order and ties keep the lowest column.
Assignment max_weight_assignment(const Eigen::MatrixXd& weights);

}  // namespace gemkit
