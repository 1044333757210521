#include "gemkit/km.hpp"

#include "gemkit/error.hpp"

#include <algorithm>
#include <cmath>

namespace gemkit {

Assignment max_weight_assignment(const Eigen::MatrixXd& weights) {
  const int rows = static_cast<int>(weights.rows());
  const int cols = static_cast<int>(weights.cols());
  Assignment out;
  if (rows == 0 || cols == 0) return out;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (std::isnan(weights.data()[i]) || weights.data()[i] == std::numeric_limits<double>::infinity())
      throw InputError("assignment weights must be finite or excluded");

  // Excluded and non-positive pairs become zero profit; a zero-profit pair is
  // indistinguishable from leaving both sides unmatched.
  const int n = std::max(rows, cols);
  Eigen::MatrixXd profit = Eigen::MatrixXd::Zero(n, n);
  profit.topLeftCorner(rows, cols) = weights.cwiseMax(0.0);
  const double top = profit.maxCoeff();

  // Minimise cost = top - profit; 1-based potentials u, v and column owner p.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - profit(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  for (int i = 0; i < rows; ++i) {
    const int j = row_to_col[i];
    if (j < cols && weights(i, j) > 0.0) {
      out.pairs.emplace_back(i, j);
      out.total_weight += weights(i, j);
    }
  }
  return out;
}

}  // namespace gemkit
