#pragma once

#include "gemkit/graph.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace gemkit::testing {

/// Exhaustive search over integer transport plans: each vertex i splits its
/// integer supply mu_i over N_i in every possible way.
inline double brute_force_gem(const WeightedGraph& g, const std::vector<int>& mu, const std::vector<int>& nu,
                              double lambda) {
  const int n = g.size();
  std::vector<double> arrived(n, 0.0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int, std::size_t, double)> split = [&](int i, int left, std::size_t pos, double cost) {
    if (i == n) {
      double l1 = 0;
      for (int j = 0; j < n; ++j) l1 += std::abs(nu[j] - arrived[j]);
      best = std::min(best, l1 + lambda * cost);
      return;
    }
    auto hood = g.neighborhood(i);
    if (pos + 1 == hood.size()) {
      arrived[hood[pos]] += left;
      split(i + 1, i + 1 < n ? mu[i + 1] : 0, 0, cost + left * g.cost(i, hood[pos]));
      arrived[hood[pos]] -= left;
      return;
    }
    for (int k = 0; k <= left; ++k) {
      arrived[hood[pos]] += k;
      split(i, left - k, pos + 1, cost + k * g.cost(i, hood[pos]));
      arrived[hood[pos]] -= k;
    }
  };
  split(0, n > 0 ? mu[0] : 0, 0, 0.0);
  return best;
}

/// Random integer masses summing to `total` spread over n entries.
inline std::vector<int> random_counts(std::mt19937_64& rng, int n, int total) {
  std::vector<int> out(n, 0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int k = 0; k < total; ++k) ++out[pick(rng)];
  return out;
}

/// Random small graph with explicit costs. Symmetric instances mirror both the
/// costs and the neighbourhoods.
inline WeightedGraph random_cost_graph(std::mt19937_64& rng, int n, bool symmetric, double max_cost = 10.0,
                                       double density = 0.5) {
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::vector<VertexId>> hoods(n);
  for (int i = 0; i < n; ++i) hoods[i].push_back(i);
  for (int i = 0; i < n; ++i)
    for (int j = symmetric ? i + 1 : 0; j < n; ++j) {
      if (i == j) continue;
      const double w = std::round(u(rng) * max_cost * 4) / 4 + 0.25;
      c(i, j) = w;
      if (symmetric) c(j, i) = w;
      if (u(rng) < density) {
        hoods[i].push_back(j);
        if (symmetric) hoods[j].push_back(i);
      }
    }
  return WeightedGraph::from_costs(c, hoods);
}

inline Eigen::VectorXd to_vector(const std::vector<int>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace gemkit::testing

namespace gemkit::testing {

/// Best total over all partial matchings using only pairs with weight > 0.
inline double brute_force_matching(const Eigen::MatrixXd& w) {
  const int rows = static_cast<int>(w.rows()), cols = static_cast<int>(w.cols());
  std::vector<char> used(cols, 0);
  std::function<double(int)> best_from = [&](int k) -> double {
    if (k == rows) return 0.0;
    double best = best_from(k + 1);  // row k unmatched
    for (int l = 0; l < cols; ++l) {
      if (used[l] || !(w(k, l) > 0.0)) continue;
      used[l] = 1;
      best = std::max(best, w(k, l) + best_from(k + 1));
      used[l] = 0;
    }
    return best;
  };
  return best_from(0);
}

}  // namespace gemkit::testing
