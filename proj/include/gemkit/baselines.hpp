#pragma once

#include "gemkit/error.hpp"
#include "gemkit/graph.hpp"
#include "gemkit/lp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace gemkit {

template <typename Derived>
typename Derived::Scalar l2_distance(const Eigen::MatrixBase<Derived>& mu, const Eigen::MatrixBase<Derived>& nu) {
  if (mu.size() != nu.size()) throw InputError("l2: size mismatch");
  return (mu - nu).norm();
}

/// Probability vector v / sum(v). Rejects an all-zero or negative input.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> normalize_mass(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if ((v.array() < Scalar(0)).any()) throw InputError("negative mass cannot be normalized");
  const Scalar total = v.sum();
  if (!(total > Scalar(0))) throw InputError("zero total mass cannot be normalized");
  return v / total;
}

/// sqrt(0.5 * sum (sqrt p - sqrt q)^2) on normalized inputs; in [0, 1].
template <typename Derived>
typename Derived::Scalar hellinger_distance(const Eigen::MatrixBase<Derived>& mu, const Eigen::MatrixBase<Derived>& nu) {
  if (mu.size() != nu.size()) throw InputError("hellinger: size mismatch");
  const auto p = normalize_mass(mu);
  const auto q = normalize_mass(nu);
  return std::sqrt((p.array().sqrt() - q.array().sqrt()).square().sum() / 2);
}

/// Classical balanced optimal transport between normalized masses with all
/// finite-cost pairs admissible. Only supported rows and columns enter the LP.
template <typename Scalar>
Scalar balanced_wasserstein(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mu,
                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& nu, const Eigen::MatrixXd& costs,
                            const LPTolerances<Scalar>& tol = {}) {
  const Eigen::Index n = mu.size();
  if (nu.size() != n || costs.rows() != n || costs.cols() != n) throw InputError("wasserstein: size mismatch");
  const auto p = normalize_mass(mu);
  const auto q = normalize_mass(nu);
  std::vector<Eigen::Index> src, dst;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p(i) > Scalar(0)) src.push_back(i);
    if (q(i) > Scalar(0)) dst.push_back(i);
  }
  const auto ns = static_cast<Eigen::Index>(src.size()), nd = static_cast<Eigen::Index>(dst.size());
  std::vector<Eigen::Triplet<Scalar>> triplets;
  std::vector<Scalar> cost;
  for (Eigen::Index a = 0; a < ns; ++a)
    for (Eigen::Index b = 0; b < nd; ++b) {
      const double c = costs(src[a], dst[b]);
      if (!reachable(c)) continue;
      const auto col = static_cast<Eigen::Index>(cost.size());
      triplets.emplace_back(a, col, Scalar(1));
      triplets.emplace_back(ns + b, col, Scalar(1));
      cost.push_back(static_cast<Scalar>(c));
    }
  StandardFormLP<Scalar> lp;
  lp.A.resize(ns + nd, static_cast<Eigen::Index>(cost.size()));
  lp.A.setFromTriplets(triplets.begin(), triplets.end());
  lp.b.resize(ns + nd);
  for (Eigen::Index a = 0; a < ns; ++a) lp.b(a) = p(src[a]);
  for (Eigen::Index b = 0; b < nd; ++b) lp.b(ns + b) = q(dst[b]);
  lp.cost = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(cost.data(), static_cast<Eigen::Index>(cost.size()));
  const auto sol = solve(lp, tol);
  if (!sol.optimal()) throw NumericalError("balanced transport has no feasible coupling on this graph");
  return sol.objective;
}

/// sum_t w_t v_t / sum_t w_t. Throws when the weights sum to zero.
template <typename Scalar>
Scalar weighted_window_mean(std::span<const Scalar> values, std::span<const Scalar> weights) {
  if (values.size() != weights.size() || values.empty()) throw InputError("window values and weights must align");
  Scalar num = 0, den = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    num += weights[k] * values[k];
    den += weights[k];
  }
  if (!(den > Scalar(0))) throw UndefinedAggregateError("window has zero total demand");
  return num / den;
}

/// Demand-weighted mean of per-timestamp balanced Wasserstein distances.
/// Timestamps where either side carries no mass have no coupling and are skipped.
template <typename Scalar>
Scalar windowed_wasserstein(std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> demand,
                            std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> supply,
                            const Eigen::MatrixXd& costs) {
  if (demand.size() != supply.size() || demand.empty()) throw InputError("window needs aligned demand and supply");
  std::vector<Scalar> values, weights;
  for (std::size_t t = 0; t < demand.size(); ++t) {
    if (!(demand[t].sum() > Scalar(0)) || !(supply[t].sum() > Scalar(0))) continue;
    values.push_back(balanced_wasserstein<Scalar>(supply[t], demand[t], costs));
    weights.push_back(demand[t].sum());
  }
  if (values.empty()) throw UndefinedAggregateError("window has no timestamp with positive demand and supply");
  return weighted_window_mean<Scalar>(values, weights);
}

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> stack(std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

}  // namespace detail

/// L2 norm of the stacked (T * N)-vector of per-timestamp differences.
template <typename Scalar>
Scalar windowed_l2(std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> demand,
                   std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> supply) {
  if (demand.size() != supply.size() || demand.empty()) throw InputError("window needs aligned demand and supply");
  return l2_distance(detail::stack(demand), detail::stack(supply));
}

/// Hellinger distance between the stacked, window-normalized vectors.
template <typename Scalar>
Scalar windowed_hellinger(std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> demand,
                          std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> supply) {
  if (demand.size() != supply.size() || demand.empty()) throw InputError("window needs aligned demand and supply");
  return hellinger_distance(detail::stack(demand), detail::stack(supply));
}

}  // namespace gemkit
