#pragma once

#include "gemkit/gem.hpp"
#include "gemkit/parallel.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gemkit {

/// Distribution of one random transport cost c~_l. `low == high` is a constant.
struct UniformCost {
  double low = 0.0;
  double high = 0.0;

  double mean() const { return (low + high) / 2; }
  bool constant() const { return low == high; }
};

/// Constants of the conditional-mean condition
///   E(lambda c | lambda c >= h) >= alpha1 * lambda * E(c) + alpha2 * h.
/// For U[L, U], E(c | c >= h) = (max(h, L) + U) / 2, so alpha2 = 1/2 with
/// alpha1 = U / (U + L). A point mass at c satisfies it with alpha1 = alpha2 = 1/2.
struct BoundConstants {
  double alpha1 = 0.0;
  double alpha2 = 0.5;
};

inline BoundConstants uniform_bound_constants(const UniformCost& d) {
  if (!(d.low >= 0.0) || !(d.high >= d.low)) throw InputError("uniform cost needs 0 <= low <= high");
  if (d.high == 0.0) return {1.0, 0.5};  // c = 0: the condition is vacuous
  return {d.high / (d.high + d.low), 0.5};
}

template <typename Scalar = double>
struct ExpectationBound {
  Scalar empirical_mean = 0;  // mean of z* over trials
  Scalar standard_error = 0;
  Scalar bound = 0;           // right-hand side with delta = 0
  Scalar margin = 0;          // bound - empirical_mean
  BoundConstants constants;   // shared alpha2, smallest alpha1 over pairs
  long trials = 0;
};

/// Right-hand side of the expectation bound with every delta_l = 0 for a
/// feasible point x_hat in (gamma, S, w1, w2) column order.
template <typename Scalar>
Scalar expectation_bound_rhs(const GemProblem<Scalar>& problem, std::span<const UniformCost> costs,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x_hat, Scalar alpha2) {
  const Eigen::Index n0 = problem.graph->flow_variable_count();
  const Eigen::Index n = problem.graph->size();
  Scalar sum = 0;
  for (Eigen::Index l = 0; l < n0; ++l)
    sum += problem.lambda * static_cast<Scalar>(costs[static_cast<std::size_t>(l)].mean()) * x_hat(l);
  sum += x_hat.segment(n0, n).sum();
  return sum / alpha2;
}

/// Samples the costs of every admissible pair independently, re-solves the GEM
/// LP per trial, and compares the mean optimum with the expected-optimum bound. The
/// reference point x_hat is the LP optimum at the expected costs. Trial k draws
/// from its own stream derive_seed(seed, k); results are summed in trial order.
template <typename Scalar>
ExpectationBound<Scalar> monte_carlo_expectation_bound(const GemProblem<Scalar>& problem,
                                                       std::span<const UniformCost> costs, long trials,
                                                       std::uint64_t seed, int jobs = 1) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  problem.check();
  const Eigen::Index n0 = problem.graph->flow_variable_count();
  if (static_cast<Eigen::Index>(costs.size()) != n0) throw InputError("one cost distribution per admissible pair");
  if (trials <= 0) throw InputError("trials must be positive");

  ExpectationBound<Scalar> out;
  out.constants.alpha1 = 1.0;
  for (const auto& d : costs) out.constants.alpha1 = std::min(out.constants.alpha1, uniform_bound_constants(d).alpha1);

  Vector expected(n0);
  for (Eigen::Index l = 0; l < n0; ++l) expected(l) = static_cast<Scalar>(costs[static_cast<std::size_t>(l)].mean());
  const auto lp = assemble_lp(problem, &expected);
  const auto basis = gem_initial_basis(problem);
  const auto ref = solve(lp, LPTolerances<Scalar>{}, std::span<const Eigen::Index>(basis));
  if (!ref.optimal()) throw NumericalError("reference LP not optimal");
  out.bound = expectation_bound_rhs(problem, costs, ref.x, static_cast<Scalar>(out.constants.alpha2));

  std::vector<Scalar> z(static_cast<std::size_t>(trials));
  parallel_for(z.size(), jobs, [&](std::size_t k) {
    std::mt19937_64 rng(derive_seed(seed, k));
    Vector sampled(n0);
    for (Eigen::Index l = 0; l < n0; ++l) {
      const auto& d = costs[static_cast<std::size_t>(l)];
      sampled(l) = d.constant() ? Scalar(d.low) : Scalar(std::uniform_real_distribution<double>(d.low, d.high)(rng));
    }
    auto trial_lp = lp;
    for (Eigen::Index l = 0; l < n0; ++l) trial_lp.cost(l) = problem.lambda * sampled(l);
    const auto sol = solve(trial_lp, LPTolerances<Scalar>{}, std::span<const Eigen::Index>(basis));
    if (!sol.optimal()) throw NumericalError("sampled LP not optimal");
    z[k] = sol.objective;
  });

  Scalar sum = 0, sum_sq = 0;
  for (Scalar v : z) {
    sum += v;
    sum_sq += v * v;
  }
  const auto t = static_cast<Scalar>(trials);
  out.trials = trials;
  out.empirical_mean = sum / t;
  const Scalar var = trials > 1 ? std::max(Scalar(0), (sum_sq - t * out.empirical_mean * out.empirical_mean) / (t - 1)) : 0;
  out.standard_error = std::sqrt(var / t);
  out.margin = out.bound - out.empirical_mean;
  return out;
}

}  // namespace gemkit
