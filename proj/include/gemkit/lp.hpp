#pragma once

#include "gemkit/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace gemkit {

/// min cost^T x  subject to  A x = b, x >= 0.
template <typename Scalar = double>
struct StandardFormLP {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Sparse = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;

  Sparse A;
  Vector b;
  Vector cost;
  std::vector<std::string> names;  // optional, one per column

  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index cols() const { return A.cols(); }

  void check() const {
    if (A.rows() != b.size()) throw InputError("LP: rows(A) != len(b)");
    if (A.cols() != cost.size()) throw InputError("LP: cols(A) != len(cost)");
    if (!names.empty() && static_cast<Eigen::Index>(names.size()) != A.cols())
      throw InputError("LP: one name per column expected");
    if (!b.allFinite() || !cost.allFinite()) throw InputError("LP: non-finite data");
  }
};

/// Sparse triplet dump ("A i j v", "b i v", "c j v") for cross-checking with other solvers.
template <typename Scalar>
void write_triplets(std::ostream& os, const StandardFormLP<Scalar>& lp) {
  os.precision(17);
  os << "lp " << lp.rows() << ' ' << lp.cols() << '\n';
  for (Eigen::Index j = 0; j < lp.A.outerSize(); ++j)
    for (typename StandardFormLP<Scalar>::Sparse::InnerIterator it(lp.A, j); it; ++it)
      os << "A " << it.row() << ' ' << it.col() << ' ' << static_cast<double>(it.value()) << '\n';
  for (Eigen::Index i = 0; i < lp.rows(); ++i) os << "b " << i << ' ' << static_cast<double>(lp.b(i)) << '\n';
  for (Eigen::Index j = 0; j < lp.cols(); ++j) os << "c " << j << ' ' << static_cast<double>(lp.cost(j)) << '\n';
}

template <typename Scalar = double>
struct LPTolerances {
  Scalar feasibility = Scalar(1e-9);
  Scalar optimality = Scalar(1e-9);  // reduced-cost threshold
  Scalar duality_gap = Scalar(1e-8);
  Scalar pivot = Scalar(1e-11);
  long max_iterations = 1'000'000;
  int refactor_interval = 0;  // 0: max(128, rows)
  /// Consecutive degenerate pivots before Dantzig pricing hands over to Bland's rule.
  int degenerate_streak_limit = 50;
};

enum class LPStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(LPStatus s) {
  switch (s) {
    case LPStatus::Optimal: return "optimal";
    case LPStatus::Infeasible: return "infeasible";
    case LPStatus::Unbounded: return "unbounded";
    case LPStatus::IterationLimit: return "iteration_limit";
  }
  return "?";
}

template <typename Scalar = double>
struct LPSolution {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  LPStatus status = LPStatus::Infeasible;
  Vector x;  // primal, one entry per column
  Vector y;  // dual, one entry per row
  Scalar objective = 0;
  Scalar dual_objective = 0;
  long iterations = 0;
  std::vector<Eigen::Index> basis;  // basic column per row (-1: artificial on a redundant row)
  Scalar primal_residual = 0;       // max |A x - b|
  Scalar dual_infeasibility = 0;    // max(0, -(cost - A^T y))

  bool optimal() const { return status == LPStatus::Optimal; }
};

/// Observed after every pivot: iteration, phase (1 or 2), primal objective of
/// the current basis, dual objective b^T y of the basis' dual estimate.
template <typename Scalar>
using IterationObserver = std::function<void(long, int, Scalar, Scalar)>;

namespace detail {

/// Dense-inverse revised simplex with product-form updates and periodic
/// refactorization. Columns >= n are artificial unit columns.
template <typename Scalar>
class RevisedSimplex {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Sparse = typename StandardFormLP<Scalar>::Sparse;
  using Index = Eigen::Index;

  RevisedSimplex(const StandardFormLP<Scalar>& lp, const LPTolerances<Scalar>& tol,
                 const IterationObserver<Scalar>* observer)
      : lp_(lp), tol_(tol), observer_(observer), m_(lp.rows()), n_(lp.cols()) {
    sign_ = Vector::Ones(m_);
    for (Index i = 0; i < m_; ++i)
      if (lp_.b(i) < 0) sign_(i) = -1;
    rhs_ = lp_.b.cwiseProduct(sign_);
    art_row_.clear();
  }

  LPSolution<Scalar> run(std::span<const Index> hint) {
    LPSolution<Scalar> out;
    bool warm = !hint.empty() && try_basis(hint);
    if (!warm) {
      cold_start();
      phase_ = 1;
      auto st = iterate();
      if (st == LPStatus::IterationLimit) return finish(out, st);
      Scalar infeas = 0;
      for (Index r = 0; r < m_; ++r)
        if (basis_[r] >= n_) infeas += std::max(Scalar(0), x_(r));
      if (infeas > tol_.feasibility * std::max<Scalar>(Scalar(1), rhs_.template lpNorm<1>()))
        return finish(out, LPStatus::Infeasible);
      drive_out_artificials();
    }
    phase_ = 2;
    if (warm)
      recompute_duals();  // binv_ is fresh from try_basis
    else
      refactor();
    auto st = iterate();
    return finish(out, st);
  }

 private:
  // Column access covering artificial unit columns.
  template <typename F>
  void for_column(Index j, F&& f) const {
    if (j >= n_) {
      f(art_row_[j - n_], Scalar(1));
      return;
    }
    for (typename Sparse::InnerIterator it(lp_.A, j); it; ++it) f(it.row(), it.value() * sign_(it.row()));
  }

  int refactor_interval() const {
    return tol_.refactor_interval > 0 ? tol_.refactor_interval : static_cast<int>(std::max<Index>(128, m_));
  }

  Scalar phase_cost(Index j) const {
    if (phase_ == 1) return j >= n_ ? Scalar(1) : Scalar(0);
    return j >= n_ ? Scalar(0) : lp_.cost(j);
  }

  bool try_basis(std::span<const Index> hint) {
    if (static_cast<Index>(hint.size()) != m_) return false;
    std::vector<char> seen(n_, 0);
    for (Index j : hint) {
      if (j < 0 || j >= n_ || seen[j]) return false;
      seen[j] = 1;
    }
    basis_.assign(hint.begin(), hint.end());
    total_cols_ = n_;
    if (!refactor(true)) return false;
    if ((x_.array() < -tol_.feasibility).any()) return false;
    return true;
  }

  void cold_start() {
    // Reuse +unit columns already present as the starting basis; the rest of the rows get artificials.
    basis_.assign(m_, -1);
    std::vector<Index> nnz(n_, 0);
    for (Index j = 0; j < n_; ++j)
      for (typename Sparse::InnerIterator it(lp_.A, j); it; ++it)
        if (it.value() != Scalar(0)) ++nnz[j];
    for (Index j = 0; j < n_; ++j) {
      if (nnz[j] != 1) continue;
      for (typename Sparse::InnerIterator it(lp_.A, j); it; ++it) {
        if (it.value() == Scalar(0)) continue;
        const Index r = it.row();
        if (basis_[r] < 0 && it.value() * sign_(r) == Scalar(1)) basis_[r] = j;
      }
    }
    art_row_.clear();
    for (Index r = 0; r < m_; ++r) {
      if (basis_[r] < 0) {
        basis_[r] = n_ + static_cast<Index>(art_row_.size());
        art_row_.push_back(r);
      }
    }
    total_cols_ = n_ + static_cast<Index>(art_row_.size());
    binv_ = Matrix::Identity(m_, m_);
    x_ = rhs_;
    phase_ = 1;
    recompute_duals();
  }

  bool refactor(bool check_rank = false) {
    Matrix basis_matrix = Matrix::Zero(m_, m_);
    for (Index r = 0; r < m_; ++r)
      for_column(basis_[r], [&](Index row, Scalar v) { basis_matrix(row, r) = v; });
    if (check_rank) {
      Eigen::FullPivLU<Matrix> lu(basis_matrix);
      if (!lu.isInvertible()) return false;
      binv_ = lu.inverse();
    } else {
      binv_ = basis_matrix.partialPivLu().inverse();
    }
    x_ = binv_ * rhs_;
    recompute_duals();
    since_refactor_ = 0;
    return true;
  }

  void recompute_duals() {
    Vector cb(m_);
    for (Index r = 0; r < m_; ++r) cb(r) = phase_cost(basis_[r]);
    y_ = binv_.transpose() * cb;
  }

  Scalar reduced_cost(Index j) const {
    Scalar d = phase_cost(j);
    for_column(j, [&](Index row, Scalar v) { d -= y_(row) * v; });
    return d;
  }

  Scalar objective() const {
    Scalar z = 0;
    for (Index r = 0; r < m_; ++r) z += phase_cost(basis_[r]) * x_(r);
    return z;
  }

  LPStatus iterate() {
    std::vector<char> is_basic(total_cols_, 0);
    for (Index j : basis_)
      if (j >= 0) is_basic[j] = 1;
    int degenerate_streak = 0;
    Vector alpha(m_);
    while (true) {
      if (iterations_ >= tol_.max_iterations) return LPStatus::IterationLimit;
      const bool bland = degenerate_streak >= tol_.degenerate_streak_limit;
      // Pricing: most negative reduced cost (lowest index on ties), or lowest improving index under Bland.
      Index entering = -1;
      Scalar best = -tol_.optimality;
      const Index candidates = phase_ == 1 ? total_cols_ : n_;
      for (Index j = 0; j < candidates; ++j) {
        if (is_basic[j]) continue;
        const Scalar d = reduced_cost(j);
        if (d < best) {
          entering = j;
          best = d;
          if (bland) break;
        }
      }
      if (entering < 0) {
        if (since_refactor_ == 0) return LPStatus::Optimal;
        refactor();  // confirm optimality on a fresh factorization
        continue;
      }

      alpha.setZero();
      for_column(entering, [&](Index row, Scalar v) { alpha.noalias() += binv_.col(row) * v; });

      Index leave = -1;
      Scalar theta = std::numeric_limits<Scalar>::infinity();
      for (Index r = 0; r < m_; ++r) {
        if (alpha(r) <= tol_.pivot) continue;
        const Scalar ratio = std::max(Scalar(0), x_(r)) / alpha(r);
        if (leave < 0 || ratio < theta - tol_.feasibility) {
          leave = r;
          theta = ratio;
        } else if (ratio <= theta + tol_.feasibility) {
          const bool better = bland ? basis_[r] < basis_[leave] : alpha(r) > alpha(leave);
          if (better) {
            leave = r;
            theta = std::min(theta, ratio);
          }
        }
      }
      if (leave < 0) return LPStatus::Unbounded;

      const Scalar piv = alpha(leave);
      theta = std::max(Scalar(0), x_(leave)) / piv;
      degenerate_streak = theta <= tol_.feasibility ? degenerate_streak + 1 : 0;

      x_.noalias() -= theta * alpha;
      x_(leave) = theta;
      pivot_update(leave, alpha, best);
      is_basic[basis_[leave]] = 0;
      is_basic[entering] = 1;
      basis_[leave] = entering;
      ++iterations_;
      if (++since_refactor_ >= refactor_interval()) refactor();
      if (observer_ && *observer_) (*observer_)(iterations_, phase_, objective(), rhs_.dot(y_));
    }
  }

  // Replaces basic row `leave` by the column whose B^-1 image is `alpha`
  // (clobbered); `reduced` is that column's reduced cost before the pivot.
  void pivot_update(Index leave, Vector& alpha, Scalar reduced) {
    const Vector new_row = binv_.row(leave).transpose() / alpha(leave);
    y_.noalias() += reduced * new_row;
    alpha(leave) = Scalar(0);
    binv_.noalias() -= alpha * new_row.transpose();
    binv_.row(leave) = new_row.transpose();
  }

  void drive_out_artificials() {
    for (Index r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      // Row r of B^-1 A over structural nonbasic columns.
      std::vector<char> is_basic(n_, 0);
      for (Index j : basis_)
        if (j >= 0 && j < n_) is_basic[j] = 1;
      Index entering = -1;
      Scalar best = tol_.pivot * 100;
      for (Index j = 0; j < n_; ++j) {
        if (is_basic[j]) continue;
        Scalar v = 0;
        for_column(j, [&](Index row, Scalar a) { v += binv_(r, row) * a; });
        if (std::abs(v) > best) {
          best = std::abs(v);
          entering = j;
        }
      }
      if (entering < 0) continue;  // redundant row: the artificial stays basic at zero
      Vector alpha = Vector::Zero(m_);
      for_column(entering, [&](Index row, Scalar v) { alpha.noalias() += binv_.col(row) * v; });
      const Scalar theta = x_(r) / alpha(r);
      x_.noalias() -= theta * alpha;
      x_(r) = theta;
      pivot_update(r, alpha, Scalar(0));
      basis_[r] = entering;
      recompute_duals();
    }
  }

  LPSolution<Scalar>& finish(LPSolution<Scalar>& out, LPStatus status) {
    out.status = status;
    out.iterations = iterations_;
    out.x = Vector::Zero(n_);
    out.basis.assign(m_, -1);
    for (Index r = 0; r < m_; ++r) {
      if (basis_[r] < n_) {
        out.x(basis_[r]) = x_(r);
        out.basis[r] = basis_[r];
      }
    }
    out.y = y_.cwiseProduct(sign_);
    out.objective = lp_.cost.dot(out.x);
    out.dual_objective = lp_.b.dot(out.y);
    const Vector residual = lp_.A * out.x - lp_.b;
    out.primal_residual = m_ > 0 ? residual.cwiseAbs().maxCoeff() : Scalar(0);
    if (n_ > 0) {
      const Vector reduced = lp_.cost - lp_.A.transpose() * out.y;
      out.dual_infeasibility = std::max(Scalar(0), -reduced.minCoeff());
    }
    return out;
  }

  const StandardFormLP<Scalar>& lp_;
  const LPTolerances<Scalar>& tol_;
  const IterationObserver<Scalar>* observer_;
  Index m_, n_;
  Index total_cols_ = 0;
  Vector sign_, rhs_;
  std::vector<Index> art_row_;
  std::vector<Index> basis_;
  Matrix binv_;
  Vector x_, y_;
  int phase_ = 2;
  long iterations_ = 0;
  int since_refactor_ = 0;
};

}  // namespace detail

/// Revised simplex: Dantzig pricing with a Bland's-rule fallback on long
/// degenerate streaks. A primal-feasible `initial_basis` (one column per row)
/// skips phase one; otherwise artificials are added where no +unit column exists.
template <typename Scalar>
LPSolution<Scalar> solve(const StandardFormLP<Scalar>& lp, const LPTolerances<Scalar>& tol = {},
                         std::span<const Eigen::Index> initial_basis = {},
                         const IterationObserver<Scalar>* observer = nullptr) {
  lp.check();
  if (lp.rows() == 0) {
    LPSolution<Scalar> out;
    out.x = LPSolution<Scalar>::Vector::Zero(lp.cols());
    out.y.resize(0);
    const bool bounded = (lp.cost.array() >= -tol.optimality).all();
    out.status = bounded ? LPStatus::Optimal : LPStatus::Unbounded;
    return out;
  }
  detail::RevisedSimplex<Scalar> simplex(lp, tol, observer);
  auto sol = simplex.run(initial_basis);
  if (sol.status == LPStatus::Optimal) {
    // Final clean-up: tiny negative values are round-off.
    for (Eigen::Index j = 0; j < sol.x.size(); ++j)
      if (sol.x(j) < Scalar(0) && sol.x(j) > -tol.feasibility) sol.x(j) = Scalar(0);
    sol.objective = lp.cost.dot(sol.x);
  }
  return sol;
}

template <typename Scalar>
struct DualityCheck {
  Scalar primal = 0;
  Scalar dual = 0;
  Scalar gap = 0;  // primal - dual
  LPSolution<Scalar> solution;
};

/// Solves and reports both objectives. Throws NumericalError unless optimal.
template <typename Scalar>
DualityCheck<Scalar> solve_dual_check(const StandardFormLP<Scalar>& lp, const LPTolerances<Scalar>& tol = {},
                                      std::span<const Eigen::Index> initial_basis = {}) {
  auto sol = solve(lp, tol, initial_basis);
  if (!sol.optimal()) throw NumericalError(std::string("LP not solved to optimality: ") + to_string(sol.status));
  DualityCheck<Scalar> out;
  out.primal = sol.objective;
  out.dual = sol.dual_objective;
  out.gap = out.primal - out.dual;
  out.solution = std::move(sol);
  return out;
}

}  // namespace gemkit
