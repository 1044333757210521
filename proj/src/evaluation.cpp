#include "gemkit/evaluation.hpp"

#include "gemkit/baselines.hpp"
#include "gemkit/error.hpp"
#include "gemkit/gem.hpp"
#include "gemkit/parallel.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace gemkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

const std::vector<double>& WindowSeries::metric(const std::string& name) const {
  if (name == "gem") return gem;
  if (name == "gem_dsr") return gem_dsr;
  if (name == "hellinger") return hellinger;
  if (name == "l2") return l2;
  if (name == "wasserstein") return wasserstein;
  throw InputError("unknown metric '" + name + "'");
}

WindowSeries window_metrics(const EpisodeMetrics& episode, const WeightedGraph& graph, double lambda,
                            int window_minutes, int jobs) {
  if (window_minutes <= 0) throw InputError("window length must be positive");
  if (episode.intervals.size() > 1 && episode.intervals[1].start_minute != window_minutes)
    throw InputError("episode intervals must match the metric window");
  const auto& snaps = episode.snapshots;
  const std::size_t windows = (snaps.size() + window_minutes - 1) / window_minutes;

  std::vector<double> rho(snaps.size());
  std::vector<EquilibriumMap<double>> maps(snaps.size());
  auto shared = std::make_shared<const WeightedGraph>(graph);
  parallel_for(snaps.size(), jobs, [&](std::size_t t) {
    const auto plan = compute_gem<double>(shared, snaps[t].supply, snaps[t].demand, lambda);
    rho[t] = plan.rho;
    maps[t] = equilibrium_map<double>(plan.mu_tilde, snaps[t].demand);
  });

  WindowSeries out;
  out.window_minutes = window_minutes;
  out.gem.assign(windows, kNaN);
  out.gem_dsr.assign(windows, kNaN);
  out.hellinger.assign(windows, kNaN);
  out.l2.assign(windows, kNaN);
  out.wasserstein.assign(windows, kNaN);
  out.answer_rate.assign(windows, std::nullopt);
  parallel_for(windows, jobs, [&](std::size_t w) {
    const std::size_t first = w * window_minutes, last = std::min(snaps.size(), first + window_minutes);
    std::vector<Eigen::VectorXd> demand, supply;
    std::vector<double> values, weights;
    for (std::size_t t = first; t < last; ++t) {
      demand.push_back(snaps[t].demand);
      supply.push_back(snaps[t].supply);
      values.push_back(rho[t]);
      weights.push_back(snaps[t].demand.sum());
    }
    try {
      out.gem[w] = weighted_window_mean<double>(values, weights);
      out.gem_dsr[w] = aggregate_maps<double>(std::span(maps).subspan(first, last - first)).dsr;
    } catch (const UndefinedAggregateError&) {
    }
    out.l2[w] = windowed_l2<double>(demand, supply);
    double dsum = 0, ssum = 0;
    for (std::size_t k = 0; k < demand.size(); ++k) {
      dsum += demand[k].sum();
      ssum += supply[k].sum();
    }
    if (dsum > 0 && ssum > 0) out.hellinger[w] = windowed_hellinger<double>(demand, supply);
    try {
      out.wasserstein[w] = windowed_wasserstein<double>(demand, supply, graph.costs());
    } catch (const UndefinedAggregateError&) {
    }
  });
  for (std::size_t w = 0; w < windows && w < episode.intervals.size(); ++w)
    out.answer_rate[w] = episode.intervals[w].answer_rate();
  return out;
}

FeatureMatrix build_features(std::span<const std::vector<double>> metric_by_day,
                             std::span<const std::vector<std::optional<double>>> answer_by_day, int horizon,
                             std::string metric_name, int intraday_lags, int daily_lags) {
  if (metric_by_day.size() != answer_by_day.size()) throw InputError("metric and answer-rate day counts differ");
  if (horizon < 1 || intraday_lags < 1 || daily_lags < 0) throw InputError("invalid lag or horizon");
  if (static_cast<int>(metric_by_day.size()) <= daily_lags)
    throw InputError("daily lags need more days of history than lags");
  FeatureMatrix f;
  f.metric = std::move(metric_name);
  f.horizon = horizon;
  const int cols = intraday_lags + daily_lags;
  std::vector<double> xs, ys;
  for (int d = daily_lags; d < static_cast<int>(metric_by_day.size()); ++d) {
    const auto& m = metric_by_day[d];
    const auto& ar = answer_by_day[d];
    if (m.size() != ar.size()) throw InputError("metric and answer-rate window counts differ");
    const int windows = static_cast<int>(m.size());
    for (int tau = intraday_lags; tau + horizon - 1 < windows; ++tau) {
      const int target = tau + horizon - 1;
      std::vector<double> row(cols);
      bool ok = true;
      for (int i = 0; i < intraday_lags; ++i) row[i] = m[tau - 1 - i];
      for (int i = 0; i < daily_lags; ++i) {
        const auto& prev = metric_by_day[d - 1 - i];
        row[intraday_lags + i] = tau - 1 < static_cast<int>(prev.size()) ? prev[tau - 1] : kNaN;
      }
      for (double v : row) ok = ok && std::isfinite(v);
      if (!ar[target] || !ok) {
        ++f.dropped_undefined;
        continue;
      }
      if (!(*ar[target] > 0)) {
        ++f.dropped_zero_answer;
        continue;
      }
      xs.insert(xs.end(), row.begin(), row.end());
      ys.push_back(std::log(*ar[target]));
      f.rows.emplace_back(d, target);
    }
  }
  const auto n = static_cast<Eigen::Index>(ys.size());
  f.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(xs.data(), n, cols);
  f.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  return f;
}

void keep_common_rows(std::span<FeatureMatrix> matrices) {
  if (matrices.empty()) return;
  std::set<std::pair<int, int>> common(matrices[0].rows.begin(), matrices[0].rows.end());
  for (const auto& m : matrices.subspan(1)) {
    std::set<std::pair<int, int>> here(m.rows.begin(), m.rows.end()), both;
    std::set_intersection(common.begin(), common.end(), here.begin(), here.end(), std::inserter(both, both.end()));
    common.swap(both);
  }
  for (auto& m : matrices) {
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < m.rows.size(); ++i)
      if (common.count(m.rows[i])) keep.push_back(static_cast<Eigen::Index>(i));
    if (keep.size() == m.rows.size()) continue;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(keep.size()), m.x.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(keep.size()));
    std::vector<std::pair<int, int>> rows;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = m.x.row(keep[i]);
      y(static_cast<Eigen::Index>(i)) = m.y(keep[i]);
      rows.push_back(m.rows[static_cast<std::size_t>(keep[i])]);
    }
    m.dropped_undefined += static_cast<int>(m.rows.size() - keep.size());
    m.x = std::move(x);
    m.y = std::move(y);
    m.rows = std::move(rows);
  }
}

PredictionResult fit_predict_ols(const FeatureMatrix& features, int first_test_day) {
  std::vector<Eigen::Index> train, test;
  for (std::size_t i = 0; i < features.rows.size(); ++i)
    (features.rows[i].first < first_test_day ? train : test).push_back(static_cast<Eigen::Index>(i));
  if (train.empty() || test.empty()) throw InputError("train/test split leaves an empty side");
  const Eigen::Index p = features.x.cols() + 1;
  auto design = [&](const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd d(static_cast<Eigen::Index>(idx.size()), p);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      d(static_cast<Eigen::Index>(i), 0) = 1.0;
      d.row(static_cast<Eigen::Index>(i)).tail(p - 1) = features.x.row(idx[i]);
    }
    return d;
  };
  auto target = [&](const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) v(static_cast<Eigen::Index>(i)) = features.y(idx[i]);
    return v;
  };
  const Eigen::MatrixXd xtr = design(train), xte = design(test);
  const Eigen::VectorXd ytr = target(train);

  PredictionResult r;
  r.train_rows = static_cast<int>(train.size());
  r.test_rows = static_cast<int>(test.size());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtr);
  if (qr.rank() == p) {
    r.coefficients = qr.solve(ytr);
  } else {
    r.ridge_fallback = true;
    const Eigen::MatrixXd gram = xtr.transpose() * xtr + kRidgePenalty * Eigen::MatrixXd::Identity(p, p);
    r.coefficients = gram.ldlt().solve(xtr.transpose() * ytr);
  }
  r.targets = target(test);
  r.predictions = xte * r.coefficients;
  r.rmse = std::sqrt((r.predictions - r.targets).squaredNorm() / r.test_rows);
  double ape = 0;
  int counted = 0;
  for (Eigen::Index i = 0; i < r.targets.size(); ++i) {
    if (r.targets(i) == 0.0) continue;
    ape += std::abs(r.predictions(i) - r.targets(i)) / std::abs(r.targets(i));
    ++counted;
  }
  r.mape = counted ? ape / counted : kNaN;
  return r;
}

void PanelDataset::check() const {
  if (days() < 2 || intervals() < 1) throw InputError("panel needs at least two days and one interval");
  if (arm.rows() != y.rows() || arm.cols() != y.cols()) throw InputError("arm labels must be days x intervals");
  if (((arm.array() != 1) && (arm.array() != -1)).any()) throw InputError("arm labels must be +1 or -1");
  for (const auto& x : covariates) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) throw InputError("covariates must be days x intervals");
    if (!x.allFinite()) throw InputError("covariates must be finite");
  }
  for (Eigen::Index v = 0; v < y.size(); ++v)
    if (std::isinf(y.data()[v])) throw InputError("outcomes must be finite or NaN (missing)");
}

Eigen::MatrixXi interleaved_arms(int days, int intervals) {
  Eigen::MatrixXi a(days, intervals);
  for (int m = 0; m < days; ++m)
    for (int k = 0; k < intervals; ++k) a(m, k) = (m + k) % 2 == 0 ? -1 : 1;
  return a;
}

namespace {

// Per-interval design column c for day m: 0 intercept, 1..p centered
// covariates, p+1 arm.
struct GeeLayout {
  int p = 0;
  Eigen::MatrixXd xbar;  // intervals x p
  std::vector<std::vector<int>> kept;
  std::vector<int> offset;
  int total = 0;

  double value(const PanelDataset& panel, int m, int k, int c) const {
    if (c == 0) return 1.0;
    if (c == p + 1) return panel.arm(m, k);
    return panel.covariates[c - 1](m, k) - xbar(k, c - 1);
  }
};

GeeLayout make_layout(const PanelDataset& panel) {
  GeeLayout L;
  L.p = static_cast<int>(panel.covariates.size());
  const int days = panel.days(), K = panel.intervals();
  L.xbar = Eigen::MatrixXd::Zero(K, L.p);
  L.kept.resize(K);
  L.offset.resize(K + 1, 0);
  for (int k = 0; k < K; ++k) {
    std::vector<int> obs;
    for (int m = 0; m < days; ++m)
      if (std::isfinite(panel.y(m, k))) obs.push_back(m);
    if (obs.empty()) throw InputError("interval " + std::to_string(k) + " has no observed outcome");
    for (int c = 0; c < L.p; ++c) {
      double s = 0;
      for (int m : obs) s += panel.covariates[c](m, k);
      L.xbar(k, c) = s / obs.size();
    }
    // Greedy Gram-Schmidt in the order intercept, arm, covariates.
    std::vector<int> order{0, L.p + 1};
    for (int c = 1; c <= L.p; ++c) order.push_back(c);
    std::vector<Eigen::VectorXd> basis;
    for (int c : order) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(obs.size()));
      for (std::size_t i = 0; i < obs.size(); ++i) v(static_cast<Eigen::Index>(i)) = L.value(panel, obs[i], k, c);
      const double scale = v.norm();
      for (const auto& b : basis) v -= b.dot(v) * b;
      if (scale > 0 && v.norm() > 1e-9 * scale) {
        basis.push_back(v.normalized());
        L.kept[k].push_back(c);
      } else if (c == 0 || c == L.p + 1) {
        throw InputError("both arms must be observed at interval " + std::to_string(k));
      }
    }
    std::sort(L.kept[k].begin(), L.kept[k].end());
    L.offset[k + 1] = L.offset[k] + static_cast<int>(L.kept[k].size());
  }
  L.total = L.offset[K];
  return L;
}

struct DayBlock {
  std::vector<int> obs;  // observed intervals
  Eigen::MatrixXd x;     // obs x total
  Eigen::VectorXd y;
};

std::vector<DayBlock> day_blocks(const PanelDataset& panel, const GeeLayout& L) {
  std::vector<DayBlock> blocks(panel.days());
  for (int m = 0; m < panel.days(); ++m) {
    auto& b = blocks[m];
    for (int k = 0; k < panel.intervals(); ++k)
      if (std::isfinite(panel.y(m, k))) b.obs.push_back(k);
    const auto n = static_cast<Eigen::Index>(b.obs.size());
    b.x = Eigen::MatrixXd::Zero(n, L.total);
    b.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int k = b.obs[i];
      b.y(i) = panel.y(m, k);
      for (std::size_t j = 0; j < L.kept[k].size(); ++j) b.x(i, L.offset[k] + static_cast<Eigen::Index>(j)) = L.value(panel, m, k, L.kept[k][j]);
    }
  }
  return blocks;
}

Eigen::MatrixXd sub(const Eigen::MatrixXd& v, const std::vector<int>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) s(i, j) = v(idx[i], idx[j]);
  return s;
}

Eigen::MatrixXd psd_floor(const Eigen::MatrixXd& a, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((a + a.transpose()) / 2);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

GeeFit fit_gee(const PanelDataset& panel, const GeeOptions& options) {
  panel.check();
  const GeeLayout L = make_layout(panel);
  const auto blocks = day_blocks(panel, L);
  const int days = panel.days(), K = panel.intervals();
  long n_obs = 0;
  for (const auto& b : blocks) n_obs += static_cast<long>(b.obs.size());
  if (n_obs <= L.total) throw InputError("panel has no residual degrees of freedom");

  GeeFit fit;
  fit.days = days;
  fit.intervals = K;
  fit.covariates = L.p;
  fit.kept_columns = L.kept;

  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(K, K);
  auto solve_beta = [&](const Eigen::MatrixXd& cov, Eigen::MatrixXd& bread) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(L.total, L.total);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(L.total);
    for (const auto& b : blocks) {
      if (b.obs.empty()) continue;
      const Eigen::LLT<Eigen::MatrixXd> llt(sub(cov, b.obs));
      const Eigen::MatrixXd wx = llt.solve(b.x);
      B.noalias() += b.x.transpose() * wx;
      rhs.noalias() += wx.transpose() * b.y;
    }
    bread = B.ldlt().solve(Eigen::MatrixXd::Identity(L.total, L.total));
    return Eigen::VectorXd(bread * rhs);
  };

  Eigen::MatrixXd bread;
  Eigen::VectorXd theta = solve_beta(V, bread);
  Eigen::MatrixXd sigma_eta = Eigen::MatrixXd::Zero(K, K);
  double sigma2 = 1.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    // Moment estimates from the current residuals.
    Eigen::MatrixXd R = Eigen::MatrixXd::Constant(days, K, kNaN);
    double ss = 0, cross = 0, pairs = 0;
    for (int m = 0; m < days; ++m) {
      const Eigen::VectorXd r = blocks[m].y - blocks[m].x * theta;
      for (std::size_t i = 0; i < blocks[m].obs.size(); ++i) R(m, blocks[m].obs[i]) = r(static_cast<Eigen::Index>(i));
      ss += r.squaredNorm();
      cross += r.sum() * r.sum() - r.squaredNorm();
      pairs += static_cast<double>(r.size()) * (r.size() - 1);
    }
    const double total_var = ss / static_cast<double>(n_obs - L.total);
    double tau2 = 0.0;
    if (options.covariance != WorkingCovariance::Independence && pairs > 0)
      tau2 = std::clamp(cross / pairs, 0.0, total_var);
    sigma2 = std::max(total_var - tau2, options.eigen_floor);
    switch (options.covariance) {
      case WorkingCovariance::Independence:
        sigma_eta.setZero();
        break;
      case WorkingCovariance::Exchangeable:
        sigma_eta.setConstant(tau2);
        break;
      case WorkingCovariance::Unstructured: {
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(K, K), count = Eigen::MatrixXd::Zero(K, K);
        for (int m = 0; m < days; ++m)
          for (int k = 0; k < K; ++k)
            for (int l = 0; l < K; ++l)
              if (std::isfinite(R(m, k)) && std::isfinite(R(m, l))) {
                S(k, l) += R(m, k) * R(m, l);
                count(k, l) += 1;
              }
        S = S.cwiseQuotient(count.cwiseMax(1.0)) * (static_cast<double>(n_obs) / (n_obs - L.total));
        sigma_eta = psd_floor(S - sigma2 * Eigen::MatrixXd::Identity(K, K), 0.0);
        break;
      }
    }
    V = sigma_eta + sigma2 * Eigen::MatrixXd::Identity(K, K);
    V = psd_floor(V, options.eigen_floor);
    const Eigen::VectorXd next = solve_beta(V, bread);
    const double change = (next - theta).cwiseAbs().maxCoeff();
    theta = next;
    fit.iterations = it;
    if (change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.sigma_eta = sigma_eta;
  fit.sigma2_eps = sigma2;
  fit.bread = bread;

  fit.beta0_beta1_beta2 = Eigen::MatrixXd::Constant(K, L.p + 2, kNaN);
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < L.p + 2; ++c) {
      const auto it = std::find(L.kept[k].begin(), L.kept[k].end(), c);
      if (it == L.kept[k].end())
        fit.unidentified.emplace_back(k, c);
      else
        fit.beta0_beta1_beta2(k, c) = theta(L.offset[k] + static_cast<int>(it - L.kept[k].begin()));
    }
  }

  // Day-clustered sandwich pieces on whitened residuals e = L^-1 r with
  // V_m = L L^T and H~ = A B^-1 A^T, A = L^-1 X_m (the symmetric form of H_mm).
  fit.meat_plain = Eigen::MatrixXd::Zero(L.total, L.total);
  fit.meat_kauermann_carroll = fit.meat_plain;
  fit.meat_mancl_derouen = fit.meat_plain;
  for (const auto& b : blocks) {
    if (b.obs.empty()) continue;
    const Eigen::LLT<Eigen::MatrixXd> llt(sub(V, b.obs));
    const Eigen::MatrixXd a = llt.matrixL().solve(b.x);
    const Eigen::VectorXd e = llt.matrixL().solve(Eigen::VectorXd(b.y - b.x * theta));
    const Eigen::MatrixXd h = a * bread * a.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((h + h.transpose()) / 2);
    const Eigen::VectorXd keep = (1.0 - es.eigenvalues().array()).matrix();
    const Eigen::VectorXd u = a.transpose() * e;
    fit.meat_plain.noalias() += u * u.transpose();
    if (keep.minCoeff() < 1e-10) {
      fit.correction_available = false;
      continue;
    }
    const Eigen::MatrixXd& q = es.eigenvectors();
    const Eigen::VectorXd qe = q.transpose() * e;
    const Eigen::VectorXd ukc = a.transpose() * (q * qe.cwiseQuotient(keep.cwiseSqrt()));
    const Eigen::VectorXd umd = a.transpose() * (q * qe.cwiseQuotient(keep));
    fit.meat_kauermann_carroll.noalias() += ukc * ukc.transpose();
    fit.meat_mancl_derouen.noalias() += umd * umd.transpose();
  }
  return fit;
}

AteResult test_ate(const GeeFit& fit, double dt0, SandwichCorrection correction) {
  if (fit.kept_columns.empty()) throw InputError("empty GEE fit");
  const int arm_col = fit.covariates + 1;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(fit.bread.rows());
  int offset = 0;
  double sum_b2 = 0, sum_base = 0;
  for (int k = 0; k < fit.intervals; ++k) {
    const auto& kept = fit.kept_columns[k];
    for (std::size_t j = 0; j < kept.size(); ++j)
      if (kept[j] == arm_col) c(offset + static_cast<int>(j)) = dt0;
    offset += static_cast<int>(kept.size());
    sum_b2 += fit.beta0_beta1_beta2(k, arm_col);
    sum_base += fit.beta0_beta1_beta2(k, 0) - fit.beta0_beta1_beta2(k, arm_col);
  }
  AteResult r;
  r.ate = sum_b2 * dt0;
  r.df = fit.days - 1;
  double var;
  if (correction == SandwichCorrection::None) {
    var = c.dot(fit.bread * fit.meat_plain * fit.bread * c);
    r.sandwich_corrected = false;
  } else if (fit.correction_available) {
    const auto& meat =
        correction == SandwichCorrection::ManclDeRouen ? fit.meat_mancl_derouen : fit.meat_kauermann_carroll;
    var = c.dot(fit.bread * meat * fit.bread * c);
  } else {
    var = c.dot(fit.bread * c);
    r.sandwich_corrected = false;
    r.warning = "too few days for the bias-corrected sandwich; model-based variance reported";
  }
  r.se = std::sqrt(std::max(var, 0.0));
  r.relative_improvement_pct = sum_base != 0.0 ? 2.0 * sum_b2 / sum_base * 100.0 : kNaN;
  if (!(r.se > 0)) {
    r.t = r.ate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.ate);
    r.p_two_sided = r.ate == 0.0 ? 1.0 : 0.0;
    r.p_one_sided = r.ate > 0 ? 0.0 : 1.0;
    if (r.warning.empty()) r.warning = "degenerate panel: zero standard error";
    return r;
  }
  r.t = r.ate / r.se;
  const boost::math::students_t dist(r.df);
  r.p_two_sided = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))), 0.0, 1.0);
  r.p_one_sided = std::clamp(boost::math::cdf(boost::math::complement(dist, r.t)), 0.0, 1.0);
  return r;
}

const char* to_string(PanelOutcome outcome) {
  switch (outcome) {
    case PanelOutcome::AnswerRate: return "answer_rate";
    case PanelOutcome::FinishRate: return "finish_rate";
    case PanelOutcome::Gmv: return "gmv";
    case PanelOutcome::Gem: return "gem";
  }
  return "?";
}

PanelOutcome panel_outcome_from_string(const std::string& name) {
  for (auto o : {PanelOutcome::AnswerRate, PanelOutcome::FinishRate, PanelOutcome::Gmv, PanelOutcome::Gem})
    if (name == to_string(o)) return o;
  throw InputError("unknown outcome '" + name + "'");
}

std::vector<PanelDataset> interleaved_design(const SimConfig& config, const PolicyParams& baseline,
                                             const PolicyParams& treatment,
                                             const std::vector<std::uint64_t>& day_seeds,
                                             const std::vector<PanelOutcome>& outcomes, int jobs) {
  if (day_seeds.size() < 2) throw InputError("an interleaved design needs at least two days");
  if (outcomes.empty()) throw InputError("no outcomes requested");
  const int days = static_cast<int>(day_seeds.size());
  const int K = static_cast<int>((config.horizon_minutes + config.switch_minutes - 1) / config.switch_minutes);
  const Eigen::MatrixXi arms = interleaved_arms(days, K);
  const bool need_gem = std::find(outcomes.begin(), outcomes.end(), PanelOutcome::Gem) != outcomes.end();

  std::vector<EpisodeMetrics> runs(days);
  parallel_for(runs.size(), jobs, [&](std::size_t m) {
    SimConfig c = config;
    c.seed = day_seeds[m];
    c.policies = {baseline, treatment};
    c.interval_minutes = c.switch_minutes;
    c.schedule.resize(K);
    for (int k = 0; k < K; ++k) c.schedule[k] = arms(static_cast<Eigen::Index>(m), k) > 0 ? 1 : 0;
    c.gem_trace = need_gem;
    c.record_trajectories = false;
    runs[m] = run_episode(c);
  });

  std::vector<PanelDataset> panels;
  for (auto outcome : outcomes) {
    PanelDataset p;
    p.outcome = to_string(outcome);
    p.y.resize(days, K);
    p.arm = arms;
    p.covariates = {Eigen::MatrixXd(days, K), Eigen::MatrixXd(days, K)};
    p.unbalanced = K % 2 == 1;
    for (int m = 0; m < days; ++m)
      for (int k = 0; k < K; ++k) {
        const auto& iv = runs[m].intervals[k];
        p.covariates[0](m, k) = iv.demand_total;
        p.covariates[1](m, k) = iv.supply_minutes;
        switch (outcome) {
          case PanelOutcome::AnswerRate: p.y(m, k) = iv.answer_rate().value_or(kNaN); break;
          case PanelOutcome::FinishRate: p.y(m, k) = iv.finish_rate().value_or(kNaN); break;
          case PanelOutcome::Gmv: p.y(m, k) = iv.gmv; break;
          case PanelOutcome::Gem: p.y(m, k) = iv.gem.value_or(kNaN); break;
        }
      }
    panels.push_back(std::move(p));
  }
  return panels;
}

}  // namespace gemkit
