#pragma once

#include "gemkit/graph.hpp"
#include "gemkit/simulator.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gemkit {

// ---------------------------------------------------------------------------
// Answer-rate prediction

/// Per-window (default 10 minutes) metric values of one simulated day. NaN
/// marks a window where the metric is undefined (e.g. no demand).
struct WindowSeries {
  int window_minutes = 10;
  std::vector<double> gem;      // demand-weighted mean of per-minute rho
  std::vector<double> gem_dsr;  // demand-weighted DSr over the window's maps
  std::vector<double> hellinger;
  std::vector<double> l2;
  std::vector<double> wasserstein;
  std::vector<std::optional<double>> answer_rate;

  const std::vector<double>& metric(const std::string& name) const;
};

/// The GEM entry of the prediction study is the ratio map aggregate: rho alone
/// counts idle surplus as heavily as unmet demand, DSr does not.
inline const std::vector<std::string> kPredictionMetrics{"gem_dsr", "hellinger", "l2", "wasserstein"};

/// Wasserstein is the demand-weighted mean of per-minute balanced distances,
/// L2 and Hellinger act on the stacked window.
WindowSeries window_metrics(const EpisodeMetrics& episode, const WeightedGraph& graph, double lambda,
                            int window_minutes = 10, int jobs = 1);

/// Rows are prediction instants tau (window boundaries) of day d. Columns:
/// metric at windows tau-1 .. tau-intraday_lags of day d, then window tau-1 of
/// days d-1 .. d-daily_lags. Target: log answer rate of window tau + j - 1.
/// The intercept is added by the fit, not stored here.
struct FeatureMatrix {
  std::string metric;
  int horizon = 1;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::pair<int, int>> rows;  // (day, target window)
  int dropped_zero_answer = 0;            // log undefined
  int dropped_undefined = 0;              // missing answer rate or NaN feature
};

FeatureMatrix build_features(std::span<const std::vector<double>> metric_by_day,
                             std::span<const std::vector<std::optional<double>>> answer_by_day, int horizon,
                             std::string metric_name = "", int intraday_lags = 10, int daily_lags = 5);

/// Restricts every matrix to the (day, window) rows present in all of them so
/// the metrics are compared on identical targets.
void keep_common_rows(std::span<FeatureMatrix> matrices);

struct PredictionResult {
  double rmse = 0.0;
  double mape = 0.0;   // skips targets equal to 0
  Eigen::VectorXd coefficients;  // intercept first
  Eigen::VectorXd predictions;
  Eigen::VectorXd targets;
  int train_rows = 0;
  int test_rows = 0;
  bool ridge_fallback = false;
};

/// OLS with intercept on rows whose day < first_test_day; scores the rest.
/// Rank-deficient designs fall back to ridge with penalty kRidgePenalty.
inline constexpr double kRidgePenalty = 1e-8;
PredictionResult fit_predict_ols(const FeatureMatrix& features, int first_test_day);

// ---------------------------------------------------------------------------
// GEE policy evaluation

/// y_m(t_k) per day m (rows) and interval k (columns). NaN outcome cells are
/// treated as missing.
struct PanelDataset {
  std::string outcome = "outcome";
  Eigen::MatrixXd y;
  std::vector<Eigen::MatrixXd> covariates;  // each days x intervals
  Eigen::MatrixXi arm;                      // +1 treatment, -1 baseline
  bool unbalanced = false;                  // odd interval count

  int days() const { return static_cast<int>(y.rows()); }
  int intervals() const { return static_cast<int>(y.cols()); }
  void check() const;
};

/// a_m(t_k) = +-1 alternating per interval; day 0 starts with baseline, and the
/// starting arm flips every day.
Eigen::MatrixXi interleaved_arms(int days, int intervals);

enum class WorkingCovariance {
  Independence,  // Sigma_eta = 0: interval-wise OLS
  Exchangeable,  // Sigma_eta = tau^2 11^T (random day intercept)
  Unstructured,  // Sigma_eta free, projected onto the PSD cone
};

struct GeeOptions {
  WorkingCovariance covariance = WorkingCovariance::Unstructured;
  double tolerance = 1e-8;
  int max_iterations = 100;
  double eigen_floor = 1e-10;
};

/// Stacked coefficients per interval k: (beta0, beta1 components, beta2).
/// Unidentified components (e.g. a covariate constant across days at t_k)
/// are NaN and listed in `unidentified`.
struct GeeFit {
  int days = 0;
  int intervals = 0;
  int covariates = 0;
  Eigen::MatrixXd beta0_beta1_beta2;  // intervals x (2 + covariates)
  std::vector<std::pair<int, int>> unidentified;  // (interval, coefficient column)
  Eigen::MatrixXd sigma_eta;
  double sigma2_eps = 0.0;
  int iterations = 0;
  bool converged = false;

  // Internal state kept for the sandwich: identified columns and their layout.
  std::vector<std::vector<int>> kept_columns;  // per interval
  Eigen::MatrixXd bread;  // (sum X^T V^-1 X)^-1
  Eigen::MatrixXd meat_plain;
  Eigen::MatrixXd meat_kauermann_carroll;
  Eigen::MatrixXd meat_mancl_derouen;
  bool correction_available = true;

  Eigen::VectorXd beta2() const { return beta0_beta1_beta2.col(beta0_beta1_beta2.cols() - 1); }
};

GeeFit fit_gee(const PanelDataset& panel, const GeeOptions& options = {});

struct AteResult {
  double ate = 0.0;
  double se = 0.0;
  double t = 0.0;
  int df = 0;
  double p_two_sided = 1.0;
  double p_one_sided = 1.0;  // alternative: ate > 0
  double relative_improvement_pct = 0.0;
  bool sandwich_corrected = true;
  std::string warning;
};

/// Residual adjustment inside the day-clustered sandwich, with leverage
/// H_mm = X_m B^-1 X_m^T V_m^-1 and B = sum_m X_m^T V_m^-1 X_m:
///   ManclDeRouen      r_m -> (I - H_mm)^-1 r_m
///   KauermannCarroll  r_m -> (I - H_mm)^-1/2 r_m (symmetric root)
/// Under the working model E[r r^T] = (I - H) V, so the square root is the
/// unbiased one; the full inverse overstates the variance by about 1/(1 - h)
/// and is conservative when each interval carries few days per coefficient.
enum class SandwichCorrection { None, KauermannCarroll, ManclDeRouen };

/// ATE = sum_k beta2(t_k) dt0 with a day-clustered sandwich variance. The t
/// reference has M_D - 1 degrees of freedom (one tested contrast).
/// Relative improvement = 2 sum beta2 / sum (beta0 - beta2) * 100.
AteResult test_ate(const GeeFit& fit, double dt0 = 1.0,
                   SandwichCorrection correction = SandwichCorrection::ManclDeRouen);

enum class PanelOutcome { AnswerRate, FinishRate, Gmv, Gem };
const char* to_string(PanelOutcome outcome);
PanelOutcome panel_outcome_from_string(const std::string& name);

/// Runs one episode per day seed, switching between `baseline` and `treatment`
/// every `switch_minutes`, and collects one panel per requested outcome.
/// Covariates: total demand and total supply time per interval.
std::vector<PanelDataset> interleaved_design(const SimConfig& config, const PolicyParams& baseline,
                                             const PolicyParams& treatment,
                                             const std::vector<std::uint64_t>& day_seeds,
                                             const std::vector<PanelOutcome>& outcomes, int jobs = 1);

}  // namespace gemkit
