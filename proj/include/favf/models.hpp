// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "favf/factors.hpp"
#include "favf/ingest.hpp"

namespace favf::models {

/// Regression rows keyed by forecast origin. Column 0 is the intercept.
struct RegressionDesign {
  std::vector<std::string> names;
  std::vector<std::size_t> origins;  // panel row of each forecast origin
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  std::size_t rows() const { return origins.size(); }
  std::size_t width() const { return names.size(); }
  /// Row position of `origin`, if present.
  std::optional<std::size_t> row_of(std::size_t origin) const;
};

struct OlsFit {
  Eigen::VectorXd coef;
  double in_sample_mse = 0.0;
};

inline constexpr double kMaxConditionNumber = 1e12;

/// Least squares via column-pivoted QR on unit-norm columns. Throws
/// "collinear design" naming offending columns when the condition estimate
/// exceeds kMaxConditionNumber.
OlsFit ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
               std::span<const std::string> names = {});
OlsFit ols_fit(const RegressionDesign& design);

/// Y_{t+h} = mean(RV_{t+1..t+h}) for every origin t; NaN where unrealized.
std::vector<double> horizon_target(std::span<const double> rv, int h);

/// Trailing h-observation mean at every row; NaN for the first h-1 rows.
std::vector<double> trailing_mean(std::span<const double> rv, int h);

/// AR(5): regressors (1, RV_t, ..., RV_{t-4} [, f_{1,t}, ..., f_{S,t}]).
/// Rows start at max(4, first_origin, factor window end) and stop where the
/// target is no longer realized.
RegressionDesign build_ar_design(const ingest::VolSeries& rv, const factors::FactorPath* factors, int S, int h,
                                 std::size_t first_origin = 0);

/// HAR: regressors (1, RV_t, RV7_t, RV30_t [, daily factors, weekly factors]).
/// `rv7` and `rv30` are aggregate_rv outputs of `rv` and are aligned by date.
RegressionDesign build_har_design(const ingest::VolSeries& rv, const ingest::VolSeries& rv7,
                                  const ingest::VolSeries& rv30, const factors::FactorPath* daily_factors, int S_d,
                                  const factors::FactorPath* weekly_factors, int S_w, int h,
                                  std::size_t first_origin = 0);

/// Normalized Beta lag polynomial, a_i / sum(a) for i = 1..k.
Eigen::VectorXd midas_weights(double theta1, double theta2, int k);

/// Default theta2 search grid.
std::vector<double> default_theta2_grid();

struct MidasSpec {
  int k_lags = 30;
  double theta1 = 1.0;
  std::vector<double> theta2_grid = default_theta2_grid();
  /// Factor polynomial b(L); lag depth follows k_lags.
  std::vector<double> factor_theta2_grid = default_theta2_grid();

  void validate() const;
};

/// Weighted lag sum sum_i w_i x_{t-i+1}; lag 1 is the origin itself.
double weighted_lags(std::span<const double> x, std::size_t t, const Eigen::VectorXd& weights);

struct MidasForecast {
  double prediction = 0.0;
  double theta2 = 0.0;
  double factor_theta2 = 0.0;
  Eigen::VectorXd coef;
  double in_sample_mse = 0.0;
};

/// Grid-searches theta2 (and the shared factor theta2 when S > 0) by
/// in-sample MSE over origins first_origin..origin-h, then forecasts at
/// `origin`.
MidasForecast midas_fit_forecast(const ingest::VolSeries& rv, const factors::FactorPath* factors, int S,
                                 const MidasSpec& spec, int h, std::size_t origin, std::size_t first_origin = 0);

struct ForecastRecord {
  Date origin{};
  double actual = 0.0;
  double predicted = 0.0;
};

struct ForecastSeries {
  std::string model;
  std::string asset;
  int horizon = 1;
  std::vector<ForecastRecord> records;

  std::size_t size() const { return records.size(); }
  std::vector<double> actuals() const;
  std::vector<double> predictions() const;
};

enum class ModelKind { rw, ar, har, midas, lstm };

ModelKind parse_model(const std::string& name);
std::string model_id(ModelKind kind, bool augmented, int midas_k = 30, bool pooled = false);

struct FactorConfig {
  bool augment = false;
  std::size_t window = 60;
  factors::SelectionPolicy policy = factors::SelectionPolicy::dominant();
  /// When positive, overrides the policy.
  int fixed_count = 0;
};

struct RunSpec {
  ModelKind model = ModelKind::ar;
  int horizon = 1;
  FactorConfig factors;
  MidasSpec midas;
  /// First forecast origin (panel row).
  std::size_t start = 0;
  /// Earliest origin admitted into any design (common burn-in).
  std::size_t first_origin = 0;
  std::size_t min_in_sample = 50;
};

/// Row at which every window used by the given configuration is full.
std::size_t burn_in_row(std::size_t factor_window, int max_midas_k, bool any_augmented_midas);

/// Number of factors used by an augmented run, fixed from information up to `start`.
int factor_count(const factors::FactorPath& path, const FactorConfig& config, std::size_t start);

/// Expanding-window forecasts: at each origin t >= start, refit on all design
/// rows with origin <= t - h and predict Y_{t+h}. `path` may carry
/// precomputed daily factors for the panel.
ForecastSeries expanding_window_run(const ingest::VolPanel& panel, std::size_t asset, const RunSpec& spec,
                                    const factors::FactorPath* path = nullptr);

/// Pooled AR/HAR: slopes shared across assets, one intercept per asset.
std::vector<ForecastSeries> expanding_window_run_pooled(const ingest::VolPanel& panel, const RunSpec& spec,
                                                        const factors::FactorPath* path = nullptr);

void write_forecasts(std::ostream& out, std::span<const ForecastSeries> series);
std::vector<ForecastSeries> read_forecasts(std::istream& in, const std::string& source_name);

}  // namespace favf::models
