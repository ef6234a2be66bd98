// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "favf/models.hpp"

namespace favf::eval {

/// Predictions below this are lifted to it inside QLIKE and UoW.
inline constexpr double kPredictionFloor = 1e-8;

/// Target Sharpe ratio and risk aversion of the volatility-timing investor.
inline constexpr double kTargetSharpe = 0.4;
inline constexpr double kRiskAversion = 2.0;

/// Out-of-sample R^2: 1 - sum (a - p)^2 / sum (a - mean(a))^2.
double r2(std::span<const double> actuals, std::span<const double> predictions);

/// The squared-ratio variant 1 - sum ((a - p) / (a - mean(a)))^2, kept for
/// comparison only; it is undefined when any actual equals the mean.
double r2_ratio_form(std::span<const double> actuals, std::span<const double> predictions);

double mse(std::span<const double> actuals, std::span<const double> predictions);

/// Mean of x - ln x - 1 with x = actual / max(prediction, floor).
double qlike(std::span<const double> actuals, std::span<const double> predictions);

/// Mean of (SR^2/gamma) x - (SR^2/(2 gamma)) x^2 with x = actual / prediction.
double uow(std::span<const double> actuals, std::span<const double> predictions, double sharpe = kTargetSharpe,
           double gamma = kRiskAversion);

/// Number of predictions lifted by the floor.
std::size_t count_floored(std::span<const double> predictions);

enum class LossKind { mse, utility };

/// Per-date loss: squared error, or the negated utility term.
std::vector<double> losses(std::span<const double> actuals, std::span<const double> predictions, LossKind kind);

struct DmResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double mean_differential = 0.0;
  std::size_t n = 0;
};

/// Diebold-Mariano test. d_t = benchmark_loss_t - candidate_loss_t, so a
/// positive statistic favours the candidate. The long-run variance uses
/// Bartlett weights with bandwidth h - 1.
DmResult dm_test(std::span<const double> benchmark_losses, std::span<const double> candidate_losses, int horizon);

/// Two-sided p-value for a standard normal statistic.
double normal_two_sided_p(double z);

struct MetricReport {
  std::string asset;
  std::string model;
  int horizon = 1;
  std::size_t n = 0;
  double r2 = 0.0;
  double mse = 0.0;
  double qlike = 0.0;
  std::optional<double> uow;  // horizon 7 only
  std::optional<double> dm;   // vs benchmark, when one applies
  std::string benchmark;
  std::size_t floored = 0;
};

MetricReport evaluate_series(const models::ForecastSeries& s);

struct EvaluateOptions {
  LossKind dm_loss = LossKind::mse;
  /// "ind": augmented models against their unaugmented counterpart and
  /// unaugmented models against the random walk. "rw": everything against
  /// the random walk.
  std::string benchmark = "ind";
};

/// One row per series, with DM statistics against the matching benchmark
/// (aligned on common origins).
std::vector<MetricReport> metric_table(std::span<const models::ForecastSeries> series, const EvaluateOptions& opts = {});

/// Header: asset,model,R2,MSE,QLIKE
void write_metric_table(std::ostream& out, std::span<const MetricReport> rows);

/// Header: asset,model,UoW,DM,benchmark (UoW empty off the 7-day horizon,
/// DM empty without a benchmark).
void write_uow_dm_table(std::ostream& out, std::span<const MetricReport> rows);

}  // namespace favf::eval
