// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace favf::coint {

enum class Trend { none, constant };

/// Left-tail (ADF, Engle-Granger) or right-tail (Johansen) critical values.
struct CriticalValues {
  double one = 0.0;
  double five = 0.0;
  double ten = 0.0;
};

/// Simulated null quantiles on a fixed probability grid, tabulated by
/// sample size. Lookups interpolate linearly in the sample size and clamp
/// outside the tabulated range.
class QuantileTable {
 public:
  QuantileTable(std::span<const double> probabilities, std::span<const std::size_t> sizes,
                std::span<const double> quantiles);

  /// Null quantiles at sample size T, one per probability.
  std::vector<double> at(std::size_t T) const;
  double quantile(std::size_t T, double probability) const;
  /// P(stat <= x) by linear interpolation on the grid, clamped to its ends.
  double cdf(std::size_t T, double x) const;
  std::span<const double> probabilities() const { return probs_; }

 private:
  std::span<const double> probs_;
  std::span<const std::size_t> sizes_;
  std::span<const double> quantiles_;  // sizes x probabilities, row-major
};

const QuantileTable& adf_table(Trend trend);
const QuantileTable& engle_granger_table();
/// Trace statistic null for `dimension` = p - r common stochastic trends
/// (restricted constant, one lagged difference), 1 <= dimension <= 12.
const QuantileTable& johansen_table(int dimension);

/// Probability grid shared by every table.
std::span<const double> table_probabilities();

/// floor(12 (T/100)^(1/4)).
int default_max_lag(std::size_t T);

/// Dickey-Fuller t-ratio on y_{t-1} with exactly `lag` lagged differences,
/// using every available observation.
double df_statistic(std::span<const double> y, int lag, Trend trend);

struct AdfResult {
  double statistic = 0.0;
  int lag = 0;
  std::size_t nobs = 0;  // regression rows
  double gamma = 0.0;    // coefficient on y_{t-1}
  CriticalValues critical;
  /// Interpolated from the simulated quantile grid; clamped to [0.01, 0.99].
  double p_value = 1.0;
  bool reject_5 = false;
};

/// ADF test with lag order picked by AIC over 0..max_lag on a common sample,
/// then refitted on all available rows. Requires length >= 30.
AdfResult adf_test(std::span<const double> y, std::optional<int> max_lag = std::nullopt,
                   Trend trend = Trend::constant);

struct EgDirection {
  std::string dependent;
  std::string regressor;
  double intercept = 0.0;
  double beta = 0.0;
  AdfResult adf;  // critical values and p-value from the residual-based table
};

struct EngleGrangerReport {
  EgDirection x_on_y;
  EgDirection y_on_x;
  /// Decision of the x-on-y ordering.
  bool reject_5 = false;
};

/// Regresses x on y with an intercept (and the reverse) and runs a no-constant
/// ADF on the residuals. Requires equal lengths >= 60.
EngleGrangerReport engle_granger(std::span<const double> x, std::span<const double> y, std::string x_name = "x",
                                 std::string y_name = "y", std::optional<int> max_lag = std::nullopt);

struct JohansenResult {
  std::vector<std::string> assets;
  std::size_t nobs = 0;
  int lag = 1;
  std::vector<double> eigenvalues;  // p values, descending
  std::vector<double> trace;        // trace[r] tests rank <= r, r = 0..p-1
  std::vector<CriticalValues> critical;
  std::vector<double> p_values;
  int rank = 0;
  /// (p + 1) x p: columns are cointegrating vectors, last row the restricted
  /// constant. Normalized so v' S11 v = 1 and the largest entry is positive.
  Eigen::MatrixXd vectors;
};

/// Trace test in a VECM with a restricted constant and `lag` lagged
/// differences. Requires T >= 10 p and p <= 12.
JohansenResult johansen_trace(const Eigen::MatrixXd& log_prices, int lag = 1, std::vector<std::string> assets = {});

/// Trace statistics only (no table lookups); used to simulate the tables.
std::vector<double> johansen_statistics(const Eigen::MatrixXd& log_prices, int lag);

nlohmann::json to_json(const AdfResult& r);
nlohmann::json to_json(const EngleGrangerReport& r);
nlohmann::json to_json(const JohansenResult& r);

/// Rows: one per cointegrating vector up to the selected rank (at least one),
/// columns: the asset names plus "const".
void write_cev_table(std::ostream& out, const JohansenResult& r);

}  // namespace favf::coint
