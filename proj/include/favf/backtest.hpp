// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "favf/date.hpp"

namespace favf::backtest {

struct BacktestConfig {
  double entry_z = 1.5;
  double exit_z = 0.0;
  int window = 70;                  // z-score and covariance window
  std::optional<int> hedge_window;  // defaults to `window`
  double vol_target = 0.25;
  double max_leverage = 5.0;
  double initial_equity = 50000.0;
  double cost_bps = 5.0;              // per leg, on absolute notional change
  double sizing_annualization = 252;  // inside the spread-vol formula
  double metric_annualization = 365;  // for returns and Sharpe
  int min_hold_days = 1;              // exits need t - entry_day >= min_hold_days

  static BacktestConfig statistical() { return {}; }
  static BacktestConfig lstm() {
    BacktestConfig c;
    c.window = 30;
    return c;
  }
  int effective_hedge_window() const { return hedge_window.value_or(window); }
  void validate() const;
};

/// Rolling OLS slope of a on b (with intercept) over rows t-window+1..t.
/// Entries before the first full window are empty.
std::vector<std::optional<double>> rolling_hedge_ratio(std::span<const double> log_a, std::span<const double> log_b,
                                                       int window);

/// Trailing z-score with the window including t and an n-1 divisor. Empty
/// before the first full window and where the window std is zero.
std::vector<std::optional<double>> zscore(std::span<const double> spread, int window);

enum class Position { flat = 0, long_spread = 1, short_spread = -1 };

/// Entry/exit state machine. Missing z-scores produce no transition.
std::vector<Position> generate_signals(std::span<const std::optional<double>> z, const BacktestConfig& config);

/// sqrt(A) * sqrt(max(0, sa^2 + beta^2 sb^2 - 2 beta cov)).
double spread_vol_forecast(double sigma_a, double sigma_b, double beta, double cov_ab, double annualization = 252);

/// equity * min(target / spread_vol, max_leverage); spread_vol = 0 gives the cap.
double position_size(double target_vol, double spread_vol, double equity, double max_leverage);

struct EquityPoint {
  Date date{};
  double equity = 0.0;          // after today's P&L and costs
  double pnl = 0.0;             // mark-to-market on positions held overnight
  double cost = 0.0;            // transaction costs charged today
  double sizing_equity = 0.0;   // equity used to size today's target
  Position state = Position::flat;
  double beta = std::numeric_limits<double>::quiet_NaN();  // before the hedge window fills
  double z = std::numeric_limits<double>::quiet_NaN();     // where undefined
  double notional_a = 0.0;      // held after today's trades
  double notional_b = 0.0;
};

struct Fill {
  Date date{};
  std::string leg;  // "a" or "b"
  double notional = 0.0;  // signed change
  double price = 0.0;
  double cost = 0.0;
};

struct Metrics {
  double final_equity = 0.0;
  double annualized_return = 0.0;
  double sharpe = 0.0;
  std::size_t days = 0;    // daily return observations
  std::size_t trades = 0;  // entries
  bool bankrupt = false;
};

struct BacktestResult {
  std::vector<EquityPoint> curve;
  std::vector<Fill> ledger;
  Metrics metrics;
};

struct MarketData {
  std::vector<Date> dates;
  std::vector<double> price_a;
  std::vector<double> price_b;
  /// Next-day volatility forecasts made at each date (daily units). Values
  /// below zero are treated as zero. NaN suppresses signal transitions and
  /// is an error while a position is open.
  std::vector<double> vol_a;
  std::vector<double> vol_b;
  /// Optional covariance of daily log returns per date; when empty the
  /// trailing sample covariance over `window` returns is used.
  std::vector<double> cov_ab;
};

/// Daily close-to-close simulation. The position decided at the close of t
/// earns the simple returns from t to t+1.
BacktestResult simulate(const MarketData& data, const BacktestConfig& config);

/// Scripted positions instead of the z-score state machine, with a fixed
/// hedge ratio; used for hand-checkable scenarios.
BacktestResult simulate_scripted(const MarketData& data, std::span<const Position> states, double beta,
                                 const BacktestConfig& config);

Metrics compute_metrics(std::span<const double> equity, double initial_equity, double annualization);

/// Keys: "Portfolio Value", "Ann. Return", "Ann. Sharpe Ratio".
nlohmann::json metrics_json(const Metrics& m);

void write_equity_csv(std::ostream& out, const BacktestResult& r);
void write_ledger_csv(std::ostream& out, const BacktestResult& r);
/// Header: model,Portfolio Value,Ann. Return,Ann. Sharpe Ratio
void write_metrics_csv(std::ostream& out, std::span<const std::pair<std::string, Metrics>> rows);

}  // namespace favf::backtest
