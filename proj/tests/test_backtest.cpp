// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "favf/backtest.hpp"
#include "favf/error.hpp"
#include "favf/rng.hpp"
#include "favf/synth.hpp"

using namespace favf;
using namespace favf::backtest;

namespace {

MarketData pair_market(std::uint64_t seed, std::size_t T, double vol = 0.02) {
  synth::SynthSpec s;
  s.seed = seed;
  s.T = T;
  s.mean_reversion = 0.05;
  const auto pair = synth::gen_cointegrated_pair(s);
  MarketData m;
  m.dates = pair.dates;
  for (std::size_t t = 0; t < T; ++t) {
    m.price_a.push_back(std::exp(pair.log_a[t]));
    m.price_b.push_back(std::exp(pair.log_b[t]));
    m.vol_a.push_back(vol);
    m.vol_b.push_back(vol);
  }
  return m;
}

std::vector<std::optional<double>> zs(std::initializer_list<double> v) {
  std::vector<std::optional<double>> out;
  for (double x : v) {
    if (std::isnan(x)) out.emplace_back();
    else out.emplace_back(x);
  }
  return out;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(HedgeRatio, MatchesWindowOls) {
  Rng rng(1);
  std::vector<double> a(50), b(50);
  for (std::size_t t = 0; t < 50; ++t) {
    b[t] = rng.normal();
    a[t] = 0.5 + 1.7 * b[t] + 0.1 * rng.normal();
  }
  const auto beta = rolling_hedge_ratio(a, b, 20);
  for (std::size_t t = 0; t < 19; ++t) EXPECT_FALSE(beta[t].has_value());
  for (std::size_t t = 19; t < 50; ++t) {
    Eigen::MatrixXd X(20, 2);
    Eigen::VectorXd y(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = b[t - 19 + static_cast<std::size_t>(i)];
      y(i) = a[t - 19 + static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd coef = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    EXPECT_NEAR(*beta[t], coef(1), 1e-12);
  }
  const std::vector<double> flat(30, 1.0);
  EXPECT_THROW(rolling_hedge_ratio(a, flat, 20), Error);
}

TEST(ZScore, TrailingWindowWithSampleStd) {
  const std::vector<double> s{1, 2, 3, 4, 10, 4, 4, 4, 4};
  const auto z = zscore(s, 4);
  EXPECT_FALSE(z[2].has_value());
  // Window {1,2,3,4}: mean 2.5, sd sqrt(5/3).
  EXPECT_NEAR(*z[3], 1.5 / std::sqrt(5.0 / 3.0), 1e-14);
  EXPECT_FALSE(z[8].has_value());  // constant window
}

TEST(Signals, EntryAndExit) {
  BacktestConfig c;
  const auto z = zs({0.0, -1.6, -1.0, 0.1, 1.6, 2.0, -0.1, NAN, 0.0});
  const auto s = generate_signals(z, c);
  const std::vector<Position> expect{Position::flat,         Position::long_spread, Position::long_spread,
                                     Position::flat,         Position::short_spread, Position::short_spread,
                                     Position::flat,         Position::flat,         Position::flat};
  EXPECT_EQ(s, expect);
}

TEST(Signals, NoReentryOnExitDayAndMinimumHold) {
  BacktestConfig c;
  c.exit_z = 0.5;
  // Exit at t=2 (z >= -0.5); z at t=2 is also beyond the short entry but must not re-enter.
  auto s = generate_signals(zs({-2.0, -1.0, 1.8, 1.8}), c);
  EXPECT_EQ(s[1], Position::long_spread);
  EXPECT_EQ(s[2], Position::flat);
  EXPECT_EQ(s[3], Position::short_spread);
  // The day after entry can exit with the default hold of one day, not the entry day itself.
  c.exit_z = 0.0;
  s = generate_signals(zs({-1.6, 0.5, 0.0}), c);
  EXPECT_EQ(s[0], Position::long_spread);
  EXPECT_EQ(s[1], Position::flat);
  c.min_hold_days = 2;
  s = generate_signals(zs({-1.6, 0.5, 0.5}), c);
  EXPECT_EQ(s[1], Position::long_spread);
  EXPECT_EQ(s[2], Position::flat);
}

TEST(Sizing, SpreadVolAndCap) {
  const double sv = spread_vol_forecast(0.01, 0.02, 0.5, 0.0001, 252);
  EXPECT_NEAR(sv, std::sqrt(252.0) * std::sqrt(1e-4 + 0.25 * 4e-4 - 2 * 0.5 * 1e-4), 1e-15);
  EXPECT_DOUBLE_EQ(spread_vol_forecast(0.01, 0.01, 1.0, 0.0001), 0.0);
  EXPECT_DOUBLE_EQ(position_size(0.25, 0.5, 1000.0, 5.0), 500.0);
  EXPECT_DOUBLE_EQ(position_size(0.25, 0.01, 1000.0, 5.0), 5000.0);
  EXPECT_DOUBLE_EQ(position_size(0.25, 0.0, 1000.0, 5.0), 5000.0);
  EXPECT_THROW(position_size(0.25, 0.1, -1.0, 5.0), Error);
}

TEST(Metrics, HandValues) {
  const std::vector<double> eq{100.0, 110.0, 99.0, 121.0};
  const auto m = compute_metrics(eq, 100.0, 365.0);
  EXPECT_EQ(m.days, 3u);
  EXPECT_DOUBLE_EQ(m.final_equity, 121.0);
  EXPECT_NEAR(m.annualized_return, std::pow(1.21, 365.0 / 3.0) - 1.0, 1e-9 * std::pow(1.21, 365.0 / 3.0));
  const double r[3] = {0.1, -0.1, 121.0 / 99.0 - 1.0};
  const double mean = (r[0] + r[1] + r[2]) / 3.0;
  double ss = 0.0;
  for (double x : r) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(m.sharpe, mean / std::sqrt(ss / 2.0) * std::sqrt(365.0), 1e-12);
  EXPECT_DOUBLE_EQ(compute_metrics(std::vector<double>{100.0, -5.0}, 100.0, 365.0).annualized_return, -1.0);
  EXPECT_DOUBLE_EQ(compute_metrics(std::vector<double>{100.0, 100.0, 100.0}, 100.0, 365.0).sharpe, 0.0);
}

TEST(Simulate, AccountingIdentityAndCap) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = pair_market(seed, 300, seed % 3 == 0 ? 0.001 : 0.02);
    BacktestConfig c;
    c.window = 30;
    const auto r = simulate(m, c);
    ASSERT_EQ(r.curve.size(), m.dates.size());
    double prev = c.initial_equity, cost_sum = 0.0;
    for (const auto& pt : r.curve) {
      EXPECT_NEAR(pt.equity, prev + pt.pnl - pt.cost, 1e-9);
      prev = pt.equity;
      cost_sum += pt.cost;
      if (pt.state != Position::flat) {
        EXPECT_LE(std::abs(pt.notional_a) + std::abs(pt.notional_b), c.max_leverage * pt.sizing_equity * (1 + 1e-12));
      } else {
        EXPECT_EQ(pt.notional_a, 0.0);
      }
    }
    double ledger_cost = 0.0;
    for (const auto& f : r.ledger) ledger_cost += f.cost;
    EXPECT_NEAR(ledger_cost, cost_sum, 1e-9);
  }
}

TEST(Simulate, NoTradesBeforeWindowsFill) {
  const auto m = pair_market(4, 200);
  BacktestConfig c;
  c.window = 40;
  c.hedge_window = 60;
  c.entry_z = 0.01;
  const auto r = simulate(m, c);
  for (std::size_t t = 0; t < 59; ++t) EXPECT_EQ(r.curve[t].state, Position::flat);
  ASSERT_FALSE(r.ledger.empty());
  EXPECT_GE(r.ledger.front().date, m.dates[59]);
}

TEST(Simulate, InvariantToPriceScaling) {
  auto m = pair_market(6, 250);
  BacktestConfig c;
  c.window = 30;
  const auto base = simulate(m, c);
  for (auto& p : m.price_a) p *= 2.0;
  for (auto& p : m.price_b) p *= 3.0;
  const auto scaled = simulate(m, c);
  for (std::size_t t = 0; t < base.curve.size(); ++t) {
    EXPECT_EQ(base.curve[t].state, scaled.curve[t].state);
    EXPECT_NEAR(base.curve[t].equity, scaled.curve[t].equity, 1e-6);
  }
}

TEST(Simulate, FlatRunKeepsInitialEquity) {
  const auto m = pair_market(7, 150);
  BacktestConfig c;
  c.entry_z = 1e12;
  const auto r = simulate(m, c);
  EXPECT_EQ(r.metrics.final_equity, 50000.0);
  EXPECT_EQ(r.metrics.trades, 0u);
  EXPECT_TRUE(r.ledger.empty());
}

TEST(Simulate, MissingForecastWhileHeldIsError) {
  auto m = pair_market(8, 100);
  const std::vector<Position> states(100, Position::long_spread);
  m.cov_ab.assign(100, 0.0);
  m.vol_a[50] = std::nan("");
  BacktestConfig c;
  EXPECT_THROW(simulate_scripted(m, states, 1.0, c), Error);
}

TEST(Simulate, BankruptcyHalts) {
  MarketData m;
  m.dates = synth::calendar_dates(parse_date("2020-01-01"), 4);
  m.price_a = {100.0, 100.0, 60.0, 60.0};
  m.price_b = {100.0, 100.0, 140.0, 140.0};
  m.vol_a.assign(4, 1e-6);
  m.vol_b.assign(4, 1e-6);
  m.cov_ab.assign(4, 0.0);
  const std::vector<Position> states(4, Position::long_spread);
  BacktestConfig c;
  const auto r = simulate_scripted(m, states, 1.0, c);
  EXPECT_TRUE(r.metrics.bankrupt);
  EXPECT_EQ(r.curve.size(), 3u);
  EXPECT_LE(r.curve.back().equity, 0.0);
  EXPECT_DOUBLE_EQ(r.metrics.annualized_return, -1.0);
}

TEST(Output, Headers) {
  const auto m = pair_market(9, 120);
  BacktestConfig c;
  c.window = 30;
  const auto r = simulate(m, c);
  std::ostringstream eq, led, met;
  write_equity_csv(eq, r);
  write_ledger_csv(led, r);
  const std::vector<std::pair<std::string, Metrics>> rows{{"ar", r.metrics}};
  write_metrics_csv(met, rows);
  EXPECT_EQ(first_line(eq.str()), "date,equity,pnl,cost,state,beta,z,notional_a,notional_b");
  EXPECT_EQ(first_line(led.str()), "date,leg,notional,price,cost");
  EXPECT_EQ(first_line(met.str()), "model,Portfolio Value,Ann. Return,Ann. Sharpe Ratio");
  const auto j = metrics_json(r.metrics);
  EXPECT_EQ(j.size(), 3u);
  EXPECT_TRUE(j.contains("Ann. Sharpe Ratio"));
}

TEST(Config, Validation) {
  BacktestConfig c;
  c.validate();
  EXPECT_EQ(BacktestConfig::lstm().window, 30);
  c.exit_z = 2.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.max_leverage = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
