// SPDX-License-Identifier: Apache-2.0
#include "favf/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "favf/csv.hpp"
#include "favf/error.hpp"

namespace favf::backtest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// OLS slope of a on b over rows [lo, hi).
double window_slope(std::span<const double> a, std::span<const double> b, std::size_t lo, std::size_t hi) {
  const double n = static_cast<double>(hi - lo);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, sbb = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(sbb > 1e-14 * std::max(1.0, mb * mb) * n)) throw Error("degenerate regression at row " + std::to_string(hi - 1));
  return sab / sbb;
}

// Mean and unbiased std of v[lo..hi).
std::pair<double, double> mean_sd(std::span<const double> v, std::size_t lo, std::size_t hi) {
  const double n = static_cast<double>(hi - lo);
  double m = 0.0;
  for (std::size_t i = lo; i < hi; ++i) m += v[i];
  m /= n;
  double ss = 0.0;
  for (std::size_t i = lo; i < hi; ++i) ss += (v[i] - m) * (v[i] - m);
  return {m, std::sqrt(ss / (n - 1.0))};
}

class SignalMachine {
 public:
  explicit SignalMachine(const BacktestConfig& c) : config_(c) {}

  Position step(std::size_t t, std::optional<double> z) {
    if (!z) return state_;
    const double v = *z;
    if (state_ != Position::flat) {
      const bool held = static_cast<long>(t) - static_cast<long>(entry_day_) >= config_.min_hold_days;
      if (held && exit_condition(v)) {
        state_ = Position::flat;
        last_exit_ = t;
      }
      return state_;
    }
    if (last_exit_ == t) return state_;
    if (v < -config_.entry_z) {
      state_ = Position::long_spread;
      entry_day_ = t;
    } else if (v > config_.entry_z) {
      state_ = Position::short_spread;
      entry_day_ = t;
    }
    return state_;
  }

 private:
  // Long exits once Z has come back up to -exit_z, short once down to +exit_z.
  bool exit_condition(double v) const {
    return state_ == Position::long_spread ? v >= -config_.exit_z : v <= config_.exit_z;
  }

  const BacktestConfig& config_;
  Position state_ = Position::flat;
  std::size_t entry_day_ = 0;
  std::size_t last_exit_ = std::numeric_limits<std::size_t>::max();
};

void check_market(const MarketData& d) {
  const std::size_t T = d.dates.size();
  if (T < 2) throw Error("backtest needs at least two dates");
  if (d.price_a.size() != T || d.price_b.size() != T || d.vol_a.size() != T || d.vol_b.size() != T ||
      (!d.cov_ab.empty() && d.cov_ab.size() != T)) {
    throw Error("backtest inputs are not date-aligned");
  }
  for (std::size_t t = 0; t < T; ++t) {
    if (!(d.price_a[t] > 0.0) || !(d.price_b[t] > 0.0)) {
      throw Error("non-positive price on " + format_date(d.dates[t]));
    }
    if (t > 0 && !(d.dates[t] > d.dates[t - 1])) throw Error("dates must be strictly increasing");
  }
}

struct Decision {
  Position state = Position::flat;
  double beta = kNaN;  // hedge ratio for sizing and legs
  double z = kNaN;
};

BacktestResult run(const MarketData& data, const BacktestConfig& config,
                   const std::function<Decision(std::size_t)>& decide) {
  check_market(data);
  const std::size_t T = data.dates.size();
  std::vector<double> la(T), lb(T);
  for (std::size_t t = 0; t < T; ++t) {
    la[t] = std::log(data.price_a[t]);
    lb[t] = std::log(data.price_b[t]);
  }
  const auto W = static_cast<std::size_t>(config.window);
  const double cost_rate = config.cost_bps * 1e-4;
  const auto trailing_cov = [&](std::size_t t) {
    if (!data.cov_ab.empty()) return data.cov_ab[t];
    if (t < W || W < 2) return kNaN;
    double ma = 0.0, mb = 0.0;
    for (std::size_t s = t + 1 - W; s <= t; ++s) {
      ma += la[s] - la[s - 1];
      mb += lb[s] - lb[s - 1];
    }
    ma /= static_cast<double>(W);
    mb /= static_cast<double>(W);
    double c = 0.0;
    for (std::size_t s = t + 1 - W; s <= t; ++s) c += (la[s] - la[s - 1] - ma) * (lb[s] - lb[s - 1] - mb);
    return c / static_cast<double>(W - 1);
  };

  BacktestResult r;
  double equity = config.initial_equity;
  double na = 0.0, nb = 0.0;
  Position prev = Position::flat;
  std::vector<double> equity_path;
  for (std::size_t t = 0; t < T; ++t) {
    EquityPoint pt;
    pt.date = data.dates[t];
    if (t > 0) {
      const double ra = std::exp(la[t] - la[t - 1]) - 1.0;
      const double rb = std::exp(lb[t] - lb[t - 1]) - 1.0;
      pt.pnl = na * ra + nb * rb;
      na *= 1.0 + ra;
      nb *= 1.0 + rb;
      equity += pt.pnl;
    }
    if (!(equity > 0.0)) {
      pt.equity = equity;
      pt.sizing_equity = equity;
      pt.state = prev;
      pt.notional_a = na;
      pt.notional_b = nb;
      r.curve.push_back(pt);
      equity_path.push_back(equity);
      r.metrics.bankrupt = true;
      break;
    }

    const Decision d = decide(t);
    pt.state = d.state;
    pt.beta = d.beta;
    pt.z = d.z;
    pt.sizing_equity = equity;
    double ta = 0.0, tb = 0.0;
    if (d.state != Position::flat) {
      const double va = std::max(0.0, data.vol_a[t]);
      const double vb = std::max(0.0, data.vol_b[t]);
      const double cov = trailing_cov(t);
      if (std::isnan(data.vol_a[t]) || std::isnan(data.vol_b[t])) {
        throw Error("missing volatility forecast on " + format_date(data.dates[t]));
      }
      if (std::isnan(cov)) throw Error("return covariance unavailable on " + format_date(data.dates[t]));
      const double sv = spread_vol_forecast(va, vb, d.beta, cov, config.sizing_annualization);
      const double gross = position_size(config.vol_target, sv, equity, config.max_leverage);
      const double side = static_cast<double>(static_cast<int>(d.state));
      ta = side * gross / (1.0 + std::abs(d.beta));
      tb = -side * gross * d.beta / (1.0 + std::abs(d.beta));
    }
    if (d.state != Position::flat && prev == Position::flat) ++r.metrics.trades;
    const auto trade = [&](const char* leg, double target, double& held, double price) {
      const double delta = target - held;
      if (delta == 0.0) return;
      const double c = cost_rate * std::abs(delta);
      r.ledger.push_back({data.dates[t], leg, delta, price, c});
      pt.cost += c;
      held = target;
    };
    trade("a", ta, na, data.price_a[t]);
    trade("b", tb, nb, data.price_b[t]);
    equity -= pt.cost;
    pt.equity = equity;
    pt.notional_a = na;
    pt.notional_b = nb;
    r.curve.push_back(pt);
    equity_path.push_back(equity);
    prev = d.state;
  }
  const bool bankrupt = r.metrics.bankrupt;
  const auto trades = r.metrics.trades;
  r.metrics = compute_metrics(equity_path, config.initial_equity, config.metric_annualization);
  r.metrics.bankrupt = bankrupt || !(equity_path.back() > 0.0);
  r.metrics.trades = trades;
  return r;
}

}  // namespace

void BacktestConfig::validate() const {
  if (!(entry_z > exit_z) || exit_z < 0.0) throw ConfigError("need entry_z > exit_z >= 0");
  if (window < 3) throw ConfigError("window must be >= 3");
  if (effective_hedge_window() < 3) throw ConfigError("hedge window must be >= 3");
  if (!(vol_target > 0.0)) throw ConfigError("vol_target must be positive");
  if (!(max_leverage > 0.0)) throw ConfigError("max_leverage must be positive");
  if (!(initial_equity > 0.0)) throw ConfigError("initial_equity must be positive");
  if (cost_bps < 0.0) throw ConfigError("cost_bps must be >= 0");
  if (!(sizing_annualization > 0.0) || !(metric_annualization > 0.0)) {
    throw ConfigError("annualization factors must be positive");
  }
  if (min_hold_days < 0) throw ConfigError("min_hold_days must be >= 0");
}

std::vector<std::optional<double>> rolling_hedge_ratio(std::span<const double> log_a, std::span<const double> log_b,
                                                       int window) {
  if (log_a.size() != log_b.size()) throw Error("hedge ratio: series differ in length");
  if (window < 2) throw ConfigError("hedge ratio window must be >= 2");
  const auto w = static_cast<std::size_t>(window);
  if (w > log_a.size()) throw Error("hedge ratio window exceeds series length");
  std::vector<std::optional<double>> out(log_a.size());
  for (std::size_t t = w - 1; t < log_a.size(); ++t) out[t] = window_slope(log_a, log_b, t + 1 - w, t + 1);
  return out;
}

std::vector<std::optional<double>> zscore(std::span<const double> spread, int window) {
  if (window < 2) throw ConfigError("z-score window must be >= 2");
  const auto w = static_cast<std::size_t>(window);
  if (spread.size() < w) throw Error("z-score needs at least " + std::to_string(w) + " observations");
  std::vector<std::optional<double>> out(spread.size());
  for (std::size_t t = w - 1; t < spread.size(); ++t) {
    const auto [m, sd] = mean_sd(spread, t + 1 - w, t + 1);
    if (sd > 0.0 && sd > 1e-14 * std::abs(m)) out[t] = (spread[t] - m) / sd;
  }
  return out;
}

std::vector<Position> generate_signals(std::span<const std::optional<double>> z, const BacktestConfig& config) {
  config.validate();
  SignalMachine machine(config);
  std::vector<Position> out(z.size());
  for (std::size_t t = 0; t < z.size(); ++t) out[t] = machine.step(t, z[t]);
  return out;
}

double spread_vol_forecast(double sigma_a, double sigma_b, double beta, double cov_ab, double annualization) {
  if (!(sigma_a >= 0.0) || !(sigma_b >= 0.0)) throw Error("volatility forecasts must be non-negative");
  if (!(annualization > 0.0)) throw Error("annualization must be positive");
  const double radicand = sigma_a * sigma_a + beta * beta * sigma_b * sigma_b - 2.0 * beta * cov_ab;
  return std::sqrt(annualization) * std::sqrt(std::max(0.0, radicand));
}

double position_size(double target_vol, double spread_vol, double equity, double max_leverage) {
  if (!(equity > 0.0)) throw Error("bankrupt");
  if (!(spread_vol >= 0.0)) throw Error("spread volatility must be non-negative");
  const double leverage = spread_vol > 0.0 ? std::min(target_vol / spread_vol, max_leverage) : max_leverage;
  return equity * leverage;
}

BacktestResult simulate(const MarketData& data, const BacktestConfig& config) {
  config.validate();
  check_market(data);
  const std::size_t T = data.dates.size();
  std::vector<double> la(T), lb(T);
  for (std::size_t t = 0; t < T; ++t) {
    la[t] = std::log(data.price_a[t]);
    lb[t] = std::log(data.price_b[t]);
  }
  const auto W = static_cast<std::size_t>(config.window);
  const auto H = static_cast<std::size_t>(config.effective_hedge_window());
  // First date with a hedge ratio, a full z window and a full covariance window.
  const std::size_t first = std::max({H - 1, W - 1, data.cov_ab.empty() ? W : std::size_t{0}});
  SignalMachine machine(config);
  std::vector<double> spread(W);
  return run(data, config, [&](std::size_t t) {
    Decision d;
    // No transitions before every window is full or while forecasts are missing.
    if (t < first || std::isnan(data.vol_a[t]) || std::isnan(data.vol_b[t])) {
      d.state = machine.step(t, std::nullopt);
      return d;
    }
    d.beta = window_slope(la, lb, t + 1 - H, t + 1);
    // The z window is re-expressed with today's hedge ratio.
    for (std::size_t s = 0; s < W; ++s) {
      const std::size_t row = t + 1 - W + s;
      spread[s] = la[row] - d.beta * lb[row];
    }
    const auto [m, sd] = mean_sd(spread, 0, W);
    std::optional<double> z;
    if (sd > 0.0 && sd > 1e-14 * std::abs(m)) z = (spread[W - 1] - m) / sd;
    if (z) d.z = *z;
    d.state = machine.step(t, z);
    return d;
  });
}

BacktestResult simulate_scripted(const MarketData& data, std::span<const Position> states, double beta,
                                 const BacktestConfig& config) {
  config.validate();
  if (states.size() != data.dates.size()) throw Error("scripted states are not date-aligned");
  return run(data, config, [&](std::size_t t) {
    Decision d;
    d.state = states[t];
    d.beta = beta;
    return d;
  });
}

Metrics compute_metrics(std::span<const double> equity, double initial_equity, double annualization) {
  if (equity.empty()) throw Error("empty equity curve");
  Metrics m;
  m.final_equity = equity.back();
  m.days = equity.size() - 1;
  if (m.days == 0) return m;
  const double growth = m.final_equity / initial_equity;
  m.annualized_return =
      growth > 0.0 ? std::pow(growth, annualization / static_cast<double>(m.days)) - 1.0 : -1.0;
  std::vector<double> rets;
  for (std::size_t t = 1; t < equity.size(); ++t) rets.push_back(equity[t] / equity[t - 1] - 1.0);
  if (rets.size() >= 2) {
    const auto [mean, sd] = mean_sd(rets, 0, rets.size());
    m.sharpe = sd > 0.0 ? mean / sd * std::sqrt(annualization) : 0.0;
  }
  return m;
}

nlohmann::json metrics_json(const Metrics& m) {
  nlohmann::json j;
  j["Portfolio Value"] = m.final_equity;
  j["Ann. Return"] = m.annualized_return;
  j["Ann. Sharpe Ratio"] = m.sharpe;
  return j;
}

void write_equity_csv(std::ostream& out, const BacktestResult& r) {
  out << "date,equity,pnl,cost,state,beta,z,notional_a,notional_b\n";
  for (const auto& p : r.curve) {
    out << format_date(p.date) << ',' << csv::format_double(p.equity) << ',' << csv::format_double(p.pnl) << ','
        << csv::format_double(p.cost) << ',' << static_cast<int>(p.state) << ',' << csv::format_double(p.beta) << ','
        << csv::format_double(p.z) << ',' << csv::format_double(p.notional_a) << ','
        << csv::format_double(p.notional_b) << '\n';
  }
}

void write_ledger_csv(std::ostream& out, const BacktestResult& r) {
  out << "date,leg,notional,price,cost\n";
  for (const auto& f : r.ledger) {
    out << format_date(f.date) << ',' << f.leg << ',' << csv::format_double(f.notional) << ','
        << csv::format_double(f.price) << ',' << csv::format_double(f.cost) << '\n';
  }
}

void write_metrics_csv(std::ostream& out, std::span<const std::pair<std::string, Metrics>> rows) {
  out << "model,Portfolio Value,Ann. Return,Ann. Sharpe Ratio\n";
  for (const auto& [model, m] : rows) {
    out << model << ',' << csv::format_double(m.final_equity) << ',' << csv::format_double(m.annualized_return) << ','
        << csv::format_double(m.sharpe) << '\n';
  }
}

}  // namespace favf::backtest
