// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "favf/backtest.hpp"
#include "favf/cli.hpp"
#include "favf/coint.hpp"
#include "favf/eval.hpp"
#include "favf/factors.hpp"
#include "favf/models.hpp"
#include "favf/nnet.hpp"
#include "favf/rng.hpp"
#include "favf/synth.hpp"

namespace fs = std::filesystem;
using namespace favf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0 = none
  std::function<Outcome()> body;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}


Outcome factor_recovery() {
  synth::SynthSpec s;
  s.seed = 11;
  s.T = 500;
  s.p = 5;
  s.k_true = 1;
  s.noise_scale = 0.0;
  s.loading_drift = 0.0;
  const auto fp = synth::gen_factor_panel(s);
  const auto path = factors::extract_factors(fp.panel, 60, 1);
  const auto res = factors::reconstruct_residual(fp.panel, path);
  double worst = 0.0;
  for (const auto& r : res) worst = std::max(worst, r.cwiseAbs().maxCoeff());
  const bool full = path.size() == 500 - 60 + 1;
  return {full && worst < 1e-8, fmt("max residual %.3e over %zu dates", worst, path.size())};
}

Outcome loading_normalization() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed * 7919);
    synth::SynthSpec s;
    s.seed = seed;
    s.T = 150;
    s.p = 4 + rng.next_u64() % 6;
    s.k_true = 1 + static_cast<int>(rng.next_u64() % 3);
    s.noise_scale = 0.05;
    s.loading_drift = 0.01;
    const auto fp = synth::gen_factor_panel(s);
    const int k = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(s.p - 1));
    const auto path = factors::extract_factors(fp.panel, 40, k);
    const double p = static_cast<double>(s.p);
    for (const auto& L : path.loadings) {
      const Eigen::MatrixXd g = L.transpose() * L / p - Eigen::MatrixXd::Identity(k, k);
      worst = std::max(worst, g.cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-8, fmt("max |L'L/p - I| = %.3e over 100 panels", worst)};
}

Outcome midas_weights() {
  double uniform_dev = 0.0, sum_dev = 0.0;
  bool monotone = true;
  for (int k : {1, 2, 5, 22, 30, 60}) {
    const auto w = models::midas_weights(1.0, 1.0, k);
    for (Eigen::Index i = 0; i < w.size(); ++i) uniform_dev = std::max(uniform_dev, std::abs(w(i) - 1.0 / k));
  }
  std::vector<double> t1{1.0, 1.5, 3.0, 6.0};
  const auto t2 = models::default_theta2_grid();
  for (double a : t1) {
    for (double b : t2) {
      for (int k : {5, 22, 30, 60}) {
        const auto w = models::midas_weights(a, b, k);
        sum_dev = std::max(sum_dev, std::abs(w.sum() - 1.0));
        if (a == 1.0 && b > 1.0) {
          for (Eigen::Index i = 1; i < w.size(); ++i) monotone = monotone && w(i) < w(i - 1);
        }
      }
    }
  }
  return {uniform_dev == 0.0 && sum_dev < 1e-12 && monotone,
          fmt("uniform deviation %.1e, max |sum-1| %.1e, monotone %s", uniform_dev, sum_dev,
              monotone ? "yes" : "no")};
}

struct AugmentationTrial {
  bool aug_better = false;
  eval::DmResult dm;
};

AugmentationTrial augmentation_trial(std::uint64_t seed, double c) {
  synth::ForecastableSpec fs;
  fs.seed = seed;
  fs.T = 600;
  fs.c = c;
  const auto data = synth::gen_forecastable_rv(fs);
  models::RunSpec spec;
  spec.model = models::ModelKind::ar;
  spec.horizon = 1;
  spec.factors.window = 60;
  spec.start = 300;
  spec.first_origin = models::burn_in_row(60, 0, false);
  const auto path = factors::extract_factors(data.panel, 60, static_cast<int>(data.panel.cols()));
  const auto plain = models::expanding_window_run(data.panel, 0, spec, &path);
  spec.factors.augment = true;
  const auto aug = models::expanding_window_run(data.panel, 0, spec, &path);
  const auto a = plain.actuals();
  const auto pp = plain.predictions();
  const auto pa = aug.predictions();
  AugmentationTrial out;
  out.aug_better = eval::r2(a, pa) > eval::r2(a, pp);
  out.dm = eval::dm_test(eval::losses(a, pp, eval::LossKind::mse), eval::losses(a, pa, eval::LossKind::mse), 1);
  return out;
}

Outcome augmentation_benefit() {
  int better = 0, dm_sig = 0, null_reject = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto strong = augmentation_trial(seed, 0.5);
    better += strong.aug_better;
    dm_sig += strong.dm.statistic > 0.0 && strong.dm.p_value < 0.05;
    const auto null = augmentation_trial(seed + 1000, 0.0);
    null_reject += null.dm.p_value < 0.05;
  }
  return {better >= 95 && dm_sig >= 80 && null_reject <= 10,
          fmt("R2 gain in %d/100, DM>0 p<0.05 in %d/100, null rejections %d/100", better, dm_sig, null_reject)};
}

Outcome metric_identities() {
  double q = 0.0, u = 0.0, r = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    std::vector<double> a(200);
    for (auto& v : a) v = std::exp(rng.normal(-4.0, 0.5));
    q = std::max(q, std::abs(eval::qlike(a, a)));
    const auto rv7 = models::trailing_mean(a, 7);
    std::vector<double> w(rv7.begin() + 6, rv7.end());
    u = std::max(u, std::abs(eval::uow(w, w) - 0.04));
    r = std::max(r, std::abs(eval::r2(a, a) - 1.0));
  }
  // SR^2/gamma - SR^2/(2 gamma) in floating point is the 0.04 closest double
  // only up to rounding of 0.4^2.
  return {q == 0.0 && u <= 1e-15 && r == 0.0, fmt("|qlike| %.1e, |uow-0.04| %.1e, |r2-1| %.1e", q, u, r)};
}

Outcome dm_size() {
  Rng rng(20240715);
  int reject = 0;
  const int draws = 2000;
  for (int d = 0; d < draws; ++d) {
    std::vector<double> a(250), p1(250), p2(250);
    for (std::size_t t = 0; t < 250; ++t) {
      a[t] = rng.normal();
      p1[t] = a[t] + rng.normal();
      p2[t] = a[t] + rng.normal();
    }
    const auto r = eval::dm_test(eval::losses(a, p1, eval::LossKind::mse), eval::losses(a, p2, eval::LossKind::mse), 1);
    reject += r.p_value < 0.05;
  }
  const double rate = static_cast<double>(reject) / draws;
  return {rate >= 0.035 && rate <= 0.065, fmt("rejection rate %.4f", rate)};
}

Outcome lstm_checks() {
  double worst = 0.0, unfloored = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    nnet::LstmConfig cfg;
    cfg.hidden = 8;
    cfg.input_width = 2;
    cfg.with_seed(seed);
    const auto params = nnet::LstmParams::initialize(cfg);
    Rng rng(seed + 100);
    Eigen::MatrixXd x(7, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    const double target = rng.normal();
    worst = std::max(worst, nnet::gradient_check(params, x, target, seed, 300));
    unfloored = std::max(unfloored, nnet::gradient_check(params, x, target, seed, 300, 1e-4, 0.0));
  }

  // Target is the last element of the input window.
  nnet::Dataset all;
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    Eigen::MatrixXd x(7, 1);
    for (Eigen::Index r = 0; r < 7; ++r) x(r, 0) = rng.normal(1.0, 0.5);
    all.inputs.push_back(x);
    all.targets.push_back(x(6, 0));
    all.origins.push_back(parse_date("2018-01-01") + std::chrono::days{i});
  }
  const auto [train, test] = nnet::split_80_20(all, 1);
  nnet::LstmConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 60;
  cfg.learning_rate = 3e-3;
  cfg.with_seed(5);
  const auto model = nnet::train(cfg, train);
  double mse = 0.0, mean = 0.0;
  for (double y : test.targets) mean += y;
  mean /= static_cast<double>(test.size());
  double var = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double e = model.predict(test.inputs[i]) - test.targets[i];
    mse += e * e;
    var += (test.targets[i] - mean) * (test.targets[i] - mean);
  }
  const double ratio = mse / var;
  return {worst < 1e-4 && ratio < 0.01,
          fmt("max gradient rel. error %.2e (%.2e without the 1e-7 floor), identity test MSE / var %.4f", worst,
              unfloored, ratio)};
}

Outcome cointegration_power() {
  int eg_power = 0, eg_size = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    synth::SynthSpec s;
    s.seed = seed;
    s.T = 1000;
    s.mean_reversion = 0.1;
    const auto pair = synth::gen_cointegrated_pair(s);
    eg_power += coint::engle_granger(pair.log_a, pair.log_b).reject_5;

    Rng rng(seed + 500000);
    std::vector<double> x(1000), y(1000);
    for (std::size_t t = 1; t < 1000; ++t) {
      x[t] = x[t - 1] + 0.03 * rng.normal();
      y[t] = y[t - 1] + 0.03 * rng.normal();
    }
    eg_size += coint::engle_granger(x, y).reject_5;
  }
  int rank_ok = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto sys = synth::gen_cointegrated_system(seed, 500, 3, 1);
    rank_ok += coint::johansen_trace(sys.log_prices).rank == 1;
  }
  return {eg_power >= 450 && eg_size <= 50 && rank_ok >= 180,
          fmt("EG rejects %d/500 cointegrated, %d/500 independent; Johansen rank 1 in %d/200", eg_power, eg_size,
              rank_ok)};
}

backtest::MarketData random_market(std::uint64_t seed, std::size_t T, double vol_scale) {
  synth::SynthSpec s;
  s.seed = seed;
  s.T = T;
  s.mean_reversion = 0.05;
  const auto pair = synth::gen_cointegrated_pair(s);
  backtest::MarketData m;
  m.dates = pair.dates;
  Rng rng(seed ^ 0xABCDEF);
  for (std::size_t t = 0; t < T; ++t) {
    m.price_a.push_back(std::exp(pair.log_a[t]));
    m.price_b.push_back(std::exp(pair.log_b[t]));
    m.vol_a.push_back(vol_scale * rng.uniform(0.5, 1.5));
    m.vol_b.push_back(vol_scale * rng.uniform(0.5, 1.5));
  }
  return m;
}

Outcome backtest_accounting() {
  double identity = 0.0, lev_excess = -1.0;
  int trades = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    // Small vol forecasts push the sizing rule into the leverage cap.
    const auto m = random_market(seed, 400, seed % 2 ? 0.002 : 0.03);
    backtest::BacktestConfig cfg;
    cfg.window = 30;
    const auto r = backtest::simulate(m, cfg);
    trades += static_cast<int>(r.metrics.trades);
    double prev = cfg.initial_equity;
    for (const auto& pt : r.curve) {
      identity = std::max(identity, std::abs(pt.equity - (prev + pt.pnl - pt.cost)));
      prev = pt.equity;
      if (pt.state != backtest::Position::flat) {
        lev_excess = std::max(lev_excess, (std::abs(pt.notional_a) + std::abs(pt.notional_b)) -
                                              cfg.max_leverage * pt.sizing_equity * (1.0 + 1e-12));
      }
    }
  }

  // Flat run: the entry threshold is never reached.
  auto flat_market = random_market(3, 300, 0.02);
  backtest::BacktestConfig flat_cfg;
  flat_cfg.entry_z = 1e9;
  const auto flat = backtest::simulate(flat_market, flat_cfg);
  const bool flat_ok = flat.metrics.final_equity == 50000.0 && flat.ledger.empty();

  // Scripted single round trip, hand-computed.
  backtest::MarketData m;
  m.dates = synth::calendar_dates(parse_date("2021-03-01"), 4);
  m.price_a = {100.0, 100.0, 102.0, 101.0};
  m.price_b = {50.0, 50.0, 49.0, 50.0};
  m.vol_a = {0.01, 0.01, 0.01, 0.01};
  m.vol_b = {0.02, 0.02, 0.02, 0.02};
  m.cov_ab = {0.0, 0.0, 0.0, 0.0};
  const std::vector<backtest::Position> states{backtest::Position::flat, backtest::Position::long_spread,
                                               backtest::Position::flat, backtest::Position::flat};
  backtest::BacktestConfig cfg;
  const double beta = 0.8;
  const auto r = backtest::simulate_scripted(m, states, beta, cfg);

  const double sv = std::sqrt(252.0) * std::sqrt(0.01 * 0.01 + beta * beta * 0.02 * 0.02);
  const double gross = 50000.0 * std::min(0.25 / sv, 5.0);
  const double na = gross / 1.8, nb = -gross * 0.8 / 1.8;
  const double entry_cost = 5e-4 * (std::abs(na) + std::abs(nb));
  const double e1 = 50000.0 - entry_cost;
  const double ra = 102.0 / 100.0 - 1.0, rb = 49.0 / 50.0 - 1.0;
  const double pnl2 = na * ra + nb * rb;
  const double exit_cost = 5e-4 * (std::abs(na * (1 + ra)) + std::abs(nb * (1 + rb)));
  const double e2 = e1 + pnl2 - exit_cost;
  const std::vector<double> oracle{50000.0, e1, e2, e2};
  double scripted = 0.0;
  for (std::size_t t = 0; t < 4; ++t) scripted = std::max(scripted, std::abs(r.curve[t].equity - oracle[t]));
  const bool ledger_ok = r.ledger.size() == 4 && std::abs(r.ledger[0].cost - 5e-4 * std::abs(na)) < 1e-9;

  return {identity < 1e-9 && flat_ok && scripted < 1e-9 && ledger_ok && lev_excess <= 0.0 && trades > 0,
          fmt("identity %.1e, flat final %.2f, scripted error %.1e, leverage excess %.1e, %d trades", identity,
              flat.metrics.final_equity, scripted, std::max(lev_excess, 0.0), trades)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("favf_acceptance_" + name);
  fs::remove_all(d);
  return d;
}

Outcome determinism() {
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  if (run_cli({"favf", "pipeline", "--out", a.string(), "--seed", "17"}) != 0 ||
      run_cli({"favf", "pipeline", "--out", b.string(), "--seed", "17"}) != 0) {
    return {false, "pipeline run failed"};
  }
  int files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    const auto other = b / e.path().filename();
    const auto x = read_file(e.path());
    const auto y = fs::exists(other) ? read_file(other) : std::string{};
    if (cli::fnv1a64_hex(x) != cli::fnv1a64_hex(y) || x != y) ++differ;
  }
  fs::remove_all(a);
  fs::remove_all(b);
  return {files > 0 && differ == 0, fmt("%d CSV files compared, %d differ", files, differ)};
}

// First line that is not a provenance comment.
std::string header_of(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.starts_with("#")) return line;
  }
  return {};
}

Outcome reporting_format() {
  const auto dir = scratch_dir("fmt");
  if (run_cli({"favf", "pipeline", "--out", dir.string(), "--seed", "3"}) != 0) return {false, "pipeline run failed"};
  const std::string metrics = header_of(dir / "metrics.csv");
  const std::string bt = header_of(dir / "backtest_metrics.csv");
  bool json_ok = false;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (!name.starts_with("backtest_") || e.path().extension() != ".json") continue;
    const auto j = nlohmann::json::parse(read_file(e.path()));
    std::set<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.insert(k);
    json_ok = keys == std::set<std::string>{"Portfolio Value", "Ann. Return", "Ann. Sharpe Ratio"};
    if (!json_ok) break;
  }
  fs::remove_all(dir);
  const bool ok = metrics == "asset,model,R2,MSE,QLIKE" && bt == "model,Portfolio Value,Ann. Return,Ann. Sharpe Ratio" &&
                  json_ok;
  return {ok, "evaluate header [" + metrics + "], backtest header [" + bt + "]"};
}

}  // namespace

int main(int argc, char** argv) {
  setenv("FAVF_LOG_LEVEL", "error", 0);
  const std::vector<Criterion> all{
      {1, "factor recovery", 1.0, factor_recovery},
      {2, "loading normalization", 0.0, loading_normalization},
      {3, "MIDAS weights", 0.0, midas_weights},
      {4, "augmentation benefit", 120.0, augmentation_benefit},
      {5, "metric identities", 0.0, metric_identities},
      {6, "DM size", 60.0, dm_size},
      {7, "LSTM gradient and identity fit", 120.0, lstm_checks},
      {8, "cointegration power and size", 180.0, cointegration_power},
      {9, "backtest accounting", 0.0, backtest_accounting},
      {10, "determinism", 0.0, determinism},
      {11, "reporting format", 0.0, reporting_format},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += fmt(" (over the %.0f s limit)", c.time_limit_s);
    }
    std::printf("%s [%d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
