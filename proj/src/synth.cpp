// SPDX-License-Identifier: Apache-2.0
#include "favf/synth.hpp"

#include <cmath>
#include <string>

#include "favf/error.hpp"
#include "favf/rng.hpp"

namespace favf::synth {

namespace {

double positive(double v) { return std::max(std::abs(v), kPositivityFloor); }

}  // namespace

void SynthSpec::validate() const {
  if (T < 2) throw ConfigError("synth: T must be >= 2");
  if (p < 1) throw ConfigError("synth: p must be >= 1");
  if (k_true < 1 || static_cast<std::size_t>(k_true) > p) throw ConfigError("synth: k_true must be in [1, p]");
  if (!(factor_persistence >= 0.0 && factor_persistence < 1.0)) {
    throw ConfigError("synth: factor persistence must lie in [0, 1)");
  }
  if (factor_innovation < 0.0 || loading_drift < 0.0 || noise_scale < 0.0 || spread_vol < 0.0 ||
      random_walk_vol < 0.0) {
    throw ConfigError("synth: scales must be non-negative");
  }
  if (!(mean_reversion >= 0.0 && mean_reversion <= 1.0)) {
    throw ConfigError("synth: mean reversion speed must lie in [0, 1]");
  }
}

std::vector<Date> calendar_dates(Date start, std::size_t n) {
  std::vector<Date> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = start + std::chrono::days{static_cast<int>(i)};
  return d;
}

FactorPanel gen_factor_panel(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto T = static_cast<Eigen::Index>(spec.T);
  const auto p = static_cast<Eigen::Index>(spec.p);
  const auto k = static_cast<Eigen::Index>(spec.k_true);

  FactorPanel out;
  out.factors.resize(T, k);
  out.signal.resize(T, p);
  out.loadings.reserve(spec.T);
  out.panel.dates = calendar_dates(spec.start_date, spec.T);
  for (std::size_t j = 0; j < spec.p; ++j) out.panel.assets.push_back("S" + std::to_string(j + 1));
  out.panel.values.resize(T, p);

  // Positive initial loadings keep the noiseless common component positive.
  Eigen::MatrixXd lambda(p, k);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < k; ++j) lambda(i, j) = rng.uniform(0.5, 1.5);

  Eigen::VectorXd f = Eigen::VectorXd::Constant(k, spec.factor_mean);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0) {
      for (Eigen::Index j = 0; j < k; ++j) {
        f(j) = spec.factor_mean + spec.factor_persistence * (f(j) - spec.factor_mean) +
               spec.factor_innovation * rng.normal();
      }
      if (spec.loading_drift > 0.0) {
        for (Eigen::Index i = 0; i < p; ++i)
          for (Eigen::Index j = 0; j < k; ++j) lambda(i, j) += spec.loading_drift * rng.normal();
      }
    }
    out.factors.row(t) = f.transpose();
    out.loadings.push_back(lambda);
    const Eigen::VectorXd s = lambda * f;
    out.signal.row(t) = s.transpose();
    for (Eigen::Index i = 0; i < p; ++i) {
      const double noise = spec.noise_scale > 0.0 ? spec.noise_scale * rng.normal() : 0.0;
      out.panel.values(t, i) = positive(s(i) + noise);
    }
  }
  return out;
}

double forecastable_true_r2(const ForecastableSpec& s) {
  const double phi = s.factor_persistence;
  const double vg = s.factor_innovation * s.factor_innovation / (1.0 - phi * phi);
  const double cov_rg = s.c * phi * vg / (1.0 - s.b * phi);
  const double ve = s.noise * s.noise;
  const double v = (s.c * s.c * vg + 2.0 * s.b * s.c * cov_rg + ve) / (1.0 - s.b * s.b);
  if (!(v > 0.0)) return 0.0;
  return 1.0 - ve / v;
}

ForecastablePanel gen_forecastable_rv(const ForecastableSpec& spec) {
  if (spec.p < 2) throw ConfigError("forecastable panel needs p >= 2");
  if (!(std::abs(spec.b) < 1.0) || !(spec.factor_persistence >= 0.0 && spec.factor_persistence < 1.0)) {
    throw ConfigError("forecastable dynamics must be stationary");
  }
  Rng rng(spec.seed);
  const std::size_t total = spec.T + spec.burn;
  const auto p = static_cast<Eigen::Index>(spec.p);

  std::vector<double> lambda(spec.p);
  for (auto& l : lambda) l = rng.uniform(0.8, 1.2);

  ForecastablePanel out;
  out.panel.dates = calendar_dates(spec.start_date, spec.T);
  out.panel.assets.push_back("TARGET");
  for (std::size_t j = 1; j < spec.p; ++j) out.panel.assets.push_back("X" + std::to_string(j));
  out.panel.values.resize(static_cast<Eigen::Index>(spec.T), p);
  out.factor.reserve(spec.T);

  double g = spec.factor_mean;
  double target = (spec.a + spec.c * spec.factor_mean) / (1.0 - spec.b);
  for (std::size_t t = 0; t < total; ++t) {
    if (t > 0) {
      // target uses g_{t-1}, so update it before advancing g.
      target = spec.a + spec.b * target + spec.c * g + spec.noise * rng.normal();
      g = spec.factor_mean + spec.factor_persistence * (g - spec.factor_mean) + spec.factor_innovation * rng.normal();
    }
    Eigen::VectorXd row(p);
    row(0) = positive(target);
    for (Eigen::Index j = 1; j < p; ++j) {
      row(j) = positive(lambda[static_cast<std::size_t>(j)] * g + spec.cross_noise * rng.normal());
    }
    if (t >= spec.burn) {
      const auto r = static_cast<Eigen::Index>(t - spec.burn);
      out.panel.values.row(r) = row.transpose();
      out.factor.push_back(g);
    }
  }
  out.true_r2 = forecastable_true_r2(spec);
  return out;
}

PricePair gen_cointegrated_pair(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  PricePair out;
  out.beta = spec.hedge_beta;
  out.intercept = spec.intercept;
  out.dates = calendar_dates(spec.start_date, spec.T);
  out.log_a.resize(spec.T);
  out.log_b.resize(spec.T);
  out.spread.resize(spec.T);
  double lb = std::log(100.0);
  double s = 0.0;
  const double keep = 1.0 - spec.mean_reversion;
  for (std::size_t t = 0; t < spec.T; ++t) {
    if (t > 0) {
      lb += spec.random_walk_vol * rng.normal();
      s = keep * s + spec.spread_vol * rng.normal();
    } else {
      s = spec.spread_vol * rng.normal();
    }
    out.log_b[t] = lb;
    out.spread[t] = s;
    out.log_a[t] = spec.intercept + spec.hedge_beta * lb + s;
  }
  return out;
}

CointegratedSystem gen_cointegrated_system(std::uint64_t seed, std::size_t T, std::size_t p, int rank, double ar,
                                           double shock, double walk) {
  if (rank < 0 || static_cast<std::size_t>(rank) >= p) throw ConfigError("cointegration rank must be in [0, p)");
  Rng rng(seed);
  const auto r = static_cast<Eigen::Index>(rank);
  const auto pp = static_cast<Eigen::Index>(p);
  const Eigen::Index trends = pp - r;

  Eigen::MatrixXd mix(r, trends);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < trends; ++j) mix(i, j) = rng.uniform(0.5, 1.5);

  CointegratedSystem out;
  out.rank = rank;
  out.log_prices.resize(static_cast<Eigen::Index>(T), pp);
  out.beta = Eigen::MatrixXd::Zero(pp, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    out.beta(i, i) = 1.0;
    for (Eigen::Index j = 0; j < trends; ++j) out.beta(r + j, i) = -mix(i, j);
  }

  Eigen::VectorXd w = Eigen::VectorXd::Constant(trends, std::log(100.0));
  Eigen::VectorXd dev = Eigen::VectorXd::Zero(r);
  for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(T); ++t) {
    for (Eigen::Index j = 0; j < trends; ++j) w(j) += walk * rng.normal();
    for (Eigen::Index i = 0; i < r; ++i) dev(i) = ar * dev(i) + shock * rng.normal();
    out.log_prices.row(t).tail(trends) = w.transpose();
    if (r > 0) out.log_prices.row(t).head(r) = (mix * w + dev).transpose();
  }
  return out;
}

}  // namespace favf::synth
