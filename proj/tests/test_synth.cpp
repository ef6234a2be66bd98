// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "favf/error.hpp"
#include "favf/synth.hpp"

using namespace favf;
using namespace favf::synth;

TEST(FactorPanel, ShapesAndPositivity) {
  SynthSpec s;
  s.seed = 4;
  s.T = 300;
  s.p = 7;
  s.k_true = 2;
  s.noise_scale = 0.3;
  s.loading_drift = 0.02;
  const auto fp = gen_factor_panel(s);
  EXPECT_EQ(fp.panel.rows(), 300u);
  EXPECT_EQ(fp.panel.cols(), 7u);
  EXPECT_EQ(fp.factors.cols(), 2);
  EXPECT_EQ(fp.loadings.size(), 300u);
  EXPECT_GE(fp.panel.values.minCoeff(), kPositivityFloor);
  for (Eigen::Index t = 0; t < 300; t += 37) {
    const Eigen::VectorXd sig = fp.loadings[static_cast<std::size_t>(t)] * fp.factors.row(t).transpose();
    EXPECT_LT((sig - fp.signal.row(t).transpose()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(FactorPanel, NoiselessEqualsSignal) {
  SynthSpec s;
  s.seed = 5;
  const auto fp = gen_factor_panel(s);
  EXPECT_EQ(fp.panel.values, fp.signal.cwiseAbs().cwiseMax(kPositivityFloor));
}

TEST(FactorPanel, SeedDeterminism) {
  SynthSpec s;
  s.seed = 77;
  s.noise_scale = 0.1;
  EXPECT_EQ(gen_factor_panel(s).panel.values, gen_factor_panel(s).panel.values);
  SynthSpec t = s;
  t.seed = 78;
  EXPECT_NE(gen_factor_panel(s).panel.values, gen_factor_panel(t).panel.values);
}

TEST(FactorPanel, ValidatesSpec) {
  SynthSpec s;
  s.k_true = 9;
  EXPECT_THROW(gen_factor_panel(s), ConfigError);
  s = {};
  s.factor_persistence = 1.0;
  EXPECT_THROW(gen_factor_panel(s), ConfigError);
}

TEST(Forecastable, EmpiricalR2MatchesClosedForm) {
  ForecastableSpec s;
  s.seed = 9;
  s.T = 20000;
  s.cross_noise = 0.0;
  const auto data = gen_forecastable_rv(s);
  // Regress target_{t+1} on the true conditional mean.
  double ss_res = 0.0, ss_tot = 0.0, mean = 0.0;
  const std::size_t T = s.T;
  for (std::size_t t = 1; t < T; ++t) mean += data.panel.values(static_cast<Eigen::Index>(t), 0);
  mean /= static_cast<double>(T - 1);
  for (std::size_t t = 1; t < T; ++t) {
    const double y = data.panel.values(static_cast<Eigen::Index>(t), 0);
    const double prev = data.panel.values(static_cast<Eigen::Index>(t - 1), 0);
    const double fitted = s.a + s.b * prev + s.c * data.factor[t - 1];
    ss_res += (y - fitted) * (y - fitted);
    ss_tot += (y - mean) * (y - mean);
  }
  EXPECT_NEAR(1.0 - ss_res / ss_tot, data.true_r2, 0.02);
  EXPECT_GT(data.true_r2, 0.5);
}

TEST(Forecastable, ZeroSignalHasNoFactorContribution) {
  ForecastableSpec s;
  s.c = 0.0;
  const double r2 = forecastable_true_r2(s);
  const double b2 = s.b * s.b;
  EXPECT_NEAR(r2, b2, 1e-12);
}

TEST(Pair, SpreadIdentity) {
  SynthSpec s;
  s.seed = 3;
  s.T = 400;
  const auto pair = gen_cointegrated_pair(s);
  ASSERT_EQ(pair.log_a.size(), 400u);
  for (std::size_t t = 0; t < 400; ++t) {
    EXPECT_NEAR(pair.log_a[t], pair.intercept + pair.beta * pair.log_b[t] + pair.spread[t], 1e-12);
  }
  EXPECT_DOUBLE_EQ(pair.beta, s.hedge_beta);
}

TEST(System, RankAndShape) {
  const auto sys = gen_cointegrated_system(2, 300, 4, 2);
  EXPECT_EQ(sys.log_prices.rows(), 300);
  EXPECT_EQ(sys.log_prices.cols(), 4);
  EXPECT_EQ(sys.rank, 2);
  EXPECT_EQ(sys.beta.cols(), 2);
  // beta' y_t is stationary: its spread is far below that of the levels.
  const Eigen::MatrixXd z = sys.log_prices * sys.beta;
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double sd_z = std::sqrt((z.col(j).array() - z.col(j).mean()).square().mean());
    const Eigen::VectorXd lvl = sys.log_prices.col(3);
    const double sd_l = std::sqrt((lvl.array() - lvl.mean()).square().mean());
    EXPECT_LT(sd_z, 0.5 * sd_l);
  }
}

TEST(Calendar, ConsecutiveDays) {
  const auto d = calendar_dates(parse_date("2020-02-27"), 4);
  EXPECT_EQ(format_date(d[2]), "2020-02-29");
  EXPECT_EQ(format_date(d[3]), "2020-03-01");
}
