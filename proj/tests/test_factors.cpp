// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "favf/error.hpp"
#include "favf/factors.hpp"
#include "favf/rng.hpp"
#include "favf/synth.hpp"

using namespace favf;
using namespace favf::factors;

namespace {

ingest::VolPanel random_panel(std::uint64_t seed, std::size_t T, std::size_t p) {
  Rng rng(seed);
  ingest::VolPanel panel;
  panel.dates = synth::calendar_dates(parse_date("2020-01-01"), T);
  for (std::size_t j = 0; j < p; ++j) panel.assets.push_back("A" + std::to_string(j));
  panel.values.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < panel.values.size(); ++i) panel.values(i) = std::exp(rng.normal(-3.0, 0.4));
  return panel;
}

}  // namespace

TEST(SecondMoment, MatchesLoopOracle) {
  const auto panel = random_panel(1, 80, 4);
  const auto m = rolling_second_moment(panel, 30, 50).matrix();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int t = 21; t <= 50; ++t) s += panel.values(t, i) * panel.values(t, j);
      EXPECT_NEAR(m(i, j), s / 30.0, 1e-15);
    }
  }
  EXPECT_THROW(rolling_second_moment(panel, 30, 28), Error);
}

TEST(SymMatrix, RejectsAsymmetric) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 1;
  EXPECT_THROW(SymMatrix{m}, Error);
}

TEST(EigenSym, SortedOrthonormalWithSignConvention) {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd a(6, 6);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
    const Eigen::MatrixXd s = a * a.transpose();
    const auto e = eigen_sym(SymMatrix(s));
    for (Eigen::Index i = 1; i < 6; ++i) EXPECT_GE(e.values(i - 1), e.values(i));
    EXPECT_LT((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((s * e.vectors - e.vectors * e.values.asDiagonal()).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index c = 0; c < 6; ++c) {
      Eigen::Index arg = 0;
      e.vectors.col(c).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(e.vectors(arg, c), 0.0);
    }
  }
}

TEST(ExtractFactors, UsesOnlyTrailingWindow) {
  auto panel = random_panel(9, 120, 5);
  const auto before = extract_factors(panel, 40, 2);
  panel.values.row(100) *= 3.0;
  const auto after = extract_factors(panel, 40, 2);
  ASSERT_EQ(before.size(), after.size());
  EXPECT_EQ(before.first_row, 39u);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const std::size_t row = before.first_row + i;
    const bool touched = row >= 100 && row < 140;
    if (!touched) {
      EXPECT_EQ(before.factors[i], after.factors[i]) << "row " << row;
    }
  }
}

TEST(ExtractFactors, FactorsAreProjections) {
  const auto panel = random_panel(12, 100, 6);
  const auto path = extract_factors(panel, 50, 3);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Eigen::VectorXd y = panel.values.row(static_cast<Eigen::Index>(path.first_row + i)).transpose();
    const Eigen::VectorXd f = path.loadings[i].transpose() * y / 6.0;
    EXPECT_LT((f - path.factors[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ExtractFactors, FullRankReconstructsExactly) {
  const auto panel = random_panel(13, 90, 4);
  const auto path = extract_factors(panel, 30, 4);
  for (const auto& r : reconstruct_residual(panel, path)) EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExtractFactors, RecoversRankOneSignalUpToScale) {
  synth::SynthSpec s;
  s.seed = 21;
  s.T = 200;
  s.p = 6;
  const auto fp = synth::gen_factor_panel(s);
  const auto path = extract_factors(fp.panel, 60, 1);
  // Loadings are static, so the estimated factor is a fixed multiple of the true one.
  const double ratio = path.factors[0](0) / fp.factors(59, 0);
  for (std::size_t i = 0; i < path.size(); ++i) {
    EXPECT_NEAR(path.factors[i](0) / fp.factors(static_cast<Eigen::Index>(59 + i), 0), ratio, 1e-9);
  }
}

TEST(ExplainedVariance, SumsToOne) {
  Eigen::VectorXd ev(4);
  ev << 4, 3, 2, 1;
  const auto f = explained_variance(ev);
  EXPECT_NEAR(f.sum(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(f(0), 0.4);
}

TEST(SelectK, Policies) {
  Eigen::VectorXd f(4);
  f << 0.6, 0.25, 0.1, 0.05;
  EXPECT_EQ(select_k(f, SelectionPolicy::dominant()), 1);
  EXPECT_EQ(select_k(f, SelectionPolicy::variance_threshold(0.84)), 2);
  EXPECT_EQ(select_k(f, SelectionPolicy::variance_threshold(0.90)), 3);
  EXPECT_EQ(select_k(f, SelectionPolicy::variance_threshold(0.99)), 4);
}

TEST(WeeklyFactor, TrailingMeanOfDaily) {
  const auto panel = random_panel(5, 80, 3);
  const auto daily = extract_factors(panel, 20, 2);
  const auto weekly = weekly_factor(daily);
  ASSERT_EQ(weekly.size(), daily.size() - 6);
  EXPECT_EQ(weekly.first_row, daily.first_row + 6);
  for (std::size_t i = 0; i < weekly.size(); ++i) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(2);
    for (std::size_t j = 0; j < 7; ++j) m += daily.factors[i + j];
    EXPECT_LT((weekly.factors[i] - m / 7.0).cwiseAbs().maxCoeff(), 1e-14);
  }
}
