// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "favf/date.hpp"
#include "favf/ingest.hpp"

namespace favf::synth {

/// Generator parameters. All randomness flows from `seed`.
struct SynthSpec {
  std::uint64_t seed = 1;
  std::size_t T = 500;
  std::size_t p = 5;
  int k_true = 1;
  /// AR(1) coefficient of each latent factor around its mean.
  double factor_persistence = 0.9;
  double factor_mean = 1.0;
  double factor_innovation = 0.1;
  /// Per-step standard deviation of loading increments (0 = static loadings).
  double loading_drift = 0.0;
  double noise_scale = 0.0;
  Date start_date = parse_date("2018-01-01");

  /// Price-pair parameters.
  double mean_reversion = 0.5;  // spread_t = (1 - speed) * spread_{t-1} + shock
  double spread_vol = 0.02;
  double random_walk_vol = 0.03;
  double hedge_beta = 1.2;
  double intercept = 0.5;

  void validate() const;
};

/// Values below this are lifted to it so panels stay strictly positive.
inline constexpr double kPositivityFloor = 1e-6;

struct FactorPanel {
  ingest::VolPanel panel;
  Eigen::MatrixXd factors;                // T x k_true
  std::vector<Eigen::MatrixXd> loadings;  // per date, p x k_true
  Eigen::MatrixXd signal;                 // T x p, Lambda_t f_t before noise
};

/// y_t = Lambda_t f_t + eps_t passed through v -> max(|v|, floor).
FactorPanel gen_factor_panel(const SynthSpec& spec);

/// Dynamics for the forecastable-RV generator:
///   target_{t+1} = a + b * target_t + c * g_t + sigma_e * e_{t+1}
///   g_t = mu_g + phi (g_{t-1} - mu_g) + sigma_g * u_t
///   other_{j,t} = lambda_j * g_t + sigma_x * x_{j,t}
/// so the cross-section at t reveals g_t.
struct ForecastableSpec {
  std::uint64_t seed = 1;
  std::size_t T = 600;
  std::size_t p = 5;
  double a = 0.2;
  double b = 0.4;
  double c = 0.5;
  double noise = 0.1;
  double factor_mean = 2.0;
  double factor_persistence = 0.5;
  double factor_innovation = 0.5;
  double cross_noise = 0.05;
  std::size_t burn = 200;
  Date start_date = parse_date("2018-01-01");
};

struct ForecastablePanel {
  /// Column 0 is the forecast target; the rest load on the common factor.
  ingest::VolPanel panel;
  std::vector<double> factor;
  /// Population R^2 of the one-step conditional mean a + b*RV_t + c*g_t.
  double true_r2 = 0.0;
};

ForecastablePanel gen_forecastable_rv(const ForecastableSpec& spec);

/// Closed-form stationary R^2 for the forecastable dynamics.
double forecastable_true_r2(const ForecastableSpec& spec);

struct PricePair {
  std::vector<Date> dates;
  std::vector<double> log_a;
  std::vector<double> log_b;
  std::vector<double> spread;
  double beta = 0.0;
  double intercept = 0.0;
};

/// log_b is a random walk; log_a = intercept + beta * log_b + spread where the
/// spread is AR(1) with coefficient 1 - mean_reversion.
PricePair gen_cointegrated_pair(const SynthSpec& spec);

struct CointegratedSystem {
  Eigen::MatrixXd log_prices;  // T x p
  int rank = 0;
  Eigen::MatrixXd beta;        // p x rank, true cointegrating vectors
};

/// p-asset system of cointegration rank r: the last p - r series are
/// independent random walks, each of the first r series is a fixed mix of
/// them plus its own stationary AR(1) deviation.
CointegratedSystem gen_cointegrated_system(std::uint64_t seed, std::size_t T, std::size_t p, int rank,
                                           double ar = 0.5, double shock = 0.02, double walk = 0.03);

/// Consecutive calendar dates starting at `start`.
std::vector<Date> calendar_dates(Date start, std::size_t n);

}  // namespace favf::synth
