// SPDX-License-Identifier: Apache-2.0
// Simulates the null quantile tables embedded in src/coint_tables.inc.
//
//   favf_critvals OUTPUT [--unit-root-reps N] [--johansen-reps N] [--seed S]
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <vector>

#include "favf/coint.hpp"
#include "favf/rng.hpp"

namespace {

using favf::Rng;
using favf::coint::Trend;

constexpr double kProbs[] = {0.01, 0.025, 0.05, 0.10, 0.20, 0.30, 0.50, 0.70, 0.80, 0.90, 0.95, 0.975, 0.99};
constexpr std::size_t kUnitRootSizes[] = {25, 50, 100, 250, 500, 1000, 2500};
constexpr std::size_t kJohansenSizes[] = {120, 250, 500, 1000};
constexpr int kMaxDimension = 12;

std::vector<double> quantiles(std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  std::vector<double> out;
  const double n = static_cast<double>(draws.size());
  for (double p : kProbs) {
    // Type-7 quantile (linear between order statistics).
    const double h = (n - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, draws.size() - 1);
    out.push_back(draws[lo] + (h - static_cast<double>(lo)) * (draws[hi] - draws[lo]));
  }
  return out;
}

void random_walk(Rng& rng, std::vector<double>& y) {
  double level = 0.0;
  for (auto& v : y) {
    level += rng.normal();
    v = level;
  }
}

std::string row(const std::vector<double>& q) {
  std::string s = "{";
  char buf[32];
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.4f", i ? ", " : "", q[i]);
    s += buf;
  }
  return s + "}";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate null quantile tables for ADF, Engle-Granger and Johansen trace tests"};
  std::string output;
  std::size_t unit_root_reps = 40000;
  std::size_t johansen_reps = 4000;
  std::uint64_t seed = 20240601;
  app.add_option("output", output, "Destination .inc file")->required();
  app.add_option("--unit-root-reps", unit_root_reps, "Replications per ADF/EG sample size");
  app.add_option("--johansen-reps", johansen_reps, "Replications per Johansen cell");
  app.add_option("--seed", seed, "Base seed");
  CLI11_PARSE(app, argc, argv);

  std::string adf_none, adf_const, eg;
  for (std::size_t T : kUnitRootSizes) {
    Rng rng(seed ^ (T * 0x9E3779B97F4A7C15ULL));
    std::vector<double> a(T), b(T);
    std::vector<double> s_none, s_const, s_eg;
    for (std::size_t r = 0; r < unit_root_reps; ++r) {
      random_walk(rng, a);
      random_walk(rng, b);
      s_none.push_back(favf::coint::df_statistic(a, 0, Trend::none));
      s_const.push_back(favf::coint::df_statistic(a, 0, Trend::constant));
      // Residuals of a on (1, b).
      double mb = 0.0, ma = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        ma += a[t];
        mb += b[t];
      }
      ma /= static_cast<double>(T);
      mb /= static_cast<double>(T);
      double sab = 0.0, sbb = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        sab += (a[t] - ma) * (b[t] - mb);
        sbb += (b[t] - mb) * (b[t] - mb);
      }
      const double beta = sab / sbb;
      std::vector<double> e(T);
      for (std::size_t t = 0; t < T; ++t) e[t] = (a[t] - ma) - beta * (b[t] - mb);
      s_eg.push_back(favf::coint::df_statistic(e, 0, Trend::none));
    }
    adf_none += "    " + row(quantiles(s_none)) + ",\n";
    adf_const += "    " + row(quantiles(s_const)) + ",\n";
    eg += "    " + row(quantiles(s_eg)) + ",\n";
    std::cerr << "unit root T=" << T << " done\n";
  }

  std::string joh;
  for (int d = 1; d <= kMaxDimension; ++d) {
    joh += "    {\n";
    for (std::size_t T : kJohansenSizes) {
      Rng rng(seed ^ (T * 0xD1B54A32D192ED03ULL) ^ (static_cast<std::uint64_t>(d) << 48));
      Eigen::MatrixXd Y(static_cast<Eigen::Index>(T), d);
      std::vector<double> stats;
      for (std::size_t r = 0; r < johansen_reps; ++r) {
        for (int j = 0; j < d; ++j) {
          double level = 0.0;
          for (Eigen::Index t = 0; t < Y.rows(); ++t) {
            level += rng.normal();
            Y(t, j) = level;
          }
        }
        stats.push_back(favf::coint::johansen_statistics(Y, 1).front());
      }
      joh += "        " + row(quantiles(stats)) + ",\n";
      std::cerr << "johansen d=" << d << " T=" << T << " done\n";
    }
    joh += "    },\n";
  }

  std::ofstream out(output);
  if (!out) {
    std::cerr << "cannot write " << output << '\n';
    return 1;
  }
  out << "// Generated by favf_critvals (seed " << seed << ", " << unit_root_reps << " unit-root and "
      << johansen_reps << " Johansen replications per cell). Do not edit.\n";
  out << "constexpr double kProbabilities[13] = " << row(std::vector<double>(std::begin(kProbs), std::end(kProbs)))
      << ";\n";
  out << "constexpr std::size_t kUnitRootSizes[7] = {25, 50, 100, 250, 500, 1000, 2500};\n";
  out << "constexpr double kAdfNone[7][13] = {\n" << adf_none << "};\n";
  out << "constexpr double kAdfConstant[7][13] = {\n" << adf_const << "};\n";
  out << "constexpr double kEngleGranger[7][13] = {\n" << eg << "};\n";
  out << "constexpr std::size_t kJohansenSizes[4] = {120, 250, 500, 1000};\n";
  out << "constexpr double kJohansen[12][4][13] = {\n" << joh << "};\n";
  return 0;
}
