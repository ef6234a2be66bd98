// SPDX-License-Identifier: Apache-2.0
// Null quantiles for the unit-root and cointegration tests.
//
// The numbers in coint_tables.inc are simulated by tools/favf_critvals.cpp
// with the library's own test statistics, so the finite-sample regression
// layout (lags, deterministic terms, sample trimming) matches exactly.
//   ADF:  driftless Gaussian random walks, Dickey-Fuller regression without
//         lagged differences.
//   EG:   two independent random walks, residuals of the levels regression
//         with intercept, no-constant Dickey-Fuller regression.
//   Johansen: `dimension` independent random walks, VECM with restricted
//         constant and one lagged difference, trace statistic for rank 0.
// Regenerate with `favf_critvals src/coint_tables.inc`.
#include "favf/coint.hpp"
#include "favf/error.hpp"

namespace favf::coint {

namespace {
#include "coint_tables.inc"
}  // namespace

std::span<const double> table_probabilities() { return kProbabilities; }

const QuantileTable& adf_table(Trend trend) {
  static const QuantileTable none(kProbabilities, kUnitRootSizes,
                                  std::span<const double>(&kAdfNone[0][0], std::size(kAdfNone) * std::size(kProbabilities)));
  static const QuantileTable constant(
      kProbabilities, kUnitRootSizes,
      std::span<const double>(&kAdfConstant[0][0], std::size(kAdfConstant) * std::size(kProbabilities)));
  return trend == Trend::none ? none : constant;
}

const QuantileTable& engle_granger_table() {
  static const QuantileTable table(
      kProbabilities, kUnitRootSizes,
      std::span<const double>(&kEngleGranger[0][0], std::size(kEngleGranger) * std::size(kProbabilities)));
  return table;
}

const QuantileTable& johansen_table(int dimension) {
  static const auto tables = [] {
    std::vector<QuantileTable> out;
    for (const auto& block : kJohansen) {
      out.emplace_back(kProbabilities, kJohansenSizes,
                       std::span<const double>(&block[0][0], std::size(kJohansenSizes) * std::size(kProbabilities)));
    }
    return out;
  }();
  if (dimension < 1 || dimension > static_cast<int>(tables.size())) {
    throw Error("no trace-test table for dimension " + std::to_string(dimension));
  }
  return tables[static_cast<std::size_t>(dimension - 1)];
}

}  // namespace favf::coint
