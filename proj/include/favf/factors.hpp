// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "favf/date.hpp"
#include "favf/ingest.hpp"

namespace favf::factors {

/// Symmetric real matrix. Construction validates symmetry.
class SymMatrix {
 public:
  explicit SymMatrix(Eigen::MatrixXd m);

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  Eigen::MatrixXd m_;
};

struct EigenDecomposition {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // column i pairs with values(i)
};

/// (1/n) * sum of y_s y_s' over the n rows ending at `t`. Uncentered.
SymMatrix rolling_second_moment(const ingest::VolPanel& panel, std::size_t n, std::size_t t);

/// Eigenvalues in descending order with orthonormal eigenvectors, each
/// flipped so that its largest-magnitude entry is positive (ties go to the
/// lowest index).
EigenDecomposition eigen_sym(const SymMatrix& m);

/// Applies the sign convention to every column in place.
void canonicalize_signs(Eigen::MatrixXd& vectors);

struct FactorPath {
  std::vector<Date> dates;
  /// Row of the source panel that `dates[0]` corresponds to (window - 1).
  std::size_t first_row = 0;
  std::size_t window = 0;
  int k = 0;
  std::vector<Eigen::MatrixXd> loadings;    // p x k, columns are sqrt(p) * eigenvectors
  std::vector<Eigen::VectorXd> factors;     // k
  std::vector<Eigen::VectorXd> eigenvalues; // p, descending

  std::size_t size() const { return dates.size(); }
  /// Factor j at the path index corresponding to panel row `row`.
  double factor_at_row(std::size_t row, int j) const { return factors[row - first_row](j); }
};

/// Rolling-window time-varying factor estimates. The entry for date t uses
/// only rows t-n+1..t of the panel.
FactorPath extract_factors(const ingest::VolPanel& panel, std::size_t n, int k);

/// Fitted common component Lambda_t f_t for each path date.
std::vector<Eigen::VectorXd> fitted_values(const FactorPath& path);

/// y_t - Lambda_t f_t for each path date.
std::vector<Eigen::VectorXd> reconstruct_residual(const ingest::VolPanel& panel, const FactorPath& path);

/// lambda_i / sum(lambda).
Eigen::VectorXd explained_variance(const Eigen::VectorXd& eigenvalues);

struct SelectionPolicy {
  enum class Mode { dominant, variance_threshold };
  Mode mode = Mode::dominant;
  double threshold = 0.9;

  static SelectionPolicy dominant() { return {}; }
  static SelectionPolicy variance_threshold(double t) { return {Mode::variance_threshold, t}; }
};

/// Equity and crypto cumulative-variance targets for multi-day horizons.
inline constexpr double kEquityVarianceTarget = 0.85;
inline constexpr double kCryptoVarianceTarget = 0.90;

int select_k(const Eigen::VectorXd& fractions, const SelectionPolicy& policy);

/// 7-observation trailing mean of each factor coordinate. Loadings and
/// eigenvalues are carried over from the window-end date.
FactorPath weekly_factor(const FactorPath& daily, int span = 7);

/// Mean explained-variance fractions over path entries whose panel row is
/// at most `last_row`. Used to fix a factor count without look-ahead.
Eigen::VectorXd mean_explained_variance(const FactorPath& path, std::size_t last_row);

}  // namespace favf::factors
