// SPDX-License-Identifier: Apache-2.0
#include "favf/factors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "favf/error.hpp"

namespace favf::factors {

SymMatrix::SymMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw Error("matrix is not square");
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw Error("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
}

SymMatrix rolling_second_moment(const ingest::VolPanel& panel, std::size_t n, std::size_t t) {
  if (n < 1) throw Error("window length must be >= 1");
  if (t >= panel.rows()) throw Error("row index out of range");
  if (t + 1 < n) throw Error("window not yet full");
  const auto rows = panel.values.middleRows(static_cast<Eigen::Index>(t + 1 - n), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd m = rows.transpose() * rows / static_cast<double>(n);
  // Exact symmetry; the product is symmetric up to rounding only.
  m = 0.5 * (m + m.transpose()).eval();
  return SymMatrix(std::move(m));
}

void canonicalize_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      // Relative tie tolerance so rounding noise cannot flip the choice.
      if (a > best_abs * (1.0 + 1e-12) + 1e-300) {
        best_abs = a;
        best = r;
      }
    }
    if (vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

EigenDecomposition eigen_sym(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.matrix());
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed to converge");
  const Eigen::Index p = m.dim();
  EigenDecomposition out;
  out.values.resize(p);
  out.vectors.resize(p, p);
  // Eigen returns ascending order.
  for (Eigen::Index i = 0; i < p; ++i) {
    out.values(i) = solver.eigenvalues()(p - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(p - 1 - i);
  }
  canonicalize_signs(out.vectors);
  return out;
}

FactorPath extract_factors(const ingest::VolPanel& panel, std::size_t n, int k) {
  const auto p = static_cast<int>(panel.cols());
  if (k < 1 || k > p) throw Error("factor count k=" + std::to_string(k) + " must be in [1, p=" + std::to_string(p) + "]");
  if (n < 1) throw Error("window length must be >= 1");
  if (panel.rows() < n) throw Error("panel has fewer rows than the factor window");

  FactorPath path;
  path.first_row = n - 1;
  path.window = n;
  path.k = k;
  const double sqrt_p = std::sqrt(static_cast<double>(p));
  const std::size_t count = panel.rows() - n + 1;
  path.dates.reserve(count);
  path.loadings.reserve(count);
  path.factors.reserve(count);
  path.eigenvalues.reserve(count);
  for (std::size_t t = n - 1; t < panel.rows(); ++t) {
    const auto decomp = eigen_sym(rolling_second_moment(panel, n, t));
    Eigen::MatrixXd lambda = sqrt_p * decomp.vectors.leftCols(k);
    const Eigen::VectorXd y = panel.values.row(static_cast<Eigen::Index>(t)).transpose();
    Eigen::VectorXd f = lambda.transpose() * y / static_cast<double>(p);
    path.dates.push_back(panel.dates[t]);
    path.loadings.push_back(std::move(lambda));
    path.factors.push_back(std::move(f));
    path.eigenvalues.push_back(decomp.values);
  }
  return path;
}

std::vector<Eigen::VectorXd> fitted_values(const FactorPath& path) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) out.push_back(path.loadings[i] * path.factors[i]);
  return out;
}

std::vector<Eigen::VectorXd> reconstruct_residual(const ingest::VolPanel& panel, const FactorPath& path) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Eigen::VectorXd y = panel.values.row(static_cast<Eigen::Index>(path.first_row + i)).transpose();
    out.push_back(y - path.loadings[i] * path.factors[i]);
  }
  return out;
}

Eigen::VectorXd explained_variance(const Eigen::VectorXd& eigenvalues) {
  if (eigenvalues.size() == 0) throw Error("degenerate spectrum");
  // Round-off can leave tiny negatives on PSD inputs; clamp those.
  const double tol = 1e-10 * std::max(1.0, eigenvalues.cwiseAbs().sum());
  Eigen::VectorXd v = eigenvalues;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) < -tol) throw Error("negative eigenvalue in explained_variance");
    v(i) = std::max(v(i), 0.0);
  }
  const double total = v.sum();
  if (!(total > 0.0)) throw Error("degenerate spectrum");
  return v / total;
}

int select_k(const Eigen::VectorXd& fractions, const SelectionPolicy& policy) {
  if (fractions.size() == 0) throw Error("select_k: empty spectrum");
  if (policy.mode == SelectionPolicy::Mode::dominant) return 1;
  if (!(policy.threshold > 0.0 && policy.threshold <= 1.0)) {
    throw Error("variance threshold must lie in (0, 1]");
  }
  double cum = 0.0;
  for (Eigen::Index i = 0; i < fractions.size(); ++i) {
    cum += fractions(i);
    // Rounding slack so a threshold of exactly 1.0 is reachable.
    if (cum >= policy.threshold - 1e-12) return static_cast<int>(i + 1);
  }
  return static_cast<int>(fractions.size());
}

FactorPath weekly_factor(const FactorPath& daily, int span) {
  if (span < 1) throw Error("weekly_factor: span must be >= 1");
  const auto s = static_cast<std::size_t>(span);
  if (daily.size() < s) throw Error("weekly_factor: need at least " + std::to_string(span) + " dates");
  FactorPath out;
  out.first_row = daily.first_row + s - 1;
  out.window = daily.window;
  out.k = daily.k;
  for (std::size_t i = s - 1; i < daily.size(); ++i) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(daily.k);
    for (std::size_t j = 0; j < s; ++j) sum += daily.factors[i - j];
    out.dates.push_back(daily.dates[i]);
    out.factors.push_back(sum / static_cast<double>(span));
    out.loadings.push_back(daily.loadings[i]);
    out.eigenvalues.push_back(daily.eigenvalues[i]);
  }
  return out;
}

Eigen::VectorXd mean_explained_variance(const FactorPath& path, std::size_t last_row) {
  if (path.size() == 0 || last_row < path.first_row) throw Error("no factor dates before the requested row");
  const std::size_t count = std::min(path.size(), last_row - path.first_row + 1);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(path.eigenvalues.front().size());
  for (std::size_t i = 0; i < count; ++i) acc += explained_variance(path.eigenvalues[i]);
  return acc / static_cast<double>(count);
}

}  // namespace favf::factors
