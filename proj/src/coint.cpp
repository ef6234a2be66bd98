// SPDX-License-Identifier: Apache-2.0
#include "favf/coint.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "favf/csv.hpp"
#include "favf/error.hpp"

namespace favf::coint {

namespace {

struct LsFit {
  Eigen::VectorXd coef;
  double ssr = 0.0;
  Eigen::VectorXd se;
};

LsFit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto n = X.rows();
  const auto k = X.cols();
  if (n <= k) throw Error("regression has no residual degrees of freedom");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const double rmax = R.diagonal().cwiseAbs().maxCoeff();
  if (!(R.diagonal().cwiseAbs().minCoeff() > 1e-12 * rmax)) throw Error("singular regression design");
  LsFit f;
  f.coef = qr.solve(y);
  f.ssr = (y - X * f.coef).squaredNorm();
  const double s2 = f.ssr / static_cast<double>(n - k);
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  f.se = (Rinv.rowwise().squaredNorm() * s2).cwiseSqrt();
  return f;
}

// Rows t = first..T-1 of the ADF regression with `lag` lagged differences.
void adf_design(std::span<const double> y, int lag, Trend trend, std::size_t first, Eigen::MatrixXd& X,
                Eigen::VectorXd& dy) {
  const std::size_t T = y.size();
  const auto n = static_cast<Eigen::Index>(T - first);
  const int det = trend == Trend::constant ? 1 : 0;
  X.resize(n, det + 1 + lag);
  dy.resize(n);
  for (std::size_t t = first; t < T; ++t) {
    const auto r = static_cast<Eigen::Index>(t - first);
    dy(r) = y[t] - y[t - 1];
    if (det) X(r, 0) = 1.0;
    X(r, det) = y[t - 1];
    for (int j = 1; j <= lag; ++j) X(r, det + j) = y[t - j] - y[t - j - 1];
  }
}

void require_nonconstant(std::span<const double> y) {
  for (double v : y) {
    if (!std::isfinite(v)) throw Error("non-finite value in series");
  }
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) throw Error("constant series");
}

CriticalValues left_tail(const QuantileTable& t, std::size_t T) {
  return {t.quantile(T, 0.01), t.quantile(T, 0.05), t.quantile(T, 0.10)};
}

CriticalValues right_tail(const QuantileTable& t, std::size_t T) {
  return {t.quantile(T, 0.99), t.quantile(T, 0.95), t.quantile(T, 0.90)};
}

double clamp_p(double p) { return std::clamp(p, 0.01, 0.99); }

AdfResult adf_with_table(std::span<const double> y, std::optional<int> max_lag, Trend trend,
                         const QuantileTable& table) {
  if (y.size() < 30) throw Error("ADF needs at least 30 observations, got " + std::to_string(y.size()));
  require_nonconstant(y);
  const std::size_t T = y.size();
  int L = max_lag ? *max_lag : default_max_lag(T);
  if (L < 0) throw ConfigError("max_lag must be >= 0");
  const int det = trend == Trend::constant ? 1 : 0;
  // Keep at least ten residual degrees of freedom on the common sample.
  while (L > 0 && static_cast<long>(T) - 1 - L - (det + 1 + L) < 10) --L;

  Eigen::MatrixXd X;
  Eigen::VectorXd dy;
  adf_design(y, L, trend, static_cast<std::size_t>(L) + 1, X, dy);
  const double n = static_cast<double>(X.rows());
  int best_lag = 0;
  double best_aic = 0.0;
  for (int lag = 0; lag <= L; ++lag) {
    const auto f = least_squares(X.leftCols(det + 1 + lag), dy);
    if (!(f.ssr > 0.0)) throw Error("degenerate ADF regression");
    const double aic = n * std::log(f.ssr / n) + 2.0 * (det + 1 + lag);
    if (lag == 0 || aic < best_aic) {
      best_aic = aic;
      best_lag = lag;
    }
  }

  adf_design(y, best_lag, trend, static_cast<std::size_t>(best_lag) + 1, X, dy);
  const auto f = least_squares(X, dy);
  if (!(f.ssr > 0.0)) throw Error("degenerate ADF regression");
  AdfResult r;
  r.lag = best_lag;
  r.nobs = static_cast<std::size_t>(X.rows());
  r.gamma = f.coef(det);
  r.statistic = f.coef(det) / f.se(det);
  r.critical = left_tail(table, T);
  r.p_value = clamp_p(table.cdf(T, r.statistic));
  r.reject_5 = r.statistic < r.critical.five;
  return r;
}

EgDirection eg_direction(std::span<const double> dep, std::span<const double> reg, std::string dep_name,
                         std::string reg_name, std::optional<int> max_lag) {
  const auto n = static_cast<Eigen::Index>(dep.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = reg[static_cast<std::size_t>(i)];
    yv(i) = dep[static_cast<std::size_t>(i)];
  }
  const auto f = least_squares(X, yv);
  const Eigen::VectorXd resid = yv - X * f.coef;
  EgDirection d;
  d.dependent = std::move(dep_name);
  d.regressor = std::move(reg_name);
  d.intercept = f.coef(0);
  d.beta = f.coef(1);
  d.adf = adf_with_table(std::span<const double>(resid.data(), dep.size()), max_lag, Trend::none,
                         engle_granger_table());
  return d;
}

struct Moments {
  Eigen::MatrixXd S00, S01, S11;
  std::size_t n = 0;
};

Moments johansen_moments(const Eigen::MatrixXd& Y, int lag) {
  const auto T = Y.rows();
  const auto p = Y.cols();
  if (p < 1 || p > 12) throw Error("johansen: need 1 to 12 series, got " + std::to_string(p));
  if (T < 10 * p) throw Error("johansen: need at least 10 observations per series");
  if (lag < 0) throw ConfigError("johansen: lag must be >= 0");
  if (!Y.allFinite()) throw Error("johansen: non-finite value in input");
  const Eigen::Index first = lag + 1;
  const Eigen::Index n = T - first;
  Eigen::MatrixXd Z0(n, p), Z1(n, p + 1), Z2(n, p * lag);
  for (Eigen::Index t = first; t < T; ++t) {
    const auto r = t - first;
    Z0.row(r) = Y.row(t) - Y.row(t - 1);
    Z1.row(r).head(p) = Y.row(t - 1);
    Z1(r, p) = 1.0;
    for (int j = 1; j <= lag; ++j) Z2.row(r).segment((j - 1) * p, p) = Y.row(t - j) - Y.row(t - j - 1);
  }
  if (lag > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z2);
    if (qr.rank() < Z2.cols()) throw Error("johansen: singular moment matrix (lagged differences)");
    Z0 -= Z2 * qr.solve(Z0);
    Z1 -= Z2 * qr.solve(Z1);
  }
  Moments m;
  m.n = static_cast<std::size_t>(n);
  const double inv = 1.0 / static_cast<double>(n);
  m.S00 = Z0.transpose() * Z0 * inv;
  m.S01 = Z0.transpose() * Z1 * inv;
  m.S11 = Z1.transpose() * Z1 * inv;
  return m;
}

// Generalized eigenproblem S10 S00^-1 S01 v = lambda S11 v; values descending.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> johansen_eigen(const Moments& m) {
  const auto check_pd = [](const Eigen::MatrixXd& S, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().maxCoeff();
    if (!(es.eigenvalues().minCoeff() > 1e-12 * hi)) throw Error(std::string("johansen: singular moment matrix ") + what);
  };
  check_pd(m.S00, "S00");
  check_pd(m.S11, "S11");
  const Eigen::LLT<Eigen::MatrixXd> s00(m.S00);
  Eigen::MatrixXd A = m.S01.transpose() * s00.solve(m.S01);
  A = 0.5 * (A + A.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, m.S11);
  if (ges.info() != Eigen::Success) throw Error("johansen: eigensolver failed");
  const auto k = A.rows();
  Eigen::VectorXd values(k);
  Eigen::MatrixXd vectors(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    values(i) = std::clamp(ges.eigenvalues()(k - 1 - i), 0.0, 1.0 - 1e-15);
    vectors.col(i) = ges.eigenvectors().col(k - 1 - i);
  }
  return {values, vectors};
}

std::vector<double> trace_from(const Eigen::VectorXd& values, std::size_t p, std::size_t n) {
  std::vector<double> trace(p, 0.0);
  double acc = 0.0;
  for (std::size_t i = p; i-- > 0;) {
    acc += -static_cast<double>(n) * std::log(1.0 - values(static_cast<Eigen::Index>(i)));
    trace[i] = acc;
  }
  return trace;
}

nlohmann::json cv_json(const CriticalValues& c) { return {{"1%", c.one}, {"5%", c.five}, {"10%", c.ten}}; }

}  // namespace

QuantileTable::QuantileTable(std::span<const double> probabilities, std::span<const std::size_t> sizes,
                             std::span<const double> quantiles)
    : probs_(probabilities), sizes_(sizes), quantiles_(quantiles) {
  if (probs_.empty() || sizes_.empty() || quantiles_.size() != probs_.size() * sizes_.size()) {
    throw Error("malformed quantile table");
  }
}

std::vector<double> QuantileTable::at(std::size_t T) const {
  const std::size_t m = probs_.size();
  const auto row = [&](std::size_t i) { return quantiles_.subspan(i * m, m); };
  std::vector<double> out(m);
  if (T <= sizes_.front() || sizes_.size() == 1) {
    std::copy_n(row(0).begin(), m, out.begin());
    return out;
  }
  if (T >= sizes_.back()) {
    std::copy_n(row(sizes_.size() - 1).begin(), m, out.begin());
    return out;
  }
  std::size_t i = 1;
  while (sizes_[i] < T) ++i;
  const double w = static_cast<double>(T - sizes_[i - 1]) / static_cast<double>(sizes_[i] - sizes_[i - 1]);
  for (std::size_t j = 0; j < m; ++j) out[j] = (1.0 - w) * row(i - 1)[j] + w * row(i)[j];
  return out;
}

double QuantileTable::quantile(std::size_t T, double probability) const {
  const auto q = at(T);
  if (probability <= probs_.front()) return q.front();
  if (probability >= probs_.back()) return q.back();
  std::size_t j = 1;
  while (probs_[j] < probability) ++j;
  const double w = (probability - probs_[j - 1]) / (probs_[j] - probs_[j - 1]);
  return (1.0 - w) * q[j - 1] + w * q[j];
}

double QuantileTable::cdf(std::size_t T, double x) const {
  const auto q = at(T);
  if (x <= q.front()) return probs_.front();
  if (x >= q.back()) return probs_.back();
  std::size_t j = 1;
  while (q[j] < x) ++j;
  const double gap = q[j] - q[j - 1];
  const double w = gap > 0.0 ? (x - q[j - 1]) / gap : 1.0;
  return (1.0 - w) * probs_[j - 1] + w * probs_[j];
}

int default_max_lag(std::size_t T) {
  return static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(T) / 100.0, 0.25)));
}

double df_statistic(std::span<const double> y, int lag, Trend trend) {
  if (lag < 0) throw ConfigError("lag must be >= 0");
  if (y.size() < static_cast<std::size_t>(lag) + 4) throw Error("series too short for the requested lag");
  Eigen::MatrixXd X;
  Eigen::VectorXd dy;
  adf_design(y, lag, trend, static_cast<std::size_t>(lag) + 1, X, dy);
  const auto f = least_squares(X, dy);
  const int det = trend == Trend::constant ? 1 : 0;
  return f.coef(det) / f.se(det);
}

AdfResult adf_test(std::span<const double> y, std::optional<int> max_lag, Trend trend) {
  return adf_with_table(y, max_lag, trend, adf_table(trend));
}

EngleGrangerReport engle_granger(std::span<const double> x, std::span<const double> y, std::string x_name,
                                 std::string y_name, std::optional<int> max_lag) {
  if (x.size() != y.size()) throw Error("engle_granger: series differ in length");
  if (x.size() < 60) throw Error("engle_granger: need at least 60 observations, got " + std::to_string(x.size()));
  require_nonconstant(x);
  require_nonconstant(y);
  EngleGrangerReport r;
  r.x_on_y = eg_direction(x, y, x_name, y_name, max_lag);
  r.y_on_x = eg_direction(y, x, y_name, x_name, max_lag);
  r.reject_5 = r.x_on_y.adf.reject_5;
  return r;
}

std::vector<double> johansen_statistics(const Eigen::MatrixXd& log_prices, int lag) {
  const auto m = johansen_moments(log_prices, lag);
  const auto [values, vectors] = johansen_eigen(m);
  return trace_from(values, static_cast<std::size_t>(log_prices.cols()), m.n);
}

JohansenResult johansen_trace(const Eigen::MatrixXd& log_prices, int lag, std::vector<std::string> assets) {
  const auto p = static_cast<std::size_t>(log_prices.cols());
  if (assets.empty()) {
    for (std::size_t i = 0; i < p; ++i) assets.push_back("y" + std::to_string(i + 1));
  }
  if (assets.size() != p) throw Error("johansen: asset names do not match columns");
  const auto m = johansen_moments(log_prices, lag);
  const auto [values, vectors] = johansen_eigen(m);
  JohansenResult r;
  r.assets = std::move(assets);
  r.nobs = m.n;
  r.lag = lag;
  r.trace = trace_from(values, p, m.n);
  const auto T = static_cast<std::size_t>(log_prices.rows());
  r.rank = static_cast<int>(p);
  for (std::size_t i = 0; i < p; ++i) {
    r.eigenvalues.push_back(values(static_cast<Eigen::Index>(i)));
    const auto& table = johansen_table(static_cast<int>(p - i));
    r.critical.push_back(right_tail(table, T));
    r.p_values.push_back(clamp_p(1.0 - table.cdf(T, r.trace[i])));
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (r.trace[i] < r.critical[i].five) {
      r.rank = static_cast<int>(i);
      break;
    }
  }
  r.vectors = vectors.leftCols(static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < r.vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    r.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (r.vectors(arg, j) < 0.0) r.vectors.col(j) *= -1.0;
  }
  return r;
}

nlohmann::json to_json(const AdfResult& r) {
  return {{"method", "adf"},
          {"statistic", r.statistic},
          {"lag", r.lag},
          {"nobs", r.nobs},
          {"critical_values", cv_json(r.critical)},
          {"p_value", r.p_value},
          {"p_value_method", "interpolated from simulated null quantiles"},
          {"reject_5pct", r.reject_5}};
}

nlohmann::json to_json(const EngleGrangerReport& r) {
  const auto dir = [](const EgDirection& d) {
    auto j = to_json(d.adf);
    j["method"] = "engle_granger";
    j["dependent"] = d.dependent;
    j["regressor"] = d.regressor;
    j["intercept"] = d.intercept;
    j["beta"] = d.beta;
    return j;
  };
  return {{"method", "engle_granger"}, {"x_on_y", dir(r.x_on_y)}, {"y_on_x", dir(r.y_on_x)},
          {"reject_5pct", r.reject_5}};
}

nlohmann::json to_json(const JohansenResult& r) {
  nlohmann::json ranks = nlohmann::json::array();
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    ranks.push_back({{"rank_le", i},
                     {"eigenvalue", r.eigenvalues[i]},
                     {"trace", r.trace[i]},
                     {"critical_values", cv_json(r.critical[i])},
                     {"p_value", r.p_values[i]},
                     {"reject_5pct", r.trace[i] >= r.critical[i].five}});
  }
  nlohmann::json vecs = nlohmann::json::array();
  for (Eigen::Index j = 0; j < r.vectors.cols(); ++j) {
    nlohmann::json v;
    for (std::size_t i = 0; i < r.assets.size(); ++i) v[r.assets[i]] = r.vectors(static_cast<Eigen::Index>(i), j);
    v["const"] = r.vectors(r.vectors.rows() - 1, j);
    vecs.push_back(v);
  }
  return {{"method", "johansen"},
          {"deterministic", "restricted constant"},
          {"lag", r.lag},
          {"nobs", r.nobs},
          {"assets", r.assets},
          {"tests", ranks},
          {"rank", r.rank},
          {"p_value_method", "interpolated from simulated null quantiles"},
          {"cointegrating_vectors", vecs}};
}

void write_cev_table(std::ostream& out, const JohansenResult& r) {
  out << "vector";
  for (const auto& a : r.assets) out << ',' << a;
  out << ",const\n";
  const Eigen::Index rows = std::max<Eigen::Index>(1, r.rank);
  for (Eigen::Index j = 0; j < std::min(rows, r.vectors.cols()); ++j) {
    out << "CEV" << (j + 1);
    for (Eigen::Index i = 0; i < r.vectors.rows(); ++i) out << ',' << csv::format_double(r.vectors(i, j));
    out << '\n';
  }
}

}  // namespace favf::coint
