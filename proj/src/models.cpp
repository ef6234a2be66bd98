// SPDX-License-Identifier: Apache-2.0
#include "favf/models.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include "favf/csv.hpp"
#include "favf/error.hpp"

namespace favf::models {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_factor_alignment(const ingest::VolSeries& rv, const factors::FactorPath& path) {
  if (path.first_row + path.size() > rv.size()) throw Error("factor path extends beyond the volatility series");
  if (path.size() > 0 && path.dates.front() != rv.dates[path.first_row]) {
    throw Error("factor path dates are not aligned with the volatility series");
  }
}

void check_aggregate_alignment(const ingest::VolSeries& rv, const ingest::VolSeries& agg) {
  const auto offset = static_cast<std::size_t>(agg.horizon - 1);
  if (agg.horizon < 1 || agg.size() + offset != rv.size()) {
    throw Error("misaligned series lengths: aggregate '" + std::to_string(agg.horizon) + "' has " +
                std::to_string(agg.size()) + " points for a " + std::to_string(rv.size()) + "-point series");
  }
  if (agg.size() > 0 && (agg.dates.front() != rv.dates[offset] || agg.dates.back() != rv.dates.back())) {
    throw Error("misaligned series dates for aggregate horizon " + std::to_string(agg.horizon));
  }
}

// Column-pivoted QR solve on an already column-scaled design.
OlsFit solve_ols(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                 std::span<const std::string> names) {
  const Eigen::Index n = X.rows();
  const Eigen::Index w = X.cols();
  if (n < w) throw Error("ols: fewer rows (" + std::to_string(n) + ") than columns (" + std::to_string(w) + ")");
  Eigen::VectorXd scale(w);
  for (Eigen::Index j = 0; j < w; ++j) {
    const double norm = X.col(j).norm();
    scale(j) = norm > 0.0 ? norm : 1.0;
  }
  const Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
  const auto& R = qr.matrixR();
  const double top = std::abs(R(0, 0));
  std::vector<Eigen::Index> offending;
  for (Eigen::Index i = 0; i < w; ++i) {
    if (!(std::abs(R(i, i)) * kMaxConditionNumber > top)) offending.push_back(qr.colsPermutation().indices()(i));
  }
  if (!offending.empty() || top == 0.0) {
    std::string msg = "collinear design: columns [";
    for (std::size_t i = 0; i < offending.size(); ++i) {
      if (i) msg += ", ";
      const auto c = static_cast<std::size_t>(offending[i]);
      msg += c < names.size() ? names[c] : std::to_string(c);
    }
    throw Error(msg + "]");
  }
  OlsFit fit;
  fit.coef = scale.cwiseInverse().asDiagonal() * qr.solve(y);
  fit.in_sample_mse = (y - X * fit.coef).squaredNorm() / static_cast<double>(n);
  return fit;
}

std::vector<std::string> factor_names(const std::string& prefix, int S) {
  std::vector<std::string> out;
  for (int j = 1; j <= S; ++j) out.push_back(prefix + std::to_string(j));
  return out;
}

// Precomputed MIDAS regressor columns, one per grid point, over origins
// first..T-1 of a single series.
class MidasEngine {
 public:
  MidasEngine(std::span<const double> rv, const factors::FactorPath* path, int S, const MidasSpec& spec, int h,
              std::size_t first_origin)
      : spec_(spec), h_(h), S_(S), target_(horizon_target(rv, h)) {
    spec.validate();
    const auto k = static_cast<std::size_t>(spec.k_lags);
    first_ = std::max(first_origin, k - 1);
    if (S > 0) {
      if (!path || S > path->k) throw Error("MIDAS: requested factors exceed available factors");
      first_ = std::max(first_, path->first_row + k - 1);
    }
    if (rv.size() <= first_) throw Error("MIDAS: insufficient history for " + std::to_string(k) + " lags");
    const std::size_t n = rv.size() - first_;

    for (double th : spec.theta2_grid) {
      const auto w = midas_weights(spec.theta1, th, spec.k_lags);
      Eigen::VectorXd col(static_cast<Eigen::Index>(n));
      for (std::size_t r = 0; r < n; ++r) col(static_cast<Eigen::Index>(r)) = weighted_lags(rv, first_ + r, w);
      rv_cols_.push_back(std::move(col));
    }
    if (S > 0) {
      std::vector<std::vector<double>> fac(static_cast<std::size_t>(S), std::vector<double>(rv.size(), kNaN));
      for (std::size_t i = 0; i < path->size(); ++i)
        for (int j = 0; j < S; ++j) fac[static_cast<std::size_t>(j)][path->first_row + i] = path->factors[i](j);
      for (double th : spec.factor_theta2_grid) {
        const auto w = midas_weights(spec.theta1, th, spec.k_lags);
        Eigen::MatrixXd cols(static_cast<Eigen::Index>(n), S);
        for (int j = 0; j < S; ++j)
          for (std::size_t r = 0; r < n; ++r)
            cols(static_cast<Eigen::Index>(r), j) = weighted_lags(fac[static_cast<std::size_t>(j)], first_ + r, w);
        factor_cols_.push_back(std::move(cols));
      }
    }
  }

  std::size_t first() const { return first_; }

  MidasForecast forecast(std::size_t origin) const {
    if (origin < first_ || origin - first_ >= static_cast<std::size_t>(rv_cols_.front().size())) {
      throw Error("MIDAS: origin outside the usable range");
    }
    if (origin < first_ + static_cast<std::size_t>(h_)) throw Error("MIDAS: insufficient history before origin");
    const std::size_t m = origin - static_cast<std::size_t>(h_) - first_ + 1;
    const Eigen::Index width = 2 + S_;
    if (m < static_cast<std::size_t>(width) + 1) throw Error("MIDAS: insufficient history before origin");
    const auto mi = static_cast<Eigen::Index>(m);
    Eigen::VectorXd y(mi);
    for (std::size_t r = 0; r < m; ++r) y(static_cast<Eigen::Index>(r)) = target_[first_ + r];

    static const std::vector<std::string> names = {"const", "rv_midas"};
    MidasForecast best;
    best.in_sample_mse = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd X(mi, width);
    X.col(0).setOnes();
    const std::size_t nf = S_ > 0 ? factor_cols_.size() : 1;
    for (std::size_t a = 0; a < rv_cols_.size(); ++a) {
      X.col(1) = rv_cols_[a].head(mi);
      for (std::size_t b = 0; b < nf; ++b) {
        if (S_ > 0) X.rightCols(S_) = factor_cols_[b].topRows(mi);
        const auto fit = solve_ols(X, y, names);
        if (fit.in_sample_mse < best.in_sample_mse) {
          best.in_sample_mse = fit.in_sample_mse;
          best.coef = fit.coef;
          best.theta2 = spec_.theta2_grid[a];
          best.factor_theta2 = S_ > 0 ? spec_.factor_theta2_grid[b] : 0.0;
          best.prediction = predict_row(origin, a, b, fit.coef);
        }
      }
    }
    return best;
  }

  double target(std::size_t origin) const { return target_[origin]; }

 private:
  double predict_row(std::size_t origin, std::size_t a, std::size_t b, const Eigen::VectorXd& coef) const {
    const auto r = static_cast<Eigen::Index>(origin - first_);
    double v = coef(0) + coef(1) * rv_cols_[a](r);
    for (int j = 0; j < S_; ++j) v += coef(2 + j) * factor_cols_[b](r, j);
    return v;
  }

  const MidasSpec& spec_;
  int h_;
  int S_;
  std::vector<double> target_;
  std::size_t first_ = 0;
  std::vector<Eigen::VectorXd> rv_cols_;
  std::vector<Eigen::MatrixXd> factor_cols_;
};

}  // namespace

std::optional<std::size_t> RegressionDesign::row_of(std::size_t origin) const {
  if (origins.empty() || origin < origins.front() || origin > origins.back()) return std::nullopt;
  const std::size_t r = origin - origins.front();
  return origins[r] == origin ? std::optional<std::size_t>(r) : std::nullopt;
}

OlsFit ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
               std::span<const std::string> names) {
  if (X.rows() != y.size()) throw Error("ols: design and target lengths differ");
  if (X.cols() == 0) throw Error("ols: empty design");
  return solve_ols(X, y, names);
}

OlsFit ols_fit(const RegressionDesign& design) { return ols_fit(design.X, design.y, design.names); }

std::vector<double> horizon_target(std::span<const double> rv, int h) {
  if (h < 1) throw Error("horizon must be >= 1");
  const auto hs = static_cast<std::size_t>(h);
  std::vector<double> out(rv.size(), kNaN);
  for (std::size_t t = 0; t + hs < rv.size(); ++t) {
    double s = 0.0;
    for (std::size_t j = 1; j <= hs; ++j) s += rv[t + j];
    out[t] = s / h;
  }
  return out;
}

std::vector<double> trailing_mean(std::span<const double> rv, int h) {
  if (h < 1) throw Error("window must be >= 1");
  const auto hs = static_cast<std::size_t>(h);
  std::vector<double> out(rv.size(), kNaN);
  for (std::size_t t = hs - 1; t < rv.size(); ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < hs; ++j) s += rv[t - j];
    out[t] = s / h;
  }
  return out;
}

RegressionDesign build_ar_design(const ingest::VolSeries& rv, const factors::FactorPath* path, int S, int h,
                                 std::size_t first_origin) {
  if (S < 0) throw Error("factor count must be non-negative");
  std::size_t first = std::max<std::size_t>(4, first_origin);
  if (S > 0) {
    if (!path || S > path->k) {
      throw Error("S=" + std::to_string(S) + " exceeds available factors (" + std::to_string(path ? path->k : 0) + ")");
    }
    check_factor_alignment(rv, *path);
    first = std::max(first, path->first_row);
  }
  const auto target = horizon_target(rv.rv, h);
  RegressionDesign d;
  d.names = {"const", "rv_l0", "rv_l1", "rv_l2", "rv_l3", "rv_l4"};
  for (auto& n : factor_names("f", S)) d.names.push_back(std::move(n));
  const auto hs = static_cast<std::size_t>(h);
  const std::size_t last = rv.size() > hs ? rv.size() - 1 - hs : 0;
  if (rv.size() <= hs || last < first) throw Error("AR design: not enough history for 5 lags and horizon " + std::to_string(h));
  const std::size_t n = last - first + 1;
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.width()));
  d.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t t = first + r;
    const auto ri = static_cast<Eigen::Index>(r);
    d.origins.push_back(t);
    d.X(ri, 0) = 1.0;
    for (int l = 0; l < 5; ++l) d.X(ri, 1 + l) = rv.rv[t - static_cast<std::size_t>(l)];
    for (int j = 0; j < S; ++j) d.X(ri, 6 + j) = path->factor_at_row(t, j);
    d.y(ri) = target[t];
  }
  return d;
}

RegressionDesign build_har_design(const ingest::VolSeries& rv, const ingest::VolSeries& rv7,
                                  const ingest::VolSeries& rv30, const factors::FactorPath* daily, int S_d,
                                  const factors::FactorPath* weekly, int S_w, int h, std::size_t first_origin) {
  check_aggregate_alignment(rv, rv7);
  check_aggregate_alignment(rv, rv30);
  if (S_d < 0 || S_w < 0) throw Error("factor counts must be non-negative");
  std::size_t first = std::max({first_origin, static_cast<std::size_t>(rv7.horizon - 1),
                                static_cast<std::size_t>(rv30.horizon - 1)});
  if (S_d > 0) {
    if (!daily || S_d > daily->k) throw Error("S_d exceeds available daily factors");
    check_factor_alignment(rv, *daily);
    first = std::max(first, daily->first_row);
  }
  if (S_w > 0) {
    if (!weekly || S_w > weekly->k) throw Error("S_w exceeds available weekly factors");
    check_factor_alignment(rv, *weekly);
    first = std::max(first, weekly->first_row);
  }
  const auto target = horizon_target(rv.rv, h);
  RegressionDesign d;
  d.names = {"const", "rv_d", "rv_w", "rv_m"};
  for (auto& n : factor_names("fd", S_d)) d.names.push_back(std::move(n));
  for (auto& n : factor_names("fw", S_w)) d.names.push_back(std::move(n));
  const auto hs = static_cast<std::size_t>(h);
  if (rv.size() <= hs || rv.size() - 1 - hs < first) throw Error("HAR design: not enough history");
  const std::size_t n = rv.size() - 1 - hs - first + 1;
  const std::size_t off7 = static_cast<std::size_t>(rv7.horizon - 1);
  const std::size_t off30 = static_cast<std::size_t>(rv30.horizon - 1);
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.width()));
  d.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t t = first + r;
    const auto ri = static_cast<Eigen::Index>(r);
    d.origins.push_back(t);
    d.X(ri, 0) = 1.0;
    d.X(ri, 1) = rv.rv[t];
    d.X(ri, 2) = rv7.rv[t - off7];
    d.X(ri, 3) = rv30.rv[t - off30];
    for (int j = 0; j < S_d; ++j) d.X(ri, 4 + j) = daily->factor_at_row(t, j);
    for (int j = 0; j < S_w; ++j) d.X(ri, 4 + S_d + j) = weekly->factor_at_row(t, j);
    d.y(ri) = target[t];
  }
  return d;
}

Eigen::VectorXd midas_weights(double theta1, double theta2, int k) {
  if (k < 1) throw Error("MIDAS lag count must be >= 1");
  if (!(theta1 >= 1.0)) throw Error("MIDAS theta1 must be >= 1");
  if (!(theta2 >= 1.0)) throw Error("MIDAS theta2 must be >= 1 (endpoint weight diverges below 1)");
  const double log_beta_norm = std::lgamma(theta1 + theta2) - std::lgamma(theta1) - std::lgamma(theta2);
  const double norm = std::exp(log_beta_norm);
  Eigen::VectorXd a(k);
  for (int i = 1; i <= k; ++i) {
    const double x = static_cast<double>(i) / k;
    a(i - 1) = std::pow(x, theta1 - 1.0) * std::pow(1.0 - x, theta2 - 1.0) * norm;
  }
  const double total = a.sum();
  if (!(total > 0.0)) throw Error("degenerate MIDAS lag polynomial (all weights zero)");
  return a / total;
}

std::vector<double> default_theta2_grid() { return {1.0, 1.5, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0, 50.0}; }

void MidasSpec::validate() const {
  if (k_lags < 1) throw Error("MIDAS lag count must be >= 1");
  if (theta2_grid.empty() || factor_theta2_grid.empty()) throw Error("MIDAS theta2 grid is empty");
  for (double th : theta2_grid)
    if (!(th >= 1.0)) throw Error("MIDAS theta2 grid values must be >= 1");
  for (double th : factor_theta2_grid)
    if (!(th >= 1.0)) throw Error("MIDAS factor theta2 grid values must be >= 1");
}

double weighted_lags(std::span<const double> x, std::size_t t, const Eigen::VectorXd& weights) {
  const auto k = static_cast<std::size_t>(weights.size());
  if (t + 1 < k || t >= x.size()) throw Error("weighted_lags: insufficient history");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += weights(static_cast<Eigen::Index>(i)) * x[t - i];
  return s;
}

MidasForecast midas_fit_forecast(const ingest::VolSeries& rv, const factors::FactorPath* path, int S,
                                 const MidasSpec& spec, int h, std::size_t origin, std::size_t first_origin) {
  if (S > 0 && path) check_factor_alignment(rv, *path);
  const MidasEngine engine(rv.rv, path, S, spec, h, first_origin);
  return engine.forecast(origin);
}

std::vector<double> ForecastSeries::actuals() const {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.actual);
  return v;
}

std::vector<double> ForecastSeries::predictions() const {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.predicted);
  return v;
}

ModelKind parse_model(const std::string& name) {
  if (name == "rw") return ModelKind::rw;
  if (name == "ar") return ModelKind::ar;
  if (name == "har") return ModelKind::har;
  if (name == "midas") return ModelKind::midas;
  if (name == "lstm") return ModelKind::lstm;
  throw ConfigError("unknown model '" + name + "' (expected rw, ar, har, midas or lstm)");
}

std::string model_id(ModelKind kind, bool augmented, int midas_k, bool pooled) {
  std::string id;
  switch (kind) {
    case ModelKind::rw: return "rw";
    case ModelKind::ar: id = "ar"; break;
    case ModelKind::har: id = "har"; break;
    case ModelKind::midas: id = "midas" + std::to_string(midas_k); break;
    case ModelKind::lstm: id = "lstm"; break;
  }
  if (pooled) id += "-panel";
  if (augmented) id += "-aug";
  return id;
}

std::size_t burn_in_row(std::size_t factor_window, int max_midas_k, bool any_augmented_midas) {
  std::size_t row = std::max<std::size_t>({4, 29, factor_window - 1, factor_window + 5});
  if (max_midas_k > 0) {
    const auto k = static_cast<std::size_t>(max_midas_k);
    row = std::max(row, k - 1);
    if (any_augmented_midas) row = std::max(row, factor_window - 1 + k - 1);
  }
  return row;
}

int factor_count(const factors::FactorPath& path, const FactorConfig& config, std::size_t start) {
  if (config.fixed_count > 0) {
    if (config.fixed_count > path.k) throw Error("fixed factor count exceeds extracted factors");
    return config.fixed_count;
  }
  const auto fractions = factors::mean_explained_variance(path, start);
  return std::min(factors::select_k(fractions, config.policy), path.k);
}

namespace {

void check_run_spec(const ingest::VolPanel& panel, const RunSpec& spec) {
  if (spec.horizon < 1) throw ConfigError("horizon must be >= 1");
  const auto h = static_cast<std::size_t>(spec.horizon);
  if (panel.rows() < spec.start + h + 1) throw Error("start index leaves no forecast origins");
  if (spec.start < spec.first_origin + h || spec.start - h - spec.first_origin + 1 < spec.min_in_sample) {
    throw Error("too little history: start row " + std::to_string(spec.start) + " leaves fewer than " +
                std::to_string(spec.min_in_sample) + " in-sample origins after burn-in row " +
                std::to_string(spec.first_origin));
  }
}

factors::FactorPath full_path(const ingest::VolPanel& panel, const FactorConfig& cfg) {
  return factors::extract_factors(panel, cfg.window, static_cast<int>(panel.cols()));
}

// Builds the baseline or augmented AR/HAR design for one asset.
RegressionDesign linear_design(const ingest::VolPanel& panel, std::size_t asset, const RunSpec& spec,
                               const factors::FactorPath* path, int S) {
  const auto rv = panel.column(asset);
  if (spec.model == ModelKind::ar) return build_ar_design(rv, path, S, spec.horizon, spec.first_origin);
  const auto rv7 = ingest::aggregate_rv(rv, 7);
  const auto rv30 = ingest::aggregate_rv(rv, 30);
  if (S > 0) {
    const auto weekly = factors::weekly_factor(*path);
    return build_har_design(rv, rv7, rv30, path, S, &weekly, S, spec.horizon, spec.first_origin);
  }
  return build_har_design(rv, rv7, rv30, nullptr, 0, nullptr, 0, spec.horizon, spec.first_origin);
}

}  // namespace

ForecastSeries expanding_window_run(const ingest::VolPanel& panel, std::size_t asset, const RunSpec& spec,
                                    const factors::FactorPath* path) {
  check_run_spec(panel, spec);
  if (spec.model == ModelKind::lstm) throw Error("LSTM forecasts use the fixed-split runner");
  const auto rv = panel.column(asset);
  const int h = spec.horizon;
  const auto hs = static_cast<std::size_t>(h);
  const bool augment = spec.factors.augment && spec.model != ModelKind::rw;

  factors::FactorPath own;
  if (augment && !path) {
    own = full_path(panel, spec.factors);
    path = &own;
  }
  const int S = augment ? factor_count(*path, spec.factors, spec.start) : 0;

  ForecastSeries out;
  out.model = model_id(spec.model, augment, spec.midas.k_lags);
  out.asset = panel.assets[asset];
  out.horizon = h;
  const auto target = horizon_target(rv.rv, h);
  const std::size_t last = panel.rows() - 1 - hs;

  if (spec.model == ModelKind::rw) {
    const auto level = trailing_mean(rv.rv, h);
    for (std::size_t t = spec.start; t <= last; ++t) {
      if (std::isnan(level[t])) throw Error("random walk: origin precedes the aggregation window");
      out.records.push_back({panel.dates[t], target[t], level[t]});
    }
    return out;
  }

  if (spec.model == ModelKind::midas) {
    const MidasEngine engine(rv.rv, path, S, spec.midas, h, spec.first_origin);
    if (spec.start < engine.first() + hs || spec.start - hs - engine.first() + 1 < spec.min_in_sample) {
      throw Error("too little history for MIDAS with k=" + std::to_string(spec.midas.k_lags));
    }
    for (std::size_t t = spec.start; t <= last; ++t) {
      out.records.push_back({panel.dates[t], target[t], engine.forecast(t).prediction});
    }
    return out;
  }

  const auto design = linear_design(panel, asset, spec, path, S);
  const std::size_t first = design.origins.front();
  if (spec.start < first + hs || spec.start - hs - first + 1 < spec.min_in_sample) {
    throw Error("too little history: design starts at row " + std::to_string(first));
  }
  for (std::size_t t = spec.start; t <= last; ++t) {
    const auto m = static_cast<Eigen::Index>(t - hs - first + 1);
    const auto fit = ols_fit(design.X.topRows(m), design.y.head(m), design.names);
    const auto row = static_cast<Eigen::Index>(t - first);
    out.records.push_back({panel.dates[t], target[t], design.X.row(row).dot(fit.coef)});
  }
  return out;
}

std::vector<ForecastSeries> expanding_window_run_pooled(const ingest::VolPanel& panel, const RunSpec& spec,
                                                        const factors::FactorPath* path) {
  check_run_spec(panel, spec);
  if (spec.model != ModelKind::ar && spec.model != ModelKind::har) {
    throw ConfigError("pooled estimation is available for ar and har only");
  }
  const std::size_t p = panel.cols();
  const auto hs = static_cast<std::size_t>(spec.horizon);
  const bool augment = spec.factors.augment;
  factors::FactorPath own;
  if (augment && !path) {
    own = full_path(panel, spec.factors);
    path = &own;
  }
  const int S = augment ? factor_count(*path, spec.factors, spec.start) : 0;

  std::vector<RegressionDesign> designs;
  for (std::size_t a = 0; a < p; ++a) designs.push_back(linear_design(panel, a, spec, path, S));
  const std::size_t first = designs.front().origins.front();
  const std::size_t per_asset = designs.front().rows();
  const auto slopes = static_cast<Eigen::Index>(designs.front().width() - 1);
  if (spec.start < first + hs || spec.start - hs - first + 1 < spec.min_in_sample) {
    throw Error("too little history: design starts at row " + std::to_string(first));
  }

  // Rows ordered by origin, then asset, so every expanding sample is a prefix.
  const auto width = static_cast<Eigen::Index>(p) + slopes;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(per_asset * p), width);
  Eigen::VectorXd y(static_cast<Eigen::Index>(per_asset * p));
  std::vector<std::string> names;
  for (const auto& a : panel.assets) names.push_back("const_" + a);
  names.insert(names.end(), designs.front().names.begin() + 1, designs.front().names.end());
  for (std::size_t r = 0; r < per_asset; ++r) {
    for (std::size_t a = 0; a < p; ++a) {
      const auto row = static_cast<Eigen::Index>(r * p + a);
      X(row, static_cast<Eigen::Index>(a)) = 1.0;
      X.row(row).tail(slopes) = designs[a].X.row(static_cast<Eigen::Index>(r)).tail(slopes);
      y(row) = designs[a].y(static_cast<Eigen::Index>(r));
    }
  }

  std::vector<ForecastSeries> out(p);
  for (std::size_t a = 0; a < p; ++a) {
    out[a].model = model_id(spec.model, augment, 30, true);
    out[a].asset = panel.assets[a];
    out[a].horizon = spec.horizon;
  }
  const std::size_t last = panel.rows() - 1 - hs;
  for (std::size_t t = spec.start; t <= last; ++t) {
    const auto m = static_cast<Eigen::Index>((t - hs - first + 1) * p);
    const auto fit = ols_fit(X.topRows(m), y.head(m), names);
    for (std::size_t a = 0; a < p; ++a) {
      const auto row = static_cast<Eigen::Index>((t - first) * p + a);
      out[a].records.push_back({panel.dates[t], y(row), X.row(row).dot(fit.coef)});
    }
  }
  return out;
}

void write_forecasts(std::ostream& out, std::span<const ForecastSeries> series) {
  out << "origin_date,horizon,actual,predicted,model,asset\n";
  for (const auto& s : series) {
    for (const auto& r : s.records) {
      out << format_date(r.origin) << ',' << s.horizon << ',' << csv::format_double(r.actual) << ','
          << csv::format_double(r.predicted) << ',' << s.model << ',' << s.asset << '\n';
    }
  }
}

std::vector<ForecastSeries> read_forecasts(std::istream& in, const std::string& source_name) {
  const auto table = csv::parse(in, source_name);
  const auto c_date = table.column("origin_date");
  const auto c_h = table.column("horizon");
  const auto c_a = table.column("actual");
  const auto c_p = table.column("predicted");
  const auto c_m = table.column("model");
  const auto c_s = table.column("asset");
  std::vector<ForecastSeries> out;
  std::map<std::tuple<std::string, std::string, int>, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = source_name + ":" + std::to_string(table.line_numbers[r]);
    double h = 0.0;
    ForecastRecord rec;
    if (!csv::parse_double(row[c_h], h) || !csv::parse_double(row[c_a], rec.actual) ||
        !csv::parse_double(row[c_p], rec.predicted)) {
      throw Error(where + ": non-numeric forecast field");
    }
    rec.origin = parse_date(row[c_date]);
    const auto key = std::make_tuple(row[c_m], row[c_s], static_cast<int>(h));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({row[c_m], row[c_s], static_cast<int>(h), {}});
    }
    auto& s = out[it->second];
    if (!s.records.empty() && rec.origin <= s.records.back().origin) {
      throw Error(where + ": origins must be strictly increasing within a series");
    }
    s.records.push_back(rec);
  }
  return out;
}

}  // namespace favf::models
