// SPDX-License-Identifier: Apache-2.0
#include "favf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "favf/csv.hpp"
#include "favf/error.hpp"

namespace favf::eval {

namespace {

void check_aligned(std::span<const double> a, std::span<const double> p) {
  if (a.size() != p.size()) throw Error("actuals and predictions differ in length");
  if (a.empty()) throw Error("empty forecast series");
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double utility(double x, double sharpe, double gamma) {
  const double s2 = sharpe * sharpe;
  return s2 / gamma * x - s2 / (2.0 * gamma) * x * x;
}

// "ar-aug" -> "ar", "midas30-panel-aug" -> "midas30-panel".
std::optional<std::string> unaugmented(const std::string& model) {
  const std::string suffix = "-aug";
  if (model.size() > suffix.size() && model.compare(model.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return model.substr(0, model.size() - suffix.size());
  }
  return std::nullopt;
}

}  // namespace

double r2(std::span<const double> actuals, std::span<const double> predictions) {
  check_aligned(actuals, predictions);
  if (actuals.size() < 2) throw Error("r2 needs at least two observations");
  const double m = mean_of(actuals);
  double sse = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    sse += (actuals[i] - predictions[i]) * (actuals[i] - predictions[i]);
    sst += (actuals[i] - m) * (actuals[i] - m);
  }
  if (!(sst > 0.0)) throw Error("zero variance");
  return 1.0 - sse / sst;
}

double r2_ratio_form(std::span<const double> actuals, std::span<const double> predictions) {
  check_aligned(actuals, predictions);
  const double m = mean_of(actuals);
  double s = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    const double den = actuals[i] - m;
    if (den == 0.0) throw Error("ratio-form R2 undefined: an actual equals the sample mean");
    const double q = (actuals[i] - predictions[i]) / den;
    s += q * q;
  }
  return 1.0 - s;
}

double mse(std::span<const double> actuals, std::span<const double> predictions) {
  check_aligned(actuals, predictions);
  double s = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) s += (actuals[i] - predictions[i]) * (actuals[i] - predictions[i]);
  return s / static_cast<double>(actuals.size());
}

double qlike(std::span<const double> actuals, std::span<const double> predictions) {
  check_aligned(actuals, predictions);
  double s = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    if (!(actuals[i] > 0.0)) throw Error("qlike: non-positive actual at position " + std::to_string(i));
    const double x = actuals[i] / std::max(predictions[i], kPredictionFloor);
    s += x - std::log(x) - 1.0;
  }
  return s / static_cast<double>(actuals.size());
}

double uow(std::span<const double> actuals, std::span<const double> predictions, double sharpe, double gamma) {
  check_aligned(actuals, predictions);
  double s = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    if (!(predictions[i] > 0.0)) throw Error("uow: non-positive prediction at position " + std::to_string(i));
    s += utility(actuals[i] / std::max(predictions[i], kPredictionFloor), sharpe, gamma);
  }
  return s / static_cast<double>(actuals.size());
}

std::size_t count_floored(std::span<const double> predictions) {
  return static_cast<std::size_t>(
      std::count_if(predictions.begin(), predictions.end(), [](double p) { return p < kPredictionFloor; }));
}

std::vector<double> losses(std::span<const double> actuals, std::span<const double> predictions, LossKind kind) {
  check_aligned(actuals, predictions);
  std::vector<double> out(actuals.size());
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    if (kind == LossKind::mse) {
      out[i] = (actuals[i] - predictions[i]) * (actuals[i] - predictions[i]);
    } else {
      out[i] = -utility(actuals[i] / std::max(predictions[i], kPredictionFloor), kTargetSharpe, kRiskAversion);
    }
  }
  return out;
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

DmResult dm_test(std::span<const double> benchmark_losses, std::span<const double> candidate_losses, int horizon) {
  if (benchmark_losses.size() != candidate_losses.size()) throw Error("dm_test: loss series differ in length");
  if (benchmark_losses.size() < 10) throw Error("dm_test: need at least 10 observations");
  if (horizon < 1) throw Error("dm_test: horizon must be >= 1");
  const std::size_t n = benchmark_losses.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = benchmark_losses[i] - candidate_losses[i];
    if (!std::isfinite(d[i])) throw Error("dm_test: non-finite loss differential");
  }
  const double mean = mean_of(d);
  const auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = lag; t < n; ++t) s += (d[t] - mean) * (d[t - lag] - mean);
    return s / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  double lrv = gamma0;
  const auto bandwidth = static_cast<std::size_t>(horizon - 1);
  for (std::size_t j = 1; j <= bandwidth && j < n; ++j) {
    lrv += 2.0 * (1.0 - static_cast<double>(j) / static_cast<double>(bandwidth + 1)) * autocov(j);
  }
  // A differential that is constant up to rounding has no usable variance.
  if (!(gamma0 > 1e-24 * mean * mean) || !(lrv > 0.0)) throw Error("degenerate differential");
  DmResult r;
  r.n = n;
  r.mean_differential = mean;
  r.statistic = mean / std::sqrt(lrv / static_cast<double>(n));
  r.p_value = normal_two_sided_p(r.statistic);
  return r;
}

MetricReport evaluate_series(const models::ForecastSeries& s) {
  const auto a = s.actuals();
  const auto p = s.predictions();
  MetricReport m;
  m.asset = s.asset;
  m.model = s.model;
  m.horizon = s.horizon;
  m.n = a.size();
  m.r2 = r2(a, p);
  m.mse = mse(a, p);
  m.qlike = qlike(a, p);
  m.floored = count_floored(p);
  if (s.horizon == 7) {
    std::vector<double> floored(p);
    for (auto& v : floored) v = std::max(v, kPredictionFloor);
    m.uow = uow(a, floored);
  }
  return m;
}

std::vector<MetricReport> metric_table(std::span<const models::ForecastSeries> series, const EvaluateOptions& opts) {
  if (opts.benchmark != "ind" && opts.benchmark != "rw") {
    throw ConfigError("benchmark must be 'ind' or 'rw'");
  }
  std::map<std::tuple<std::string, std::string, int>, const models::ForecastSeries*> lookup;
  for (const auto& s : series) lookup[{s.asset, s.model, s.horizon}] = &s;

  std::vector<MetricReport> rows;
  for (const auto& s : series) {
    auto row = evaluate_series(s);
    std::optional<std::string> bench;
    if (s.model != "rw") {
      const auto base = unaugmented(s.model);
      bench = (opts.benchmark == "ind" && base) ? *base : std::string("rw");
    }
    if (bench) {
      const auto it = lookup.find({s.asset, *bench, s.horizon});
      if (it != lookup.end()) {
        // Align on common origins.
        std::map<Date, const models::ForecastRecord*> by_origin;
        for (const auto& r : it->second->records) by_origin[r.origin] = &r;
        std::vector<double> act, pc, pb;
        for (const auto& r : s.records) {
          const auto f = by_origin.find(r.origin);
          if (f == by_origin.end()) continue;
          act.push_back(r.actual);
          pc.push_back(r.predicted);
          pb.push_back(f->second->predicted);
        }
        if (act.size() >= 10) {
          try {
            const auto dm = dm_test(losses(act, pb, opts.dm_loss), losses(act, pc, opts.dm_loss), s.horizon);
            row.dm = dm.statistic;
            row.benchmark = *bench;
          } catch (const Error&) {
            // Identical forecasts: no statistic.
          }
        }
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_metric_table(std::ostream& out, std::span<const MetricReport> rows) {
  out << "asset,model,R2,MSE,QLIKE\n";
  for (const auto& r : rows) {
    out << r.asset << ',' << r.model << "/h" << r.horizon << ',' << csv::format_double(r.r2) << ','
        << csv::format_double(r.mse) << ',' << csv::format_double(r.qlike) << '\n';
  }
}

void write_uow_dm_table(std::ostream& out, std::span<const MetricReport> rows) {
  out << "asset,model,UoW,DM,benchmark\n";
  for (const auto& r : rows) {
    out << r.asset << ',' << r.model << "/h" << r.horizon << ',' << (r.uow ? csv::format_double(*r.uow) : "") << ','
        << (r.dm ? csv::format_double(*r.dm) : "") << ',' << r.benchmark << '\n';
  }
}

}  // namespace favf::eval
