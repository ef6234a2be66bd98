// SPDX-License-Identifier: Apache-2.0
#include "favf/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "favf/coint.hpp"
#include "favf/csv.hpp"
#include "favf/error.hpp"
#include "favf/eval.hpp"
#include "favf/factors.hpp"
#include "favf/ingest.hpp"

namespace favf::cli {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were read so that unknown
// keys can be reported, and which were absent so defaults can be logged.
class Fields {
 public:
  Fields(const json& doc, std::string prefix, std::vector<std::string>& defaulted)
      : doc_(doc), prefix_(std::move(prefix)), defaulted_(defaulted) {
    if (!doc_.is_object()) throw ConfigError(label("") + "expected an object");
  }

  template <class T>
  bool get(const std::string& key, T& dst) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end() || it->is_null()) {
      defaulted_.push_back(prefix_ + key);
      return false;
    }
    try {
      dst = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(label(key) + "wrong type (" + it->type_name() + ")");
    }
    return true;
  }

  template <class T>
  bool get(const std::string& key, std::optional<T>& dst) {
    T v{};
    if (!get(key, v)) return false;
    dst = v;
    return true;
  }

  bool get(const std::string& key, std::filesystem::path& dst) {
    std::string s;
    if (!get(key, s)) return false;
    dst = s;
    return true;
  }

  std::optional<Fields> sub(const std::string& key) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) {
      defaulted_.push_back(prefix_ + key);
      return std::nullopt;
    }
    return Fields(*it, prefix_ + key + ".", defaulted_);
  }

  void finish() const {
    for (const auto& [k, v] : doc_.items()) {
      if (!seen_.count(k)) throw ConfigError(label(k) + "unknown field");
    }
  }

  std::string label(const std::string& key) const {
    const std::string name = prefix_ + key;
    return (name.empty() ? std::string("config") : name) + ": ";
  }

 private:
  const json& doc_;
  std::string prefix_;
  std::vector<std::string>& defaulted_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

void require_file(const std::filesystem::path& p, const std::string& field) {
  if (!p.empty() && !std::filesystem::is_regular_file(p)) {
    throw ConfigError(field + ": file not found: " + p.string());
  }
}

std::string market_name(Market m) { return m == Market::equity ? "equity" : "crypto"; }

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

void write_json(const std::filesystem::path& p, const json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

ingest::VolPanel load_panel(const std::filesystem::path& p, const std::string& what) {
  if (p.empty()) throw ConfigError(what + ": input required");
  if (!std::filesystem::is_regular_file(p)) throw ConfigError(what + ": file not found: " + p.string());
  auto load = ingest::load_rv_panel(p);
  for (const auto& d : load.dropped) {
    spdlog::warn("{}: dropped {} ({})", p.string(), format_date(d.date), d.reason);
  }
  return std::move(load.panel);
}

models::FactorConfig factor_config(const RunConfig& c, int horizon, bool augment) {
  models::FactorConfig fc;
  fc.augment = augment;
  fc.window = c.factor_window;
  fc.fixed_count = c.factor_count;
  if (c.factor_policy == "dominant" || (c.factor_policy == "auto" && horizon == 1)) {
    fc.policy = factors::SelectionPolicy::dominant();
  } else if (c.factor_policy == "threshold") {
    fc.policy = factors::SelectionPolicy::variance_threshold(c.factor_threshold);
  } else {
    fc.policy = factors::SelectionPolicy::variance_threshold(
        c.market == Market::equity ? factors::kEquityVarianceTarget : factors::kCryptoVarianceTarget);
  }
  return fc;
}

// Per-cell seed so every (asset, horizon, variant) trains from its own stream.
std::uint64_t cell_seed(std::uint64_t seed, const std::string& key) {
  return seed ^ std::strtoull(fnv1a64_hex(key).c_str(), nullptr, 16);
}

std::vector<models::ForecastSeries> read_forecast_file(const std::filesystem::path& p) {
  if (p.empty()) throw ConfigError("inputs.forecasts: input required");
  std::ifstream in(p);
  if (!in) throw ConfigError("inputs.forecasts: file not found: " + p.string());
  return models::read_forecasts(in, p.string());
}

}  // namespace

std::string fnv1a64_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json RunConfig::to_json() const {
  json quotes_j = json::object();
  for (const auto& [a, p] : quotes) quotes_j[a] = p.string();
  json j;
  j["seed"] = seed;
  j["market"] = market_name(market);
  j["output_dir"] = output_dir.string();
  j["inputs"] = {{"rv_panel", rv_panel.string()},
                 {"quotes", quotes_j},
                 {"prices", prices.string()},
                 {"forecasts", forecasts.string()},
                 {"utc_offset_minutes", utc_offset_minutes}};
  j["forecast"] = {{"horizons", horizons},
                   {"models", models},
                   {"augment", augment},
                   {"pooled", pooled},
                   {"start_fraction", start_fraction}};
  j["factors"] = {{"window", factor_window},
                  {"policy", factor_policy},
                  {"threshold", factor_threshold},
                  {"count", factor_count}};
  j["midas"] = {{"k_lags", midas.k_lags},
                {"theta1", midas.theta1},
                {"theta2_grid", midas.theta2_grid},
                {"factor_theta2_grid", midas.factor_theta2_grid}};
  j["lstm"] = {{"hidden", lstm.hidden},
               {"epochs", lstm.epochs},
               {"batch_size", lstm.batch_size},
               {"patience", lstm.patience},
               {"learning_rate", lstm.learning_rate},
               {"validation_fraction", lstm.validation_fraction}};
  j["evaluate"] = {{"benchmark", benchmark}, {"dm_loss", dm_loss}};
  j["coint"] = {{"max_lag", adf_max_lag ? json(*adf_max_lag) : json(nullptr)},
                {"johansen_lag", johansen_lag},
                {"assets", coint_assets}};
  j["backtest"] = {{"pair", pair},
                   {"models", backtest_models},
                   {"horizon", backtest_horizon},
                   {"window", backtest_window ? json(*backtest_window) : json(nullptr)},
                   {"hedge_window", backtest.hedge_window ? json(*backtest.hedge_window) : json(nullptr)},
                   {"entry_z", backtest.entry_z},
                   {"exit_z", backtest.exit_z},
                   {"vol_target", backtest.vol_target},
                   {"max_leverage", backtest.max_leverage},
                   {"initial_equity", backtest.initial_equity},
                   {"cost_bps", backtest.cost_bps},
                   {"sizing_annualization", backtest.sizing_annualization},
                   {"metric_annualization", backtest.metric_annualization},
                   {"min_hold_days", backtest.min_hold_days}};
  j["synth"] = {{"kind", synth_kind},
                {"T", synth.T},
                {"p", synth.p},
                {"k_true", synth.k_true},
                {"factor_mean", synth.factor_mean},
                {"factor_persistence", synth.factor_persistence},
                {"factor_innovation", synth.factor_innovation},
                {"loading_drift", synth.loading_drift},
                {"noise_scale", synth.noise_scale},
                {"mean_reversion", synth.mean_reversion},
                {"spread_vol", synth.spread_vol},
                {"random_walk_vol", synth.random_walk_vol},
                {"hedge_beta", synth.hedge_beta}};
  return j;
}

std::string RunConfig::hash() const {
  if (pinned_hash) return *pinned_hash;
  auto j = to_json();
  j.erase("output_dir");
  return fnv1a64_hex(j.dump());
}

RunConfig parse_config(const json& doc) {
  RunConfig c;
  Fields root(doc, "", c.defaulted);
  root.get("seed", c.seed);
  std::string market = "crypto";
  if (root.get("market", market)) {
    require(market == "crypto" || market == "equity", "market", "must be 'equity' or 'crypto'");
  }
  c.market = market == "equity" ? Market::equity : Market::crypto;
  root.get("output_dir", c.output_dir);

  if (auto in = root.sub("inputs")) {
    in->get("rv_panel", c.rv_panel);
    std::map<std::string, std::string> q;
    if (in->get("quotes", q)) {
      for (const auto& [a, p] : q) c.quotes[a] = p;
    }
    in->get("prices", c.prices);
    in->get("forecasts", c.forecasts);
    in->get("utc_offset_minutes", c.utc_offset_minutes);
    in->finish();
  }
  if (auto f = root.sub("forecast")) {
    f->get("horizons", c.horizons);
    f->get("models", c.models);
    f->get("augment", c.augment);
    f->get("pooled", c.pooled);
    f->get("start_fraction", c.start_fraction);
    f->finish();
  }
  if (auto f = root.sub("factors")) {
    f->get("window", c.factor_window);
    f->get("policy", c.factor_policy);
    f->get("threshold", c.factor_threshold);
    f->get("count", c.factor_count);
    f->finish();
  }
  if (auto m = root.sub("midas")) {
    m->get("k_lags", c.midas.k_lags);
    m->get("theta1", c.midas.theta1);
    m->get("theta2_grid", c.midas.theta2_grid);
    m->get("factor_theta2_grid", c.midas.factor_theta2_grid);
    m->finish();
  }
  if (auto l = root.sub("lstm")) {
    l->get("hidden", c.lstm.hidden);
    l->get("epochs", c.lstm.epochs);
    l->get("batch_size", c.lstm.batch_size);
    l->get("patience", c.lstm.patience);
    l->get("learning_rate", c.lstm.learning_rate);
    l->get("validation_fraction", c.lstm.validation_fraction);
    l->finish();
  }
  if (auto e = root.sub("evaluate")) {
    e->get("benchmark", c.benchmark);
    e->get("dm_loss", c.dm_loss);
    e->finish();
  }
  if (auto k = root.sub("coint")) {
    k->get("max_lag", c.adf_max_lag);
    k->get("johansen_lag", c.johansen_lag);
    k->get("assets", c.coint_assets);
    k->finish();
  }
  if (auto b = root.sub("backtest")) {
    b->get("pair", c.pair);
    b->get("models", c.backtest_models);
    b->get("horizon", c.backtest_horizon);
    b->get("window", c.backtest_window);
    b->get("hedge_window", c.backtest.hedge_window);
    b->get("entry_z", c.backtest.entry_z);
    b->get("exit_z", c.backtest.exit_z);
    b->get("vol_target", c.backtest.vol_target);
    b->get("max_leverage", c.backtest.max_leverage);
    b->get("initial_equity", c.backtest.initial_equity);
    b->get("cost_bps", c.backtest.cost_bps);
    b->get("sizing_annualization", c.backtest.sizing_annualization);
    b->get("metric_annualization", c.backtest.metric_annualization);
    b->get("min_hold_days", c.backtest.min_hold_days);
    b->finish();
  }
  if (auto s = root.sub("synth")) {
    s->get("kind", c.synth_kind);
    s->get("T", c.synth.T);
    s->get("p", c.synth.p);
    s->get("k_true", c.synth.k_true);
    s->get("factor_mean", c.synth.factor_mean);
    s->get("factor_persistence", c.synth.factor_persistence);
    s->get("factor_innovation", c.synth.factor_innovation);
    s->get("loading_drift", c.synth.loading_drift);
    s->get("noise_scale", c.synth.noise_scale);
    s->get("mean_reversion", c.synth.mean_reversion);
    s->get("spread_vol", c.synth.spread_vol);
    s->get("random_walk_vol", c.synth.random_walk_vol);
    s->get("hedge_beta", c.synth.hedge_beta);
    s->finish();
  }
  root.finish();

  // Field-level validation.
  require_file(c.rv_panel, "inputs.rv_panel");
  require_file(c.prices, "inputs.prices");
  require_file(c.forecasts, "inputs.forecasts");
  for (const auto& [a, p] : c.quotes) require_file(p, "inputs.quotes." + a);
  require(!c.horizons.empty(), "forecast.horizons", "must not be empty");
  for (int h : c.horizons) require(h >= 1, "forecast.horizons", "every horizon must be >= 1");
  for (const auto& m : c.models) {
    try {
      models::parse_model(m);
    } catch (const std::exception&) {
      throw ConfigError("forecast.models: unknown model '" + m + "'");
    }
  }
  require(c.start_fraction > 0.0 && c.start_fraction < 1.0, "forecast.start_fraction", "must lie in (0, 1)");
  require(c.factor_window >= 2, "factors.window", "must be >= 2");
  require(c.factor_policy == "auto" || c.factor_policy == "dominant" || c.factor_policy == "threshold",
          "factors.policy", "must be 'auto', 'dominant' or 'threshold'");
  require(c.factor_threshold > 0.0 && c.factor_threshold <= 1.0, "factors.threshold", "must lie in (0, 1]");
  require(c.factor_count >= 0, "factors.count", "must be >= 0");
  try {
    c.midas.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("midas: ") + e.what());
  }
  try {
    nnet::LstmConfig probe = c.lstm;
    probe.with_seed(c.seed).validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("lstm: ") + e.what());
  }
  require(c.benchmark == "ind" || c.benchmark == "rw", "evaluate.benchmark", "must be 'ind' or 'rw'");
  require(c.dm_loss == "mse" || c.dm_loss == "utility", "evaluate.dm_loss", "must be 'mse' or 'utility'");
  require(!c.adf_max_lag || *c.adf_max_lag >= 0, "coint.max_lag", "must be >= 0");
  require(c.johansen_lag >= 0, "coint.johansen_lag", "must be >= 0");
  require(c.pair.empty() || c.pair.size() == 2, "backtest.pair", "must name exactly two assets");
  require(c.backtest_horizon >= 1, "backtest.horizon", "must be >= 1");
  require(!c.backtest_window || *c.backtest_window >= 3, "backtest.window", "must be >= 3");
  try {
    c.backtest.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("backtest: ") + e.what());
  }
  const std::set<std::string> kinds{"factor", "forecastable", "pair", "system", "pipeline"};
  require(kinds.count(c.synth_kind) == 1, "synth.kind", "must be factor, forecastable, pair, system or pipeline");
  require(c.synth.T >= 100, "synth.T", "must be >= 100");
  require(c.synth.p >= 2, "synth.p", "must be >= 2");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

std::string provenance_header(const RunConfig& config) {
  return std::string("# favf version=") + kVersion + " config_hash=" + config.hash() +
         " seed=" + std::to_string(config.seed) + "\n";
}

Staging::Staging(std::filesystem::path output_dir) : out_(std::move(output_dir)) {
  std::filesystem::create_directories(out_);
  dir_ = out_ / ".favf-staging";
  std::filesystem::remove_all(dir_);
  std::filesystem::create_directories(dir_);
}

Staging::~Staging() {
  if (!committed_) {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
}

std::filesystem::path Staging::path(const std::string& name) const { return dir_ / name; }

void Staging::commit() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) std::filesystem::rename(f, out_ / f.filename());
  std::filesystem::remove_all(dir_);
  committed_ = true;
}

void cmd_rv(const RunConfig& c, Staging& stage) {
  if (c.quotes.empty()) throw ConfigError("inputs.quotes: at least one asset quote file is required");
  const auto session = c.market == Market::equity ? ingest::SessionSpec::equity(c.utc_offset_minutes)
                                                  : ingest::SessionSpec::crypto();
  std::vector<ingest::VolSeries> series;
  json report = json::object();
  for (const auto& [asset, path] : c.quotes) {
    const auto raw = ingest::load_quotes(path);
    ingest::FilterReport fr;
    const auto clean = ingest::filter_quotes(raw, {}, &fr);
    report[asset] = {{"input", fr.input},
                     {"non_positive", fr.non_positive},
                     {"crossed", fr.crossed},
                     {"non_increasing_time", fr.non_increasing_time},
                     {"spurious", fr.spurious},
                     {"kept", fr.kept},
                     {"spurious_rule", "midpoint beyond 10 rolling MADs of the median of the previous 50"}};
    series.push_back(ingest::realized_volatility(asset, clean, session));
    spdlog::info("rv: {} sessions for {}", series.back().dates.size(), asset);
  }
  const auto load = ingest::align_series(series);
  {
    auto out = open_out(stage.path("rv_panel.csv"));
    out << provenance_header(c);
    ingest::write_rv_panel(out, load.panel);
  }
  auto out = open_out(stage.path("rv_dropped.csv"));
  out << provenance_header(c) << "date,reason\n";
  for (const auto& d : load.dropped) out << format_date(d.date) << ',' << d.reason << '\n';
  write_json(stage.path("rv_filter_report.json"), report);
}

void cmd_factors(const RunConfig& c, Staging& stage) {
  const auto panel = load_panel(c.rv_panel, "inputs.rv_panel");
  const int p = static_cast<int>(panel.cols());
  const auto path = factors::extract_factors(panel, c.factor_window, p);
  const std::string head = provenance_header(c);
  {
    auto out = open_out(stage.path("factors.csv"));
    out << head << "date";
    for (int j = 0; j < p; ++j) out << ",f" << (j + 1);
    out << '\n';
    for (std::size_t i = 0; i < path.dates.size(); ++i) {
      out << format_date(path.dates[i]);
      for (int j = 0; j < p; ++j) out << ',' << csv::format_double(path.factors[i](j));
      out << '\n';
    }
  }
  {
    auto out = open_out(stage.path("loadings.csv"));
    out << head << "date,asset";
    for (int j = 0; j < p; ++j) out << ",l" << (j + 1);
    out << '\n';
    for (std::size_t i = 0; i < path.dates.size(); ++i) {
      for (std::size_t a = 0; a < panel.cols(); ++a) {
        out << format_date(path.dates[i]) << ',' << panel.assets[a];
        for (int j = 0; j < p; ++j) out << ',' << csv::format_double(path.loadings[i](static_cast<Eigen::Index>(a), j));
        out << '\n';
      }
    }
  }
  {
    auto out = open_out(stage.path("eigenvalues.csv"));
    out << head << "date";
    for (int j = 0; j < p; ++j) out << ",ev" << (j + 1);
    for (int j = 0; j < p; ++j) out << ",share" << (j + 1);
    out << '\n';
    for (std::size_t i = 0; i < path.dates.size(); ++i) {
      const auto share = factors::explained_variance(path.eigenvalues[i]);
      out << format_date(path.dates[i]);
      for (int j = 0; j < p; ++j) out << ',' << csv::format_double(path.eigenvalues[i](j));
      for (int j = 0; j < p; ++j) out << ',' << csv::format_double(share(j));
      out << '\n';
    }
  }
  auto out = open_out(stage.path("factor_selection.csv"));
  out << head << "horizon,policy,k\n";
  const std::size_t start = static_cast<std::size_t>(std::floor(c.start_fraction * static_cast<double>(panel.rows())));
  for (int h : c.horizons) {
    const auto fc = factor_config(c, h, true);
    const int k = models::factor_count(path, fc, std::max(start, path.first_row));
    const std::string policy = fc.fixed_count > 0 ? "fixed"
                               : fc.policy.mode == factors::SelectionPolicy::Mode::dominant
                                   ? "dominant"
                                   : "threshold:" + csv::format_double(fc.policy.threshold);
    out << h << ',' << policy << ',' << k << '\n';
  }
}

void cmd_forecast(const RunConfig& c, Staging& stage) {
  const auto panel = load_panel(c.rv_panel, "inputs.rv_panel");
  const auto T = panel.rows();
  const auto path = factors::extract_factors(panel, c.factor_window, static_cast<int>(panel.cols()));

  bool aug_midas = false;
  for (const auto& m : c.models) aug_midas |= c.augment && models::parse_model(m) == models::ModelKind::midas;
  const std::size_t burn = models::burn_in_row(c.factor_window, c.midas.k_lags, aug_midas);

  std::vector<models::ForecastSeries> all;
  for (int h : c.horizons) {
    const auto hs = static_cast<std::size_t>(h);
    const std::size_t floor_start = burn + 50 + hs;
    const std::size_t start =
        std::max(floor_start, static_cast<std::size_t>(std::floor(c.start_fraction * static_cast<double>(T))));
    if (start + hs >= T) throw Error("panel too short for horizon " + std::to_string(h));
    for (const auto& name : c.models) {
      const auto kind = models::parse_model(name);
      std::vector<bool> variants{false};
      if (c.augment && kind != models::ModelKind::rw) variants.push_back(true);
      for (bool aug : variants) {
        const auto fc = factor_config(c, h, aug);
        if (kind == models::ModelKind::lstm) {
          for (std::size_t a = 0; a < panel.cols(); ++a) {
            auto cfg = c.lstm;
            cfg.with_seed(cell_seed(c.seed, panel.assets[a] + "/" + std::to_string(h) + (aug ? "/aug" : "")));
            all.push_back(nnet::lstm_run(panel, a, fc, h, cfg, &path));
            spdlog::info("forecast: {} {} h={} done", all.back().model, panel.assets[a], h);
          }
          continue;
        }
        models::RunSpec spec;
        spec.model = kind;
        spec.horizon = h;
        spec.factors = fc;
        spec.midas = c.midas;
        spec.start = start;
        spec.first_origin = burn;
        if (c.pooled && (kind == models::ModelKind::ar || kind == models::ModelKind::har)) {
          auto pooled = models::expanding_window_run_pooled(panel, spec, &path);
          for (auto& s : pooled) all.push_back(std::move(s));
          continue;
        }
        for (std::size_t a = 0; a < panel.cols(); ++a) {
          all.push_back(models::expanding_window_run(panel, a, spec, &path));
        }
        spdlog::info("forecast: {} h={} done", all.back().model, h);
      }
    }
  }
  auto out = open_out(stage.path("forecasts.csv"));
  out << provenance_header(c);
  models::write_forecasts(out, all);
}

void cmd_evaluate(const RunConfig& c, Staging& stage) {
  const auto series = read_forecast_file(c.forecasts);
  eval::EvaluateOptions opts;
  opts.benchmark = c.benchmark;
  opts.dm_loss = c.dm_loss == "utility" ? eval::LossKind::utility : eval::LossKind::mse;
  const auto rows = eval::metric_table(series, opts);
  {
    auto out = open_out(stage.path("metrics.csv"));
    out << provenance_header(c);
    eval::write_metric_table(out, rows);
  }
  {
    auto out = open_out(stage.path("uow_dm.csv"));
    out << provenance_header(c);
    eval::write_uow_dm_table(out, rows);
  }
  auto out = open_out(stage.path("metrics_detail.csv"));
  out << provenance_header(c) << "asset,model,horizon,n,benchmark,DM,p_value,floored\n";
  for (const auto& r : rows) {
    out << r.asset << ',' << r.model << ',' << r.horizon << ',' << r.n << ',' << r.benchmark << ','
        << (r.dm ? csv::format_double(*r.dm) : "") << ','
        << (r.dm ? csv::format_double(eval::normal_two_sided_p(*r.dm)) : "") << ',' << r.floored << '\n';
    if (r.floored > 0) spdlog::warn("evaluate: {} predictions floored for {} {}", r.floored, r.asset, r.model);
  }
}

void cmd_coint(const RunConfig& c, Staging& stage) {
  const auto prices = load_panel(c.prices, "inputs.prices");
  std::vector<std::size_t> cols;
  if (c.coint_assets.empty()) {
    for (std::size_t i = 0; i < prices.cols(); ++i) cols.push_back(i);
  } else {
    for (const auto& a : c.coint_assets) cols.push_back(prices.asset_index(a));
  }
  const auto T = static_cast<Eigen::Index>(prices.rows());
  Eigen::MatrixXd logp(T, static_cast<Eigen::Index>(cols.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    names.push_back(prices.assets[cols[j]]);
    for (Eigen::Index t = 0; t < T; ++t) {
      const double v = prices.values(t, static_cast<Eigen::Index>(cols[j]));
      if (!(v > 0.0)) throw Error("coint: non-positive price for " + names.back());
      logp(t, static_cast<Eigen::Index>(j)) = std::log(v);
    }
  }
  json report;
  json adf = json::object();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const Eigen::VectorXd col = logp.col(static_cast<Eigen::Index>(j));
    adf[names[j]] = coint::to_json(
        coint::adf_test(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), c.adf_max_lag));
  }
  report["adf"] = adf;
  json eg = json::array();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (std::size_t j = i + 1; j < cols.size(); ++j) {
      const Eigen::VectorXd x = logp.col(static_cast<Eigen::Index>(i));
      const Eigen::VectorXd y = logp.col(static_cast<Eigen::Index>(j));
      eg.push_back(coint::to_json(coint::engle_granger(
          std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
          std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), names[i], names[j], c.adf_max_lag)));
    }
  }
  report["engle_granger"] = eg;
  if (cols.size() >= 2) {
    const auto jo = coint::johansen_trace(logp, c.johansen_lag, names);
    report["johansen"] = coint::to_json(jo);
    auto out = open_out(stage.path("cev.csv"));
    out << provenance_header(c);
    coint::write_cev_table(out, jo);
  }
  write_json(stage.path("coint.json"), report);
}

void cmd_backtest(const RunConfig& c, Staging& stage) {
  const auto prices = load_panel(c.prices, "inputs.prices");
  const auto series = read_forecast_file(c.forecasts);
  if (prices.cols() < 2) throw ConfigError("inputs.prices: need at least two price columns");
  const std::string a = c.pair.empty() ? prices.assets[0] : c.pair[0];
  const std::string b = c.pair.empty() ? prices.assets[1] : c.pair[1];
  const auto ia = prices.asset_index(a);
  const auto ib = prices.asset_index(b);

  std::vector<std::string> model_names = c.backtest_models;
  if (model_names.empty()) {
    std::set<std::string> seen;
    for (const auto& s : series) {
      if (s.horizon == c.backtest_horizon && (s.asset == a || s.asset == b) && seen.insert(s.model).second) {
        model_names.push_back(s.model);
      }
    }
  }
  if (model_names.empty()) throw Error("backtest: no forecasts for " + a + " and " + b);

  std::vector<std::pair<std::string, backtest::Metrics>> rows;
  for (const auto& model : model_names) {
    backtest::MarketData md;
    md.dates = prices.dates;
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(prices.rows()); ++t) {
      md.price_a.push_back(prices.values(t, static_cast<Eigen::Index>(ia)));
      md.price_b.push_back(prices.values(t, static_cast<Eigen::Index>(ib)));
    }
    const auto lookup = [&](const std::string& asset) {
      std::vector<double> v(prices.rows(), std::numeric_limits<double>::quiet_NaN());
      bool found = false;
      for (const auto& s : series) {
        if (s.model != model || s.asset != asset || s.horizon != c.backtest_horizon) continue;
        found = true;
        for (const auto& r : s.records) {
          const auto it = std::lower_bound(prices.dates.begin(), prices.dates.end(), r.origin);
          if (it != prices.dates.end() && *it == r.origin) {
            v[static_cast<std::size_t>(it - prices.dates.begin())] = r.predicted;
          }
        }
      }
      if (!found) throw Error("backtest: no " + model + " forecasts for " + asset);
      return v;
    };
    md.vol_a = lookup(a);
    md.vol_b = lookup(b);
    // Trade only through the last date that has both forecasts.
    std::size_t end = md.dates.size();
    while (end > 0 && (std::isnan(md.vol_a[end - 1]) || std::isnan(md.vol_b[end - 1]))) --end;
    if (end < 2) throw Error("backtest: forecasts for " + model + " do not overlap the price dates");
    for (auto* v : {&md.price_a, &md.price_b, &md.vol_a, &md.vol_b}) v->resize(end);
    md.dates.resize(end);
    auto cfg = c.backtest;
    cfg.window = c.backtest_window.value_or(model.rfind("lstm", 0) == 0 ? 30 : 70);
    const auto result = backtest::simulate(md, cfg);
    if (result.metrics.bankrupt) spdlog::warn("backtest: {} went bankrupt", model);
    {
      auto out = open_out(stage.path("equity_" + model + ".csv"));
      out << provenance_header(c);
      backtest::write_equity_csv(out, result);
    }
    {
      auto out = open_out(stage.path("ledger_" + model + ".csv"));
      out << provenance_header(c);
      backtest::write_ledger_csv(out, result);
    }
    write_json(stage.path("backtest_" + model + ".json"), backtest::metrics_json(result.metrics));
    rows.emplace_back(model, result.metrics);
  }
  auto out = open_out(stage.path("backtest_metrics.csv"));
  out << provenance_header(c);
  backtest::write_metrics_csv(out, rows);
}

namespace {

synth::SynthSpec synth_spec(const RunConfig& c) {
  synth::SynthSpec s;
  s.seed = c.seed;
  s.T = c.synth.T;
  s.p = c.synth.p;
  s.k_true = c.synth.k_true;
  s.factor_mean = c.synth.factor_mean;
  s.factor_persistence = c.synth.factor_persistence;
  s.factor_innovation = c.synth.factor_innovation;
  s.loading_drift = c.synth.loading_drift;
  s.noise_scale = c.synth.noise_scale;
  s.mean_reversion = c.synth.mean_reversion;
  s.spread_vol = c.synth.spread_vol;
  s.random_walk_vol = c.synth.random_walk_vol;
  s.hedge_beta = c.synth.hedge_beta;
  s.validate();
  return s;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

void write_prices(const RunConfig& c, const std::filesystem::path& p, const std::vector<Date>& dates,
                  const std::vector<std::string>& names, const Eigen::MatrixXd& log_prices) {
  auto out = open_out(p);
  out << provenance_header(c) << "date";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t t = 0; t < dates.size(); ++t) {
    out << format_date(dates[t]);
    for (Eigen::Index j = 0; j < log_prices.cols(); ++j) {
      out << ',' << csv::format_double(std::exp(log_prices(static_cast<Eigen::Index>(t), j)));
    }
    out << '\n';
  }
}

void write_panel(const RunConfig& c, const std::filesystem::path& p, const ingest::VolPanel& panel) {
  auto out = open_out(p);
  out << provenance_header(c);
  ingest::write_rv_panel(out, panel);
}

}  // namespace

void cmd_synth(const RunConfig& c, Staging& stage) {
  const auto spec = synth_spec(c);
  json truth;
  truth["kind"] = c.synth_kind;
  truth["seed"] = c.seed;
  const auto emit_pair = [&](const std::vector<std::string>& names) {
    const auto pair = synth::gen_cointegrated_pair(spec);
    Eigen::MatrixXd lp(static_cast<Eigen::Index>(pair.dates.size()), 2);
    for (std::size_t t = 0; t < pair.dates.size(); ++t) {
      lp(static_cast<Eigen::Index>(t), 0) = pair.log_a[t];
      lp(static_cast<Eigen::Index>(t), 1) = pair.log_b[t];
    }
    write_prices(c, stage.path("prices.csv"), pair.dates, names, lp);
    truth["pair"] = {{"assets", names}, {"beta", pair.beta}, {"intercept", pair.intercept}, {"spread", pair.spread}};
  };
  if (c.synth_kind == "factor" || c.synth_kind == "pipeline") {
    const auto fp = synth::gen_factor_panel(spec);
    write_panel(c, stage.path("rv_panel.csv"), fp.panel);
    truth["factors"] = matrix_json(fp.factors);
    json loadings = json::array();
    for (const auto& l : fp.loadings) loadings.push_back(matrix_json(l));
    truth["loadings"] = loadings;
    if (c.synth_kind == "pipeline") emit_pair({fp.panel.assets[0], fp.panel.assets[1]});
  } else if (c.synth_kind == "forecastable") {
    synth::ForecastableSpec fs;
    fs.seed = c.seed;
    fs.T = c.synth.T;
    fs.p = c.synth.p;
    const auto fp = synth::gen_forecastable_rv(fs);
    write_panel(c, stage.path("rv_panel.csv"), fp.panel);
    truth["factor"] = fp.factor;
    truth["true_r2"] = synth::forecastable_true_r2(fs);
  } else if (c.synth_kind == "pair") {
    emit_pair({"A", "B"});
  } else {
    const auto sys = synth::gen_cointegrated_system(c.seed, c.synth.T, c.synth.p, 1);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < c.synth.p; ++j) names.push_back("P" + std::to_string(j + 1));
    write_prices(c, stage.path("prices.csv"), synth::calendar_dates(spec.start_date, c.synth.T), names,
                 sys.log_prices);
    truth["rank"] = sys.rank;
    truth["beta"] = matrix_json(sys.beta);
  }
  write_json(stage.path("truth.json"), truth);
}

void cmd_pipeline(const RunConfig& c, Staging& stage) {
  RunConfig d = c;
  d.pinned_hash = c.hash();
  if (d.rv_panel.empty() && d.quotes.empty()) {
    spdlog::info("pipeline: no inputs given, generating a synthetic panel and price pair");
    d.synth_kind = "pipeline";
    cmd_synth(d, stage);
    d.rv_panel = stage.path("rv_panel.csv");
    if (d.prices.empty()) d.prices = stage.path("prices.csv");
  } else if (d.rv_panel.empty()) {
    cmd_rv(d, stage);
    d.rv_panel = stage.path("rv_panel.csv");
  }
  cmd_factors(d, stage);
  cmd_forecast(d, stage);
  d.forecasts = stage.path("forecasts.csv");
  cmd_evaluate(d, stage);
  if (!d.prices.empty()) {
    cmd_coint(d, stage);
    cmd_backtest(d, stage);
  }
}

int run(int argc, char** argv) {
  auto logger = spdlog::get("favf");
  if (!logger) logger = spdlog::stderr_logger_mt("favf");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  if (const char* lvl = std::getenv("FAVF_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(lvl));
  } else {
    spdlog::set_level(spdlog::level::info);
  }

  CLI::App app{"Factor-augmented volatility forecasting toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string rv_panel;
    std::string prices;
    std::string forecasts;
    std::vector<int> horizons;
    std::vector<std::string> models;
    std::string market;
  } o;

  const std::vector<std::pair<std::string, std::function<void(const RunConfig&, Staging&)>>> commands{
      {"rv", cmd_rv},
      {"factors", cmd_factors},
      {"forecast", cmd_forecast},
      {"evaluate", cmd_evaluate},
      {"coint", cmd_coint},
      {"backtest", cmd_backtest},
      {"synth", cmd_synth},
      {"pipeline", cmd_pipeline}};
  const std::map<std::string, std::string> help{
      {"rv", "Realized volatility panel from quote files"},
      {"factors", "Rolling-window factors, loadings and eigenvalues"},
      {"forecast", "Out-of-sample forecasts for every model and horizon"},
      {"evaluate", "Metric table with Diebold-Mariano statistics"},
      {"coint", "ADF, Engle-Granger and Johansen trace tests on log prices"},
      {"backtest", "Volatility-targeted pairs-trading backtest"},
      {"synth", "Synthetic panels and price pairs with ground truth"},
      {"pipeline", "Full chain from inputs (or synthetic data) to reports"}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("-c,--config", o.config, "JSON run configuration");
    sub->add_option("-o,--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--rv-panel", o.rv_panel, "RV panel CSV");
    sub->add_option("--prices", o.prices, "Price CSV");
    sub->add_option("--forecasts", o.forecasts, "Forecast CSV");
    sub->add_option("--horizon", o.horizons, "Forecast horizon (repeatable)");
    sub->add_option("--models", o.models, "Models to run")->delimiter(',');
    sub->add_option("--market", o.market, "equity or crypto");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json doc = json::object();
    if (!o.config.empty()) {
      std::ifstream in(o.config);
      if (!in) throw ConfigError("config file not found: " + o.config);
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(o.config + ": " + e.what());
      }
    }
    // Flags override the document before validation.
    if (!doc.is_object()) throw ConfigError("config: expected an object");
    if (!o.out.empty()) doc["output_dir"] = o.out;
    if (o.seed) doc["seed"] = *o.seed;
    if (!o.market.empty()) doc["market"] = o.market;
    if (!o.rv_panel.empty()) doc["inputs"]["rv_panel"] = o.rv_panel;
    if (!o.prices.empty()) doc["inputs"]["prices"] = o.prices;
    if (!o.forecasts.empty()) doc["inputs"]["forecasts"] = o.forecasts;
    if (!o.horizons.empty()) doc["forecast"]["horizons"] = o.horizons;
    if (!o.models.empty()) doc["forecast"]["models"] = o.models;
    const RunConfig config = parse_config(doc);
    const auto cfg_json = config.to_json();
    for (const auto& field : config.defaulted) {
      const auto ptr = json::json_pointer("/" + [&] {
        std::string s = field;
        std::replace(s.begin(), s.end(), '.', '/');
        return s;
      }());
      spdlog::info("default {} = {}", field, cfg_json.contains(ptr) ? cfg_json.at(ptr).dump() : "(unset)");
    }

    for (const auto& [name, fn] : commands) {
      if (!app.got_subcommand(name)) continue;
      Staging stage(config.output_dir);
      fn(config, stage);
      stage.commit();
      spdlog::info("{}: outputs written to {}", name, config.output_dir.string());
    }
    return 0;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}

}  // namespace favf::cli
