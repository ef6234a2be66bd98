// SPDX-License-Identifier: Apache-2.0
#include "favf/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <ostream>

#include "favf/csv.hpp"
#include "favf/error.hpp"

namespace favf::ingest {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (n % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), mid));
  }
  return m;
}

constexpr std::int64_t kMsPerDay = 86'400'000;

std::int64_t local_day_index(std::int64_t ts_ms, int utc_offset_minutes) {
  const std::int64_t local = ts_ms + static_cast<std::int64_t>(utc_offset_minutes) * 60'000;
  return local >= 0 ? local / kMsPerDay : -((-local + kMsPerDay - 1) / kMsPerDay);
}

}  // namespace

std::vector<QuoteRecord> filter_quotes(std::span<const QuoteRecord> raw, const SpuriousFilter& rule,
                                       FilterReport* report) {
  FilterReport r;
  r.input = raw.size();
  std::vector<QuoteRecord> out;
  out.reserve(raw.size());
  std::deque<double> history;
  std::vector<double> scratch;

  for (const auto& q : raw) {
    if (!(q.bid > 0.0) || !(q.ask > 0.0)) {
      ++r.non_positive;
      continue;
    }
    if (q.ask < q.bid) {
      ++r.crossed;
      continue;
    }
    if (!out.empty() && q.timestamp_ms <= out.back().timestamp_ms) {
      ++r.non_increasing_time;
      continue;
    }
    const double mid = q.mid();
    if (history.size() >= std::max<std::size_t>(rule.min_history, 1)) {
      scratch.assign(history.begin(), history.end());
      const double med = median_of(scratch);
      for (auto& x : scratch) x = std::abs(x - med);
      const double mad = std::max(median_of(scratch), rule.mad_floor_fraction * std::abs(med));
      if (std::abs(mid - med) > rule.mad_multiple * mad) {
        ++r.spurious;
        continue;
      }
    }
    out.push_back(q);
    history.push_back(mid);
    if (history.size() > rule.window) history.pop_front();
  }
  r.kept = out.size();
  if (report) *report = r;
  return out;
}

int SessionSpec::intervals() const {
  if (interval_seconds <= 0) throw Error("session interval must be positive");
  const int length = close_seconds - open_seconds;
  if (length <= 0 || length % interval_seconds != 0) {
    throw Error("session length must be a positive multiple of the interval");
  }
  return length / interval_seconds;
}

MidpointGrid sample_midpoints(std::span<const QuoteRecord> quotes, const SessionSpec& session, Date day) {
  const int n = session.intervals();
  MidpointGrid grid;
  grid.session = day;
  grid.interval_seconds = session.interval_seconds;

  const std::int64_t open_utc = date_to_ms(day) +
                                (static_cast<std::int64_t>(session.open_seconds) - session.utc_offset_minutes * 60LL) * 1000;
  const std::int64_t step = static_cast<std::int64_t>(session.interval_seconds) * 1000;

  std::size_t next = 0;
  bool have = false;
  double last_mid = 0.0;
  for (int j = 0; j <= n; ++j) {
    const std::int64_t g = open_utc + j * step;
    while (next < quotes.size() && quotes[next].timestamp_ms <= g) {
      last_mid = quotes[next].mid();
      have = true;
      ++next;
    }
    if (have) grid.ticks.push_back({g, last_mid});
  }
  if (grid.ticks.empty()) throw Error("empty session");
  return grid;
}

DailyRv compute_daily_rv(const MidpointGrid& grid) {
  if (grid.ticks.size() < 2) throw Error("insufficient ticks");
  double ss = 0.0;
  for (std::size_t s = 1; s < grid.ticks.size(); ++s) {
    const double r = std::log(grid.ticks[s].mid / grid.ticks[s - 1].mid);
    ss += r * r;
  }
  return {grid.session, std::sqrt(ss)};
}

VolSeries aggregate_rv(const VolSeries& daily, int h) {
  if (h < 1) throw Error("aggregation horizon must be >= 1");
  const auto hs = static_cast<std::size_t>(h);
  if (daily.size() < hs) throw Error("aggregate_rv: series shorter than horizon");
  VolSeries out;
  out.asset = daily.asset;
  out.horizon = h;
  out.dates.reserve(daily.size() - hs + 1);
  out.rv.reserve(daily.size() - hs + 1);
  for (std::size_t t = hs - 1; t < daily.size(); ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < hs; ++j) s += daily.rv[t - j];
    out.dates.push_back(daily.dates[t]);
    out.rv.push_back(s / h);
  }
  return out;
}

VolSeries VolPanel::column(std::size_t asset) const {
  VolSeries s;
  s.asset = assets.at(asset);
  s.dates = dates;
  s.rv.resize(rows());
  for (std::size_t t = 0; t < rows(); ++t) s.rv[t] = values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(asset));
  return s;
}

std::size_t VolPanel::asset_index(const std::string& name) const {
  const auto it = std::find(assets.begin(), assets.end(), name);
  if (it == assets.end()) throw Error("unknown asset '" + name + "'");
  return static_cast<std::size_t>(it - assets.begin());
}

PanelLoad parse_rv_panel(std::istream& in, const std::string& source_name) {
  const auto table = csv::parse(in, source_name);
  if (table.header.size() < 2 || table.header[0] != "date") {
    throw Error(source_name + ": expected header 'date,ASSET1,...'");
  }
  PanelLoad result;
  auto& panel = result.panel;
  panel.assets.assign(table.header.begin() + 1, table.header.end());
  const std::size_t p = panel.assets.size();

  std::vector<double> flat;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = [&](std::size_t c) {
      return source_name + ":" + std::to_string(table.line_numbers[r]) + " column '" + table.header[c] + "'";
    };
    Date d;
    try {
      d = parse_date(row[0]);
    } catch (const Error& e) {
      throw Error(where(0) + ": " + e.what());
    }
    if (!panel.dates.empty() && d <= panel.dates.back()) {
      throw Error(where(0) + ": dates must be strictly increasing");
    }
    bool missing = false;
    std::vector<double> values(p);
    for (std::size_t c = 1; c <= p; ++c) {
      const auto& cell = row[c];
      if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
        missing = true;
        continue;
      }
      double v = 0.0;
      if (!csv::parse_double(cell, v)) throw Error(where(c) + ": non-numeric value '" + cell + "'");
      if (v < 0.0) throw Error(where(c) + ": negative realized volatility " + cell);
      values[c - 1] = v;
    }
    if (missing) {
      result.dropped.push_back({d, "missing value"});
      continue;
    }
    panel.dates.push_back(d);
    flat.insert(flat.end(), values.begin(), values.end());
  }
  panel.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), static_cast<Eigen::Index>(panel.dates.size()), static_cast<Eigen::Index>(p));
  return result;
}

PanelLoad load_rv_panel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_rv_panel(in, path.string());
}

void write_rv_panel(std::ostream& out, const VolPanel& panel) {
  out << "date";
  for (const auto& a : panel.assets) out << ',' << a;
  out << '\n';
  for (std::size_t t = 0; t < panel.rows(); ++t) {
    out << format_date(panel.dates[t]);
    for (std::size_t j = 0; j < panel.cols(); ++j) {
      out << ',' << csv::format_double(panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

PanelLoad align_series(std::span<const VolSeries> series) {
  if (series.empty()) throw Error("align_series: no series");
  std::map<Date, std::vector<double>> by_date;
  for (std::size_t j = 0; j < series.size(); ++j) {
    for (std::size_t t = 0; t < series[j].size(); ++t) {
      auto& slot = by_date[series[j].dates[t]];
      slot.resize(series.size(), std::nan(""));
      slot[j] = series[j].rv[t];
    }
  }
  PanelLoad result;
  auto& panel = result.panel;
  for (const auto& s : series) panel.assets.push_back(s.asset);
  std::vector<double> flat;
  for (const auto& [d, vals] : by_date) {
    if (std::any_of(vals.begin(), vals.end(), [](double v) { return std::isnan(v); })) {
      result.dropped.push_back({d, "missing asset"});
      continue;
    }
    panel.dates.push_back(d);
    flat.insert(flat.end(), vals.begin(), vals.end());
  }
  panel.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), static_cast<Eigen::Index>(panel.dates.size()), static_cast<Eigen::Index>(series.size()));
  return result;
}

std::vector<QuoteRecord> load_quotes(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto ts = table.column("timestamp_ms");
  const auto bid = table.column("bid");
  const auto ask = table.column("ask");
  std::vector<QuoteRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    QuoteRecord q;
    double t = 0.0;
    if (!csv::parse_double(row[ts], t) || !csv::parse_double(row[bid], q.bid) || !csv::parse_double(row[ask], q.ask)) {
      throw Error(path.string() + ":" + std::to_string(table.line_numbers[r]) + ": non-numeric quote field");
    }
    q.timestamp_ms = static_cast<std::int64_t>(t);
    out.push_back(q);
  }
  return out;
}

VolSeries realized_volatility(const std::string& asset, std::span<const QuoteRecord> quotes,
                              const SessionSpec& session) {
  VolSeries out;
  out.asset = asset;
  std::size_t begin = 0;
  while (begin < quotes.size()) {
    const auto day = local_day_index(quotes[begin].timestamp_ms, session.utc_offset_minutes);
    std::size_t end = begin;
    while (end < quotes.size() && local_day_index(quotes[end].timestamp_ms, session.utc_offset_minutes) == day) ++end;
    // Continuous markets carry the previous day's last quote into midnight.
    const std::size_t first = (session.kind == SessionSpec::Kind::continuous && begin > 0) ? begin - 1 : begin;
    const Date d{std::chrono::days{day}};
    try {
      const auto grid = sample_midpoints(quotes.subspan(first, end - first), session, d);
      if (grid.ticks.size() >= 2) {
        const auto rv = compute_daily_rv(grid);
        out.dates.push_back(rv.date);
        out.rv.push_back(rv.rv);
      }
    } catch (const Error&) {
      // Quotes only after the close: no session that day.
    }
    begin = end;
  }
  return out;
}

}  // namespace favf::ingest
