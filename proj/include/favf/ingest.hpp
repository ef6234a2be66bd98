// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "favf/date.hpp"

namespace favf::ingest {

struct QuoteRecord {
  std::int64_t timestamp_ms = 0;
  double bid = 0.0;
  double ask = 0.0;

  double mid() const { return 0.5 * (bid + ask); }
  friend bool operator==(const QuoteRecord&, const QuoteRecord&) = default;
};

/// Robust outlier rule: a quote is spurious when its midpoint is further than
/// `mad_multiple` rolling median absolute deviations from the rolling median
/// of the previous `window` accepted midpoints.
struct SpuriousFilter {
  std::size_t window = 50;
  double mad_multiple = 10.0;
  /// The rule is only applied once this many accepted midpoints exist.
  std::size_t min_history = 50;
  /// Lower bound on the MAD as a fraction of the median, so a stretch of
  /// identical quotes does not reject the first genuine price change.
  double mad_floor_fraction = 1e-4;
};

struct FilterReport {
  std::size_t input = 0;
  std::size_t non_positive = 0;
  std::size_t crossed = 0;
  std::size_t non_increasing_time = 0;
  std::size_t spurious = 0;
  std::size_t kept = 0;
};

/// Drops non-positive, crossed, out-of-order and spurious quotes. The output
/// is a subsequence of `raw`.
std::vector<QuoteRecord> filter_quotes(std::span<const QuoteRecord> raw, const SpuriousFilter& rule = {},
                                       FilterReport* report = nullptr);

struct SessionSpec {
  enum class Kind { equity, continuous };
  Kind kind = Kind::equity;
  /// Session open/close as seconds after local midnight (equity only).
  int open_seconds = 9 * 3600 + 30 * 60;
  int close_seconds = 16 * 3600;
  /// Exchange-local offset from UTC in minutes (e.g. -300 for US/Eastern in winter).
  int utc_offset_minutes = 0;
  int interval_seconds = 300;

  static SessionSpec equity(int utc_offset_minutes = 0) {
    SessionSpec s;
    s.utc_offset_minutes = utc_offset_minutes;
    return s;
  }
  static SessionSpec crypto() {
    SessionSpec s;
    s.kind = Kind::continuous;
    s.open_seconds = 0;
    s.close_seconds = 24 * 3600;
    return s;
  }

  /// Number of sampling intervals in one session.
  int intervals() const;
};

struct GridTick {
  std::int64_t time_ms = 0;
  double mid = 0.0;
};

struct MidpointGrid {
  Date session{};
  int interval_seconds = 300;
  std::vector<GridTick> ticks;
};

/// Previous-tick sampling of midpoints on the session's fixed grid. Grid
/// times before the first quote are omitted.
MidpointGrid sample_midpoints(std::span<const QuoteRecord> quotes, const SessionSpec& session, Date day);

struct DailyRv {
  Date date{};
  double rv = 0.0;
};

/// Square root of the sum of squared log returns between consecutive grid midpoints.
DailyRv compute_daily_rv(const MidpointGrid& grid);

struct VolSeries {
  std::string asset;
  /// 1 for daily RV, h for an h-observation trailing average.
  int horizon = 1;
  std::vector<Date> dates;
  std::vector<double> rv;

  std::size_t size() const { return rv.size(); }
};

/// Trailing h-observation mean; the first h-1 dates are omitted.
VolSeries aggregate_rv(const VolSeries& daily, int h);

struct VolPanel {
  std::vector<Date> dates;
  std::vector<std::string> assets;
  Eigen::MatrixXd values;  // dates.size() x assets.size()

  std::size_t rows() const { return dates.size(); }
  std::size_t cols() const { return assets.size(); }
  VolSeries column(std::size_t asset) const;
  std::size_t asset_index(const std::string& name) const;
};

struct DroppedDate {
  Date date{};
  std::string reason;
};

struct PanelLoad {
  VolPanel panel;
  std::vector<DroppedDate> dropped;
};

/// Loads `date,ASSET1,ASSET2,...`. Rows with an empty or NA cell are dropped
/// and reported; non-numeric or negative cells are errors.
PanelLoad load_rv_panel(const std::filesystem::path& path);
PanelLoad parse_rv_panel(std::istream& in, const std::string& source_name);

void write_rv_panel(std::ostream& out, const VolPanel& panel);

/// Intersects per-asset daily series on common dates.
PanelLoad align_series(std::span<const VolSeries> series);

std::vector<QuoteRecord> load_quotes(const std::filesystem::path& path);

/// Splits time-sorted quotes into per-session RVs. Sessions with fewer than
/// two grid ticks are skipped.
VolSeries realized_volatility(const std::string& asset, std::span<const QuoteRecord> quotes,
                              const SessionSpec& session);

}  // namespace favf::ingest
