#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace escare {

/// One day of intraday bars on a fixed-minute grid.
struct IntradayBars {
  std::string date;
  int bar_interval_minutes = 1;
  struct Bar {
    std::string timestamp;
    double open = 0, high = 0, low = 0, close = 0;
  };
  std::vector<Bar> bars;

  /// Throws std::invalid_argument when timestamps are not strictly increasing,
  /// any price is non-positive, or high/low do not bracket open/close.
  void validate() const;
};

/// Daily percent log-returns with aligned dates and optional per-day measures.
struct ReturnSeries {
  std::vector<std::string> dates;
  std::vector<double> returns;
  std::map<std::string, std::vector<double>> measures;

  std::size_t size() const { return returns.size(); }
  bool has_measure(const std::string& id) const { return measures.count(id) != 0; }
  const std::vector<double>& measure(const std::string& id) const;
};

struct RollingWindow {
  std::size_t n = 0;     // in-sample size
  std::size_t step = 0;  // index of the first forecast day

  void validate(std::size_t series_len) const;  // n >= 2, step + n <= len
};

struct WindowView {
  std::span<const double> in_sample;
  std::size_t forecast_index = 0;  // == series length for the last admissible window
};

/// r_t = 100 * ln(p_t / p_{t-1}) when percent is set, plain log-return otherwise.
std::vector<double> compute_returns(std::span<const double> closes, bool percent = true);

/// Loads a daily CSV. Two schemas:
///   date,close[,measure...]  -> returns differenced from closes (length N-1),
///                               measure columns validated strictly positive;
///   date,return[,measure...] -> rows map 1:1 to series entries, measure columns
///                               validated finite only (simulator output schema).
/// Throws std::runtime_error with a line number on parse failures and on
/// non-monotone dates.
ReturnSeries load_daily(const std::string& path);

/// Loads `date,timestamp,open,high,low,close` rows grouped into per-day bars.
std::vector<IntradayBars> load_intraday(const std::string& path, int bar_interval_minutes);

/// In-sample slice [step, step+n) plus the forecast day index step+n.
WindowView window(const ReturnSeries& series, const RollingWindow& w);

}  // namespace escare
