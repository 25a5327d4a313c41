#pragma once

#include <span>
#include <string>
#include <vector>

#include "escare/series.hpp"

namespace escare {

enum class MeasureKind { RV, RR, ScRV, ScRR, SSRV, SSRR };

MeasureKind measure_kind_from_string(const std::string& s);
std::string to_string(MeasureKind k);

struct MeasureConfig {
  MeasureKind kind = MeasureKind::RV;
  int interval_minutes = 5;
  int scaling_lookback_q = 66;
  int subsample_offsets = 5;  // target interval / base grid for SSRV, SSRR
  bool scrr_parkinson_proxy = true;  // false: plain squared daily range for ScRR
};

/// Sum of squared percent log-returns over closes sampled at `interval_minutes`
/// (percent^2 units). Requires at least 2 sampled closes.
double realized_variance(const IntradayBars& day, int interval_minutes);

/// Parkinson-scaled sum of squared percent log high/low ranges per interval:
/// (1 / (4 ln 2)) * sum (100 ln(H/L))^2.
double realized_range(const IntradayBars& day, int interval_minutes);

/// Average of the plain measure over `offsets` shifted grids at the base
/// resolution. offsets = 1 reproduces the plain measure bit for bit.
double subsample_measure(const IntradayBars& day, int target_interval_minutes, int offsets,
                         MeasureKind base_kind);

struct ScaledSeries {
  std::vector<std::string> dates;  // days with >= q history only
  std::vector<double> values;
};

/// Sc_t = raw_t * sum_{l=1..q} proxy_{t-l} / sum_{l=1..q} raw_{t-l}.
/// The first q days are dropped. Throws on q >= length or a zero denominator.
ScaledSeries scale_measure(std::span<const std::string> dates, std::span<const double> raw,
                           std::span<const double> daily_proxy, int q);

/// Squared daily percent close-to-close return per day (first day dropped,
/// aligned with days[1..]).
std::vector<double> daily_return_sq_proxy(const std::vector<IntradayBars>& days);

/// Daily Parkinson range per day: (100 ln(Hday/Lday))^2 / (4 ln 2).
std::vector<double> daily_parkinson_proxy(const std::vector<IntradayBars>& days);

/// Full pipeline for a measure config over a set of intraday days; returns the
/// per-day series (dates may be a suffix of the inputs for scaled kinds).
ScaledSeries compute_measures(const std::vector<IntradayBars>& days, const MeasureConfig& cfg);

}  // namespace escare
