#include "escare/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace escare {

namespace {

constexpr double kParkinson = 0.36067376022224085;  // 1 / (4 ln 2)

int grid_step(const IntradayBars& day, int interval_minutes) {
  if (interval_minutes <= 0 || day.bar_interval_minutes <= 0 ||
      interval_minutes % day.bar_interval_minutes != 0)
    throw std::invalid_argument("measure interval must be a multiple of the bar grid");
  return interval_minutes / day.bar_interval_minutes;
}

double rv_on_grid(const IntradayBars& day, int step, int offset) {
  double sum = 0.0;
  double prev = -1.0;
  int count = 0;
  for (std::size_t i = offset; i < day.bars.size(); i += step) {
    const double c = day.bars[i].close;
    if (count > 0) {
      const double r = 100.0 * std::log(c / prev);
      sum += r * r;
    }
    prev = c;
    ++count;
  }
  if (count < 2) throw std::invalid_argument("realized_variance: insufficient bars on " + day.date);
  return sum;
}

double rr_on_grid(const IntradayBars& day, int step, int offset) {
  if (day.bars.empty()) throw std::invalid_argument("realized_range: no bars on " + day.date);
  double sum = 0.0;
  std::size_t i = offset;
  bool any = false;
  while (i < day.bars.size()) {
    double hi = 0.0, lo = 0.0;
    const std::size_t end = std::min(day.bars.size(), i + static_cast<std::size_t>(step));
    for (std::size_t j = i; j < end; ++j) {
      hi = (j == i) ? day.bars[j].high : std::max(hi, day.bars[j].high);
      lo = (j == i) ? day.bars[j].low : std::min(lo, day.bars[j].low);
    }
    const double lr = 100.0 * std::log(hi / lo);
    sum += lr * lr;
    any = true;
    i = end;
  }
  if (!any) throw std::invalid_argument("realized_range: insufficient bars on " + day.date);
  return kParkinson * sum;
}

}  // namespace

MeasureKind measure_kind_from_string(const std::string& s) {
  if (s == "rv") return MeasureKind::RV;
  if (s == "rr") return MeasureKind::RR;
  if (s == "scrv") return MeasureKind::ScRV;
  if (s == "scrr") return MeasureKind::ScRR;
  if (s == "ssrv") return MeasureKind::SSRV;
  if (s == "ssrr") return MeasureKind::SSRR;
  throw std::invalid_argument("unknown measure kind '" + s + "'");
}

std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::RV: return "rv";
    case MeasureKind::RR: return "rr";
    case MeasureKind::ScRV: return "scrv";
    case MeasureKind::ScRR: return "scrr";
    case MeasureKind::SSRV: return "ssrv";
    case MeasureKind::SSRR: return "ssrr";
  }
  return "?";
}

double realized_variance(const IntradayBars& day, int interval_minutes) {
  day.validate();
  return rv_on_grid(day, grid_step(day, interval_minutes), 0);
}

double realized_range(const IntradayBars& day, int interval_minutes) {
  day.validate();
  return rr_on_grid(day, grid_step(day, interval_minutes), 0);
}

double subsample_measure(const IntradayBars& day, int target_interval_minutes, int offsets,
                         MeasureKind base_kind) {
  day.validate();
  const int step = grid_step(day, target_interval_minutes);
  if (offsets < 1 || offsets > step)
    throw std::invalid_argument("subsample offsets must lie in [1, target/base]");
  const bool rv = base_kind == MeasureKind::RV || base_kind == MeasureKind::SSRV ||
                  base_kind == MeasureKind::ScRV;
  double sum = 0.0;
  for (int o = 0; o < offsets; ++o)
    sum += rv ? rv_on_grid(day, step, o) : rr_on_grid(day, step, o);
  return sum / static_cast<double>(offsets);
}

ScaledSeries scale_measure(std::span<const std::string> dates, std::span<const double> raw,
                           std::span<const double> daily_proxy, int q) {
  if (raw.size() != daily_proxy.size() || (!dates.empty() && dates.size() != raw.size()))
    throw std::invalid_argument("scale_measure: series not aligned");
  if (q < 1) throw std::invalid_argument("scale_measure: q must be >= 1");
  if (static_cast<std::size_t>(q) >= raw.size())
    throw std::invalid_argument("scale_measure: fewer than q prior days for every day");
  ScaledSeries out;
  for (std::size_t t = q; t < raw.size(); ++t) {
    double num = 0.0, den = 0.0;
    for (int l = 1; l <= q; ++l) {
      num += daily_proxy[t - l];
      den += raw[t - l];
    }
    if (den == 0.0) throw std::invalid_argument("scale_measure: zero denominator at day " +
                                                (dates.empty() ? std::to_string(t) : dates[t]));
    out.values.push_back(raw[t] * num / den);
    if (!dates.empty()) out.dates.push_back(dates[t]);
  }
  return out;
}

std::vector<double> daily_return_sq_proxy(const std::vector<IntradayBars>& days) {
  if (days.size() < 2) throw std::invalid_argument("daily_return_sq_proxy: need >= 2 days");
  std::vector<double> out;
  for (std::size_t i = 1; i < days.size(); ++i) {
    const double prev = days[i - 1].bars.back().close;
    const double cur = days[i].bars.back().close;
    const double r = 100.0 * std::log(cur / prev);
    out.push_back(r * r);
  }
  return out;
}

std::vector<double> daily_parkinson_proxy(const std::vector<IntradayBars>& days) {
  std::vector<double> out;
  for (const auto& d : days) {
    if (d.bars.empty()) throw std::invalid_argument("daily_parkinson_proxy: empty day " + d.date);
    double hi = d.bars[0].high, lo = d.bars[0].low;
    for (const auto& b : d.bars) {
      hi = std::max(hi, b.high);
      lo = std::min(lo, b.low);
    }
    const double lr = 100.0 * std::log(hi / lo);
    out.push_back(kParkinson * lr * lr);
  }
  return out;
}

ScaledSeries compute_measures(const std::vector<IntradayBars>& days, const MeasureConfig& cfg) {
  ScaledSeries out;
  std::vector<double> raw;
  raw.reserve(days.size());
  std::vector<std::string> dates;
  for (const auto& d : days) {
    dates.push_back(d.date);
    switch (cfg.kind) {
      case MeasureKind::RV:
      case MeasureKind::ScRV:
        raw.push_back(realized_variance(d, cfg.interval_minutes));
        break;
      case MeasureKind::RR:
      case MeasureKind::ScRR:
        raw.push_back(realized_range(d, cfg.interval_minutes));
        break;
      case MeasureKind::SSRV:
      case MeasureKind::SSRR:
        raw.push_back(subsample_measure(d, cfg.interval_minutes, cfg.subsample_offsets, cfg.kind));
        break;
    }
  }
  if (cfg.kind == MeasureKind::ScRV || cfg.kind == MeasureKind::ScRR) {
    // proxies use one fewer day (close-to-close return); align raw to days[1..]
    std::vector<double> proxy = cfg.kind == MeasureKind::ScRV
                                    ? daily_return_sq_proxy(days)
                                    : daily_parkinson_proxy(days);
    if (cfg.kind == MeasureKind::ScRR && !cfg.scrr_parkinson_proxy)
      for (auto& v : proxy) v /= kParkinson;  // back to the plain squared range
    std::vector<double> raw_al(raw.begin() + (cfg.kind == MeasureKind::ScRV ? 1 : 0), raw.end());
    std::vector<std::string> dates_al(dates.begin() + (cfg.kind == MeasureKind::ScRV ? 1 : 0),
                                      dates.end());
    if (cfg.kind == MeasureKind::ScRR) proxy.resize(raw_al.size());
    return scale_measure(dates_al, raw_al, proxy, cfg.scaling_lookback_q);
  }
  out.dates = std::move(dates);
  out.values = std::move(raw);
  return out;
}

}  // namespace escare
