#include <stdexcept>
#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "escare/measures.hpp"

using namespace escare;

namespace {

// flat bars (open = high = low = close) at a given grid from close prices
IntradayBars day_from_closes(const std::vector<double>& closes, int grid_minutes) {
  IntradayBars day;
  day.date = "2020-01-02";
  day.bar_interval_minutes = grid_minutes;
  for (std::size_t i = 0; i < closes.size(); ++i) {
    char ts[16];
    std::snprintf(ts, sizeof(ts), "%03zu", i);
    day.bars.push_back({ts, closes[i], closes[i], closes[i], closes[i]});
  }
  return day;
}

}  // namespace

TEST_SUITE_BEGIN("measures");

TEST_CASE("realized variance") {
  CHECK(realized_variance(day_from_closes({100, 100, 100, 100}, 5), 5) == doctest::Approx(0.0));

  // two 5-minute percent log-returns of +1% and -2%
  const double p0 = 100.0;
  const auto day = day_from_closes({p0, p0 * std::exp(0.01), p0 * std::exp(-0.01)}, 5);
  CHECK(realized_variance(day, 5) == doctest::Approx(5.0).epsilon(1e-12));

  CHECK_THROWS_AS(realized_variance(day_from_closes({100.0}, 5), 5), std::invalid_argument);
  CHECK_THROWS_AS(realized_variance(day, 7), std::invalid_argument);  // grid mismatch
}

TEST_CASE("realized range") {
  CHECK(realized_range(day_from_closes({100, 101, 100}, 5), 5) == doctest::Approx(0.0));

  IntradayBars one;
  one.date = "2020-01-02";
  one.bar_interval_minutes = 5;
  const double lo = 100.0, hi = 100.0 * std::exp(0.01);
  one.bars = {{"000", lo, hi, lo, hi}};
  CHECK(realized_range(one, 5) == doctest::Approx(1.0 / (4.0 * std::log(2.0))).epsilon(1e-12));
  CHECK(realized_range(one, 5) == doctest::Approx(0.36067).epsilon(1e-4));

  auto crossed = one;
  crossed.bars[0].high = lo;
  crossed.bars[0].open = hi;  // high < open violates the bar invariant
  CHECK_THROWS_AS(realized_range(crossed, 5), std::invalid_argument);
}

TEST_CASE("scale_measure") {
  const std::vector<double> raw = {1.0, 2.0, 3.0, 4.0, 5.0};
  SUBCASE("proxy equal to raw is the identity") {
    const auto s = scale_measure({}, raw, raw, 2);
    REQUIRE(s.values.size() == 3);
    for (std::size_t i = 0; i < s.values.size(); ++i)
      CHECK(s.values[i] == doctest::Approx(raw[i + 2]));
  }
  SUBCASE("constant proxy/raw ratio scales by that ratio") {
    std::vector<double> proxy;
    for (double v : raw) proxy.push_back(2.0 * v);
    const auto s = scale_measure({}, raw, proxy, 3);
    for (std::size_t i = 0; i < s.values.size(); ++i)
      CHECK(s.values[i] == doctest::Approx(2.0 * raw[i + 3]));
  }
  SUBCASE("q as large as the series errors") {
    CHECK_THROWS_AS(scale_measure({}, raw, raw, 5), std::invalid_argument);
  }
  SUBCASE("zero denominator errors") {
    const std::vector<double> zraw = {0.0, 0.0, 1.0};
    CHECK_THROWS_AS(scale_measure({}, zraw, zraw, 2), std::invalid_argument);
  }
}

TEST_CASE("subsample_measure") {
  // offsets = 1 is bit-identical to the plain measure
  std::vector<double> closes;
  for (int i = 0; i < 30; ++i) closes.push_back(100.0 + 0.3 * i + 0.11 * ((i * 7) % 5));
  const auto day = day_from_closes(closes, 1);
  CHECK(subsample_measure(day, 5, 1, MeasureKind::SSRV) == realized_variance(day, 5));

  CHECK(subsample_measure(day_from_closes(std::vector<double>(30, 100.0), 1), 5, 5,
                          MeasureKind::SSRV) == doctest::Approx(0.0));

  // two offsets on a linear price path: brute-force both shifted grids
  std::vector<double> lin;
  for (int i = 0; i < 12; ++i) lin.push_back(100.0 + 0.5 * i);
  const auto lday = day_from_closes(lin, 1);
  auto grid_rv = [&](int offset) {
    double sum = 0.0, prev = -1.0;
    int count = 0;
    for (std::size_t i = offset; i < lin.size(); i += 3) {
      if (count > 0) {
        const double r = 100.0 * std::log(lin[i] / prev);
        sum += r * r;
      }
      prev = lin[i];
      ++count;
    }
    return sum;
  };
  CHECK(subsample_measure(lday, 3, 2, MeasureKind::SSRV) ==
        doctest::Approx(0.5 * (grid_rv(0) + grid_rv(1))).epsilon(1e-14));

  CHECK_THROWS_AS(subsample_measure(lday, 3, 4, MeasureKind::SSRV), std::invalid_argument);
}

TEST_CASE("measures are nonnegative and vanish only on constant prices") {
  std::vector<double> closes;
  for (int i = 0; i < 60; ++i) closes.push_back(100.0 * std::exp(0.001 * std::sin(0.7 * i)));
  const auto day = day_from_closes(closes, 1);
  for (auto kind : {MeasureKind::RV, MeasureKind::RR}) {
    const double v = kind == MeasureKind::RV ? realized_variance(day, 5) : realized_range(day, 5);
    CHECK(v > 0.0);
  }
  const auto flat = day_from_closes(std::vector<double>(60, 42.0), 1);
  CHECK(realized_variance(flat, 5) == doctest::Approx(0.0));
  CHECK(realized_range(flat, 5) == doctest::Approx(0.0));
}

TEST_CASE("compute_measures pipeline with scaling drops the warmup days") {
  std::vector<IntradayBars> days;
  for (int d = 0; d < 8; ++d) {
    std::vector<double> closes;
    for (int i = 0; i < 20; ++i)
      closes.push_back(100.0 + d + 0.2 * std::sin(1.3 * i + d));
    auto day = day_from_closes(closes, 1);
    char date[16];
    std::snprintf(date, sizeof(date), "2020-01-%02d", d + 2);
    day.date = date;
    days.push_back(day);
  }
  MeasureConfig cfg;
  cfg.kind = MeasureKind::ScRR;
  cfg.interval_minutes = 5;
  cfg.scaling_lookback_q = 3;
  const auto out = compute_measures(days, cfg);
  CHECK(out.values.size() == days.size() - 3);
  CHECK(out.dates.front() == days[3].date);

  cfg.kind = MeasureKind::SSRV;
  cfg.subsample_offsets = 5;
  const auto ss = compute_measures(days, cfg);
  CHECK(ss.values.size() == days.size());
  for (double v : ss.values) CHECK(v >= 0.0);

  // the plain-squared-range proxy rescales the scaled series by 4 ln 2
  cfg.kind = MeasureKind::ScRR;
  cfg.subsample_offsets = 1;
  cfg.scrr_parkinson_proxy = false;
  const auto plain = compute_measures(days, cfg);
  REQUIRE(plain.values.size() == out.values.size());
  for (std::size_t i = 0; i < plain.values.size(); ++i)
    CHECK(plain.values[i] ==
          doctest::Approx(out.values[i] * 4.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_SUITE_END();
