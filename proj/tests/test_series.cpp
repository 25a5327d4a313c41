#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "escare/series.hpp"

using namespace escare;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_SUITE_BEGIN("series");

TEST_CASE("load_daily accepts the returns schema row for row") {
  const auto p = write_temp("s_ret.csv",
                            "date,return\n2020-01-02,0.5\n2020-01-03,-1.2\n2020-01-06,0.1\n");
  const auto s = load_daily(p);
  CHECK(s.size() == 3);
  CHECK(s.dates.front() == "2020-01-02");
  CHECK(s.returns[1] == doctest::Approx(-1.2));
}

TEST_CASE("load_daily rejects non-monotone dates") {
  const auto p = write_temp("s_dup.csv", "date,return\n2020-01-02,0.5\n2020-01-02,0.1\n");
  CHECK_THROWS_WITH_AS(load_daily(p), doctest::Contains("non-monotone dates"), std::runtime_error);
}

TEST_CASE("load_daily keeps measure columns aligned") {
  const auto p = write_temp(
      "s_meas.csv", "date,return,rv\n2020-01-02,0.5,1.1\n2020-01-03,-1.2,0.9\n2020-01-06,0.1,1.4\n");
  const auto s = load_daily(p);
  REQUIRE(s.has_measure("rv"));
  CHECK(s.measure("rv").size() == 3);
  CHECK(s.measure("rv")[2] == doctest::Approx(1.4));
}

TEST_CASE("load_daily close schema differences prices and drops the first measure row") {
  const auto p = write_temp(
      "s_close.csv", "date,close,rv\n2020-01-02,100,1.0\n2020-01-03,101,2.0\n2020-01-06,99,3.0\n");
  const auto s = load_daily(p);
  REQUIRE(s.size() == 2);
  CHECK(s.dates.front() == "2020-01-03");
  CHECK(s.returns[0] == doctest::Approx(100.0 * std::log(1.01)));
  CHECK(s.measure("rv") == std::vector<double>{2.0, 3.0});

  const auto bad = write_temp("s_close_bad.csv",
                              "date,close,rv\n2020-01-02,100,1.0\n2020-01-03,101,-2.0\n");
  CHECK_THROWS_WITH_AS(load_daily(bad), doctest::Contains("strictly positive"),
                       std::runtime_error);
}

TEST_CASE("load_daily reports the offending line") {
  const auto p = write_temp("s_badnum.csv", "date,return\n2020-01-02,0.5\n2020-01-03,oops\n");
  CHECK_THROWS_WITH_AS(load_daily(p), doctest::Contains("line 3"), std::runtime_error);
  const auto missing = write_temp("s_missing.csv", "date,return\n2020-01-02,0.5\n2020-01-03,\n");
  CHECK_THROWS_AS(load_daily(missing), std::runtime_error);
}

TEST_CASE("compute_returns") {
  CHECK(compute_returns(std::vector<double>{100.0, 100.0})[0] == doctest::Approx(0.0));
  CHECK(compute_returns(std::vector<double>{100.0, 101.0})[0] ==
        doctest::Approx(0.99503).epsilon(1e-5));
  CHECK_THROWS_AS(compute_returns(std::vector<double>{100.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(compute_returns(std::vector<double>{100.0}), std::invalid_argument);
  // plain log-returns when the percent flag is off
  CHECK(compute_returns(std::vector<double>{100.0, 101.0}, false)[0] ==
        doctest::Approx(std::log(1.01)));
}

namespace {
ReturnSeries series_of_length(std::size_t n) {
  ReturnSeries s;
  for (std::size_t i = 0; i < n; ++i) {
    char d[16];
    std::snprintf(d, sizeof(d), "t%04zu", i);
    s.dates.push_back(d);
    s.returns.push_back(static_cast<double>(i));
  }
  return s;
}
}  // namespace

TEST_CASE("window slicing") {
  const auto s = series_of_length(10);
  const auto v = window(s, RollingWindow{5, 0});
  CHECK(v.in_sample.size() == 5);
  CHECK(v.in_sample.front() == doctest::Approx(0.0));
  CHECK(v.in_sample.back() == doctest::Approx(4.0));
  CHECK(v.forecast_index == 5);

  // last admissible window forecasts one past the observed sample
  const auto last = window(s, RollingWindow{5, 5});
  CHECK(last.forecast_index == 10);
  CHECK_THROWS_AS(window(s, RollingWindow{5, 6}), std::invalid_argument);
  CHECK_THROWS_AS(window(s, RollingWindow{1, 0}), std::invalid_argument);
}

TEST_CASE("windows tile the forecast period") {
  const auto s = series_of_length(23);
  const std::size_t n = 7;
  std::vector<std::size_t> fdays;
  for (std::size_t step = 0; step + n < s.size(); ++step) {
    const auto v = window(s, RollingWindow{n, step});
    // in-sample slice is contiguous and ends the day before the forecast day
    CHECK(v.in_sample.back() == doctest::Approx(static_cast<double>(v.forecast_index - 1)));
    fdays.push_back(v.forecast_index);
  }
  REQUIRE(fdays.size() == s.size() - n);
  for (std::size_t i = 0; i < fdays.size(); ++i) CHECK(fdays[i] == n + i);
}

TEST_CASE("intraday validation") {
  IntradayBars day;
  day.date = "2020-01-02";
  day.bar_interval_minutes = 1;
  day.bars = {{"09:30", 100.0, 100.5, 99.5, 100.2}, {"09:31", 100.2, 100.4, 100.0, 100.1}};
  CHECK_NOTHROW(day.validate());

  auto bad_ts = day;
  bad_ts.bars[1].timestamp = "09:30";
  CHECK_THROWS_AS(bad_ts.validate(), std::invalid_argument);

  auto bad_range = day;
  bad_range.bars[0].high = 99.0;  // below open
  CHECK_THROWS_AS(bad_range.validate(), std::invalid_argument);

  auto bad_price = day;
  bad_price.bars[0].low = -1.0;
  CHECK_THROWS_AS(bad_price.validate(), std::invalid_argument);
}

TEST_CASE("load_intraday groups rows by day") {
  const auto p = write_temp("s_intra.csv",
                            "date,timestamp,open,high,low,close\n"
                            "2020-01-02,09:30,100,101,99,100.5\n"
                            "2020-01-02,09:31,100.5,100.8,100.2,100.6\n"
                            "2020-01-03,09:30,100.6,101,100.4,100.9\n");
  const auto days = load_intraday(p, 1);
  REQUIRE(days.size() == 2);
  CHECK(days[0].bars.size() == 2);
  CHECK(days[1].bars.size() == 1);
  CHECK(days[1].date == "2020-01-03");
}

TEST_SUITE_END();
