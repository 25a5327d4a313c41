#include "escare/series.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace escare {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("parse error at line " + std::to_string(line_no) + ": bad " + what +
                             " value '" + s + "'");
  }
}

}  // namespace

void IntradayBars::validate() const {
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    if (!(b.open > 0 && b.high > 0 && b.low > 0 && b.close > 0))
      throw std::invalid_argument("intraday bars: non-positive price on " + date);
    if (b.high < std::max(b.open, b.close) || b.low > std::min(b.open, b.close))
      throw std::invalid_argument("intraday bars: high/low do not bracket open/close on " + date);
    if (i > 0 && !(bars[i - 1].timestamp < b.timestamp))
      throw std::invalid_argument("intraday bars: timestamps not strictly increasing on " + date);
  }
}

const std::vector<double>& ReturnSeries::measure(const std::string& id) const {
  auto it = measures.find(id);
  if (it == measures.end()) throw std::invalid_argument("missing measure column '" + id + "'");
  return it->second;
}

void RollingWindow::validate(std::size_t series_len) const {
  if (n < 2) throw std::invalid_argument("rolling window: n must be >= 2");
  if (step + n > series_len) throw std::invalid_argument("rolling window: step out of range");
}

std::vector<double> compute_returns(std::span<const double> closes, bool percent) {
  if (closes.size() < 2) throw std::invalid_argument("compute_returns: need at least 2 prices");
  std::vector<double> r(closes.size() - 1);
  const double scale = percent ? 100.0 : 1.0;
  for (std::size_t i = 1; i < closes.size(); ++i) {
    if (!(closes[i] > 0.0) || !(closes[i - 1] > 0.0))
      throw std::invalid_argument("compute_returns: non-positive price");
    r[i - 1] = scale * std::log(closes[i] / closes[i - 1]);
  }
  return r;
}

ReturnSeries load_daily(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "': empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "date")
    throw std::runtime_error("'" + path + "': expected header date,close[,...] or date,return[,...]");
  const bool close_schema = header[1] == "close";
  if (!close_schema && header[1] != "return")
    throw std::runtime_error("'" + path + "': second column must be 'close' or 'return'");

  std::vector<std::string> measure_names(header.begin() + 2, header.end());
  std::vector<std::string> dates;
  std::vector<double> values;
  std::vector<std::vector<double>> mcols(measure_names.size());

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("parse error at line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " columns, got " +
                               std::to_string(cells.size()));
    for (const auto& c : cells)
      if (c.empty())
        throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                 ": missing value");
    if (!dates.empty() && !(dates.back() < cells[0]))
      throw std::runtime_error("non-monotone dates at line " + std::to_string(line_no) + " ('" +
                               cells[0] + "' after '" + dates.back() + "')");
    dates.push_back(cells[0]);
    values.push_back(parse_number(cells[1], line_no, header[1]));
    for (std::size_t j = 0; j < measure_names.size(); ++j) {
      const double v = parse_number(cells[2 + j], line_no, measure_names[j]);
      if (!std::isfinite(v))
        throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                 ": non-finite measure");
      if (close_schema && !(v > 0.0))
        throw std::runtime_error("invalid measure at line " + std::to_string(line_no) + ": '" +
                                 measure_names[j] + "' must be strictly positive");
      mcols[j].push_back(v);
    }
  }

  ReturnSeries out;
  if (close_schema) {
    if (values.size() < 2) throw std::runtime_error("'" + path + "': need at least 2 close rows");
    for (double p : values)
      if (!(p > 0.0)) throw std::runtime_error("'" + path + "': non-positive close price");
    out.returns = compute_returns(values, true);
    out.dates.assign(dates.begin() + 1, dates.end());
    for (std::size_t j = 0; j < measure_names.size(); ++j)
      out.measures[measure_names[j]] =
          std::vector<double>(mcols[j].begin() + 1, mcols[j].end());
  } else {
    out.dates = std::move(dates);
    out.returns = std::move(values);
    for (std::size_t j = 0; j < measure_names.size(); ++j)
      out.measures[measure_names[j]] = std::move(mcols[j]);
  }
  return out;
}

std::vector<IntradayBars> load_intraday(const std::string& path, int bar_interval_minutes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "': empty file");
  const auto header = split_csv_line(line);
  const std::vector<std::string> want = {"date", "timestamp", "open", "high", "low", "close"};
  if (std::vector<std::string>(header.begin(), header.end()) != want)
    throw std::runtime_error("'" + path + "': expected header date,timestamp,open,high,low,close");

  std::vector<IntradayBars> days;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 6)
      throw std::runtime_error("parse error at line " + std::to_string(line_no));
    if (days.empty() || days.back().date != cells[0]) {
      if (!days.empty() && !(days.back().date < cells[0]))
        throw std::runtime_error("non-monotone dates at line " + std::to_string(line_no));
      days.push_back(IntradayBars{cells[0], bar_interval_minutes, {}});
    }
    IntradayBars::Bar b;
    b.timestamp = cells[1];
    b.open = parse_number(cells[2], line_no, "open");
    b.high = parse_number(cells[3], line_no, "high");
    b.low = parse_number(cells[4], line_no, "low");
    b.close = parse_number(cells[5], line_no, "close");
    days.back().bars.push_back(b);
  }
  for (const auto& d : days) d.validate();
  return days;
}

WindowView window(const ReturnSeries& series, const RollingWindow& w) {
  w.validate(series.size());
  return WindowView{std::span<const double>(series.returns).subspan(w.step, w.n), w.step + w.n};
}

}  // namespace escare
