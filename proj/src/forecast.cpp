#include "escare/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace escare {

void write_forecast_csv(const std::string& path, const std::vector<ForecastRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "date,model,alpha,var,es\n";
  char row[256];
  for (const auto& r : records) {
    std::snprintf(row, sizeof(row), "%s,%s,%.10g,%.12g,%.12g\n", r.date.c_str(), r.model.c_str(),
                  r.alpha, r.var, r.es);
    out << row;
  }
}

std::vector<ForecastRecord> read_forecast_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "': empty file");
  {
    std::string h = line;
    if (!h.empty() && h.back() == '\r') h.pop_back();
    if (h != "date,model,alpha,var,es")
      throw std::runtime_error("'" + path + "': expected header date,model,alpha,var,es");
  }
  std::vector<ForecastRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    ForecastRecord r;
    std::string cell;
    try {
      std::getline(ss, r.date, ',');
      std::getline(ss, r.model, ',');
      std::getline(ss, cell, ',');
      r.alpha = std::stod(cell);
      std::getline(ss, cell, ',');
      r.var = std::stod(cell);
      std::getline(ss, cell, ',');
      r.es = std::stod(cell);
    } catch (const std::exception&) {
      throw std::runtime_error("'" + path + "': parse error at line " + std::to_string(line_no));
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct Segment {
  std::size_t fit_step;
  std::size_t end_step;  // exclusive
};

}  // namespace

RollingResult rolling_forecast(const ModelSpec& spec, const ReturnSeries& series,
                               const RollingConfig& config) {
  spec.validate();
  const std::size_t len = series.size();
  const std::size_t n = config.window_n;
  if (len < n + 1) throw std::invalid_argument("rolling_forecast: series shorter than window + 1");
  const std::size_t m = len - n;  // forecasts for observed days only
  const std::size_t refit = std::max<std::size_t>(1, config.refit_every);
  const std::vector<double>* meas = nullptr;
  if (family_uses_measure(spec.family)) meas = &series.measure(spec.measure_id);

  const std::string model_id = config.model_id.empty() ? to_string(spec.family) : config.model_id;

  std::vector<Segment> segments;
  for (std::size_t s = 0; s < m; s += refit) segments.push_back({s, std::min(m, s + refit)});

  RollingResult result;
  result.records.assign(m, ForecastRecord{});
  std::vector<char> ok(m, 0);
  std::mutex warn_mu;

  auto run_segment = [&](const Segment& seg, std::uint64_t seed_index) {
    const RollingWindow w{n, seg.fit_step};
    const auto view = window(series, w);
    std::span<const double> xw;
    if (meas) xw = std::span<const double>(*meas).subspan(seg.fit_step, n);

    ParamVector params;
    try {
      if (config.estimator == Estimator::Ml) {
        MlConfig mc = config.ml;
        mc.seed = stats::Rng::stream_seed(config.ml.seed, seed_index);
        params = fit_ml(spec, view.in_sample, xw, mc).params;
      } else {
        McmcConfig mc = config.mcmc;
        mc.seed = stats::Rng::stream_seed(config.mcmc.seed, seed_index);
        params = fit_mcmc(spec, view.in_sample, xw, mc).params;
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(warn_mu);
      for (std::size_t s = seg.fit_step; s < seg.end_step; ++s) result.skipped_steps.push_back(s);
      result.warnings.push_back("fit failed at step " + std::to_string(seg.fit_step) + ": " +
                                e.what());
      return;
    }

    RiskPath path;
    for (std::size_t s = seg.fit_step; s < seg.end_step; ++s) {
      const RollingWindow ws{n, s};
      const auto vw = window(series, ws);
      std::span<const double> xs;
      if (meas) xs = std::span<const double>(*meas).subspan(s, n);
      run_path(spec, params, vw.in_sample, xs, path);
      if (!path.valid) {
        std::lock_guard<std::mutex> lock(warn_mu);
        result.skipped_steps.push_back(s);
        result.warnings.push_back("invalid in-sample path at step " + std::to_string(s));
        continue;
      }
      const double last_r = vw.in_sample.back();
      const double last_x = meas ? xs.back() : 0.0;
      const OneStep f = forecast_one_step(spec, params, path, last_r, last_x);
      ForecastRecord rec;
      rec.date = series.dates[vw.forecast_index];
      rec.model = model_id;
      rec.alpha = spec.alpha;
      rec.var = f.var;
      rec.es = f.es;
      result.records[s] = std::move(rec);
      ok[s] = 1;
    }
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1 || segments.size() == 1) {
    for (std::size_t i = 0; i < segments.size(); ++i) run_segment(segments[i], i);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex mu;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= segments.size()) return;
            i = next++;
          }
          run_segment(segments[i], i);
        }
      });
    for (auto& th : pool) th.join();
  }

  // compact to successful records, preserving day order
  std::vector<ForecastRecord> kept;
  kept.reserve(m);
  for (std::size_t s = 0; s < m; ++s)
    if (ok[s]) kept.push_back(std::move(result.records[s]));
  result.records = std::move(kept);
  std::sort(result.skipped_steps.begin(), result.skipped_steps.end());
  return result;
}

}  // namespace escare
