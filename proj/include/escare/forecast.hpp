#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "escare/estimate_ml.hpp"
#include "escare/mcmc.hpp"
#include "escare/models.hpp"
#include "escare/series.hpp"

namespace escare {

struct ForecastRecord {
  std::string date;
  std::string model;
  double alpha = 0.01;
  double var = 0.0;
  double es = 0.0;
};

void write_forecast_csv(const std::string& path, const std::vector<ForecastRecord>& records);
std::vector<ForecastRecord> read_forecast_csv(const std::string& path);

enum class Estimator { Ml, Mcmc };

struct RollingConfig {
  std::size_t window_n = 1000;
  std::size_t refit_every = 1;  // 1 = refit at every forecast step
  Estimator estimator = Estimator::Ml;
  MlConfig ml;
  McmcConfig mcmc;
  int threads = 1;
  std::string model_id;  // defaults to the family name
};

struct RollingResult {
  std::vector<ForecastRecord> records;
  std::vector<std::size_t> skipped_steps;  // fit failures
  std::vector<std::string> warnings;
};

/// One-step-ahead forecasts for every observed day after the first window.
/// Parameters are refit every `refit_every` steps and reused in between; the
/// risk recursion itself is re-run on each window either way.
RollingResult rolling_forecast(const ModelSpec& spec, const ReturnSeries& series,
                               const RollingConfig& config);

}  // namespace escare
