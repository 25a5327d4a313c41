#pragma once

#include <map>
#include <string>
#include <vector>

#include "escare/backtest.hpp"
#include "escare/forecast.hpp"
#include "escare/series.hpp"

namespace escare {

struct SeriesInput {
  std::string name;
  ReturnSeries returns;
  std::map<std::string, std::vector<ForecastRecord>> forecasts;  // model id -> records
};

struct ModelMetrics {
  double vrate = 0.0;
  double quantile_loss = 0.0;
  double fz_loss = 0.0;
  double es_rate = 0.0;
  bool uc_reject = false, cc_reject = false, dq1_reject = false, dq4_reject = false,
       vqr_reject = false;
  bool in_mcs = false;
  std::size_t days = 0;
  bool present = true;  // model column absent for this series when false
};

struct ReportTables {
  std::vector<std::string> models;        // input order preserved
  std::vector<std::string> series_names;
  // metrics[model][series]
  std::map<std::string, std::map<std::string, ModelMetrics>> metrics;
  // average across series of the within-series rank (1 = best)
  std::map<std::string, double> vrate_avg_rank, qloss_avg_rank, fz_avg_rank;
  std::map<std::string, int> mcs_total;
};

/// Joins each model's forecasts with realized returns by date, computes the
/// per-model metric/backtest table, per-series ranks and their averages, and
/// MCS membership on the FZ losses. Missing model columns are reported absent.
ReportTables build_report(const std::vector<SeriesInput>& inputs, double alpha,
                          const McsConfig& mcs_config);

/// Writes report.csv, report.json and plotdata.csv (tidy date,series,value)
/// under `out_dir`.
void write_report(const ReportTables& tables, const std::vector<SeriesInput>& inputs,
                  const std::string& out_dir);

/// Loads every *.csv under `dir` as one model's forecast records (model name
/// taken from the records themselves).
std::map<std::string, std::vector<ForecastRecord>> load_forecast_dir(const std::string& dir);

}  // namespace escare
