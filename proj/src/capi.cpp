#include "escare/escare.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <span>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "escare/backtest.hpp"
#include "escare/errors.hpp"
#include "escare/forecast.hpp"
#include "escare/measures.hpp"
#include "escare/objective.hpp"
#include "escare/report.hpp"
#include "escare/simulator.hpp"
#include "json.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
esc_status guarded(Fn&& fn) {
  try {
    fn();
    return ESC_OK;
  } catch (const escare::NumericalError& e) {
    g_last_error = e.what();
    return ESC_ERR_NUMERICAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ESC_ERR_VALIDATION;
  }
}

escare::MlConfig ml_config_from_json(const std::string& text) {
  escare::MlConfig c;
  if (text.empty()) return c;
  const auto j = nlohmann::json::parse(text);
  c.n_random_starts = j.value("n_random_starts", c.n_random_starts);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.seed = j.value("seed", c.seed);
  c.expectile_starts = j.value("expectile_starts", c.expectile_starts);
  c.step1_tau = j.value("step1_tau", c.step1_tau);
  return c;
}

escare::McmcConfig mcmc_config_from_json(const std::string& text) {
  escare::McmcConfig c;
  if (text.empty()) return c;
  const auto j = nlohmann::json::parse(text);
  c.epoch_length = j.value("epoch_length", c.epoch_length);
  c.epoch_discard = j.value("epoch_discard", c.epoch_discard);
  c.final_epoch = j.value("final_epoch", c.final_epoch);
  c.final_discard = j.value("final_discard", c.final_discard);
  c.convergence_threshold = j.value("convergence_threshold", c.convergence_threshold);
  c.epoch_cap = j.value("epoch_cap", c.epoch_cap);
  c.seed = j.value("seed", c.seed);
  c.store_chain = j.value("store_chain", c.store_chain);
  return c;
}

}  // namespace

struct esc_series {
  escare::ReturnSeries data;
};

struct esc_fit {
  escare::ModelSpec spec;
  escare::ParamVector params;
  std::string params_json;
};

extern "C" {

const char* esc_version(void) { return "0.1.0"; }

const char* esc_last_error(void) { return g_last_error.c_str(); }

esc_status esc_series_load(const char* path, esc_series** out) {
  return guarded([&] {
    if (!path || !out) throw std::invalid_argument("esc_series_load: null argument");
    auto s = std::make_unique<esc_series>();
    s->data = escare::load_daily(path);
    *out = s.release();
  });
}

void esc_series_free(esc_series* s) { delete s; }

size_t esc_series_size(const esc_series* s) { return s ? s->data.size() : 0; }

const double* esc_series_returns(const esc_series* s) {
  return s && !s->data.returns.empty() ? s->data.returns.data() : nullptr;
}

const double* esc_series_measure(const esc_series* s, const char* id) {
  if (!s || !id) return nullptr;
  auto it = s->data.measures.find(id);
  return it == s->data.measures.end() ? nullptr : it->second.data();
}

esc_status esc_simulate(int model, size_t n, size_t reps, uint64_t seed, const char* out_dir) {
  return guarded([&] {
    if (!out_dir) throw std::invalid_argument("esc_simulate: null out_dir");
    std::filesystem::create_directories(out_dir);
    for (size_t k = 0; k < reps; ++k) {
      escare::DgpSpec spec;
      spec.model = model;
      spec.n = n;
      spec.seed = escare::stats::Rng::stream_seed(seed, k);
      const auto data = escare::simulate(spec);
      char name[64];
      std::snprintf(name, sizeof(name), "sim_model%d_rep%04zu.csv", model, k);
      escare::write_simulated_csv((std::filesystem::path(out_dir) / name).string(), data);
    }
  });
}

esc_status esc_compute_measures(const char* intraday_csv, const char* kind, int interval_minutes,
                                int base_minutes, int q, const char* out_csv) {
  return guarded([&] {
    if (!intraday_csv || !kind || !out_csv)
      throw std::invalid_argument("esc_compute_measures: null argument");
    const auto days = escare::load_intraday(intraday_csv, base_minutes);
    escare::MeasureConfig cfg;
    cfg.kind = escare::measure_kind_from_string(kind);
    cfg.interval_minutes = interval_minutes;
    cfg.scaling_lookback_q = q;
    cfg.subsample_offsets = std::max(1, interval_minutes / base_minutes);
    const auto series = escare::compute_measures(days, cfg);
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error(std::string("cannot write '") + out_csv + "'");
    out << "date," << kind << "\n";
    for (size_t i = 0; i < series.values.size(); ++i)
      out << series.dates[i] << ',' << series.values[i] << '\n';
  });
}

namespace {

std::string fit_to_json(const escare::ModelSpec& spec, const escare::ParamVector& p,
                        double loglik, bool converged, int iterations,
                        const std::vector<std::string>& warnings, const char* method,
                        const std::vector<double>& acceptance) {
  nlohmann::json j;
  j["family"] = escare::to_string(spec.family);
  j["alpha"] = spec.alpha;
  j["method"] = method;
  const auto names = escare::param_names(spec.family);
  for (size_t i = 0; i < names.size(); ++i) j["params"][names[i]] = p.v[i];
  if (spec.family == escare::Family::CareSav) j["params"]["tau"] = p.external_tau;
  j["loglik"] = loglik;
  j["converged"] = converged;
  j["iterations"] = iterations;
  if (!acceptance.empty()) j["acceptance_rate"] = acceptance;
  if (!warnings.empty()) j["warnings"] = warnings;
  return j.dump(2);
}

escare::ParamVector fit_params(const esc_series* s, const escare::ModelSpec& spec,
                               const std::string& method, const std::string& config_json,
                               std::string& json_out) {
  std::span<const double> meas;
  if (escare::family_uses_measure(spec.family))
    meas = s->data.measure(spec.measure_id);

  if (method == "ml") {
    const auto cfg = ml_config_from_json(config_json);
    const auto rep = escare::fit_ml(spec, s->data.returns, meas, cfg);
    json_out = fit_to_json(spec, rep.params, rep.loglik, rep.converged, rep.iterations,
                           rep.warnings, "ml", {});
    return rep.params;
  }
  if (method == "mcmc") {
    auto cfg = mcmc_config_from_json(config_json);
    std::string chain_csv;
    if (!config_json.empty()) {
      const auto j = nlohmann::json::parse(config_json);
      chain_csv = j.value("chain_csv", std::string{});
      if (!chain_csv.empty()) cfg.store_chain = true;
    }
    const auto rep = escare::fit_mcmc(spec, s->data.returns, meas, cfg);
    if (!chain_csv.empty()) {
      std::ofstream out(chain_csv);
      if (!out) throw std::runtime_error("cannot write '" + chain_csv + "'");
      const auto names = escare::param_names(spec.family);
      for (size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
      out << "\n";
      for (const auto& row : rep.chain) {
        for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
      }
    }
    json_out = fit_to_json(spec, rep.params, rep.loglik, rep.converged, rep.epochs_used,
                           rep.warnings, "mcmc", rep.acceptance_rate);
    return rep.params;
  }
  if (method == "grid") {
    const auto grid = escare::default_tau_grid(spec.alpha);
    const auto rep = escare::care_grid_search(s->data.returns, spec.alpha, grid);
    nlohmann::json j = nlohmann::json::parse(
        fit_to_json(spec, rep.params, 0.0, true, 0, {}, "grid", {}));
    j["vrate"] = rep.vrate;
    j.erase("loglik");
    json_out = j.dump(2);
    return rep.params;
  }
  throw std::invalid_argument("unknown estimation method '" + method + "' (ml|mcmc|grid)");
}

}  // namespace

esc_status esc_fit_series(const esc_series* s, const char* spec_json, const char* method,
                          const char* config_json, esc_fit** out) {
  return guarded([&] {
    if (!s || !spec_json || !method || !out)
      throw std::invalid_argument("esc_fit_series: null argument");
    auto f = std::make_unique<esc_fit>();
    f->spec = escare::spec_from_json(spec_json);
    f->params = fit_params(s, f->spec, method, config_json ? config_json : "", f->params_json);
    *out = f.release();
  });
}

void esc_fit_free(esc_fit* f) { delete f; }

const char* esc_fit_params_json(const esc_fit* f) {
  return f ? f->params_json.c_str() : "";
}

esc_status esc_fit_forecast(const esc_fit* f, const esc_series* s, double* var_out,
                            double* es_out) {
  return guarded([&] {
    if (!f || !s || !var_out || !es_out)
      throw std::invalid_argument("esc_fit_forecast: null argument");
    std::span<const double> meas;
    if (escare::family_uses_measure(f->spec.family)) meas = s->data.measure(f->spec.measure_id);
    const auto path = escare::run_path(f->spec, f->params, s->data.returns, meas);
    if (!path.valid) throw escare::NumericalError("esc_fit_forecast: invalid in-sample path");
    const double last_x = meas.empty() ? 0.0 : meas.back();
    const auto one = escare::forecast_one_step(f->spec, f->params, path, s->data.returns.back(),
                                               last_x);
    *var_out = one.var;
    *es_out = one.es;
  });
}

esc_status esc_rolling_forecast(const esc_series* s, const char* spec_json, const char* method,
                                const char* config_json, size_t window_n, size_t refit_every,
                                int threads, const char* out_csv) {
  return guarded([&] {
    if (!s || !spec_json || !method || !out_csv)
      throw std::invalid_argument("esc_rolling_forecast: null argument");
    escare::RollingConfig cfg;
    cfg.window_n = window_n;
    cfg.refit_every = refit_every == 0 ? 1 : refit_every;
    cfg.threads = threads;
    const std::string cfg_text = config_json ? config_json : "";
    if (std::string(method) == "ml") {
      cfg.estimator = escare::Estimator::Ml;
      cfg.ml = ml_config_from_json(cfg_text);
    } else if (std::string(method) == "mcmc") {
      cfg.estimator = escare::Estimator::Mcmc;
      cfg.mcmc = mcmc_config_from_json(cfg_text);
    } else {
      throw std::invalid_argument("esc_rolling_forecast: method must be ml or mcmc");
    }
    const auto spec = escare::spec_from_json(spec_json);
    const auto res = escare::rolling_forecast(spec, s->data, cfg);
    escare::write_forecast_csv(out_csv, res.records);
  });
}

namespace {

struct JoinedForecasts {
  std::vector<double> r, var, es;
  double alpha = 0.0;
};

JoinedForecasts join_csvs(const char* returns_csv, const char* forecast_csv) {
  const auto series = escare::load_daily(returns_csv);
  const auto records = escare::read_forecast_csv(forecast_csv);
  if (records.empty()) throw std::invalid_argument("forecast file has no records");
  JoinedForecasts out;
  out.alpha = records.front().alpha;
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < series.size(); ++i) index.emplace(series.dates[i], i);
  for (const auto& rec : records) {
    auto it = index.find(rec.date);
    if (it == index.end()) continue;
    out.r.push_back(series.returns[it->second]);
    out.var.push_back(rec.var);
    out.es.push_back(rec.es);
  }
  if (out.r.empty())
    throw std::invalid_argument("no forecast dates overlap the returns series");
  return out;
}

}  // namespace

esc_status esc_score(const char* returns_csv, const char* forecast_csv, const char* loss,
                     double alpha, const char* out_csv, double* total_out) {
  return guarded([&] {
    if (!returns_csv || !forecast_csv || !loss || !total_out)
      throw std::invalid_argument("esc_score: null argument");
    const auto j = join_csvs(returns_csv, forecast_csv);
    std::vector<double> per_day;
    if (std::string(loss) == "fz")
      per_day = escare::fz_loss_per_day(j.r, j.var, j.es, alpha);
    else if (std::string(loss) == "quantile")
      per_day = escare::quantile_loss_per_day(j.r, j.var, alpha);
    else
      throw std::invalid_argument("esc_score: loss must be fz or quantile");
    double total = 0.0;
    for (double v : per_day) total += v;
    *total_out = total;
    if (out_csv) {
      std::ofstream out(out_csv);
      if (!out) throw std::runtime_error(std::string("cannot write '") + out_csv + "'");
      out << "day," << loss << "\n";
      for (size_t i = 0; i < per_day.size(); ++i) out << i << ',' << per_day[i] << '\n';
    }
  });
}

namespace {

nlohmann::json backtest_one(const char* returns_csv, const std::string& forecast_csv,
                            double alpha, const std::vector<std::string>& tests) {
  const auto j = join_csvs(returns_csv, forecast_csv.c_str());
  const auto hits = escare::HitSeries::from_forecasts(j.r, j.var, alpha);
  nlohmann::json rep;
  rep["alpha"] = alpha;
  rep["m"] = hits.m();
  rep["vrate"] = escare::vrate(hits);
  rep["es_rate"] = escare::es_rate(j.r, j.es);
  auto put = [&rep](const std::string& name, const escare::TestResult& t) {
    rep["tests"][name] = {{"statistic", t.statistic},
                          {"p_value", t.p_value},
                          {"reject_at_5pct", t.reject_at_5pct},
                          {"dof", t.dof}};
    if (!t.note.empty()) rep["tests"][name]["note"] = t.note;
  };
  for (const auto& t : tests) {
    if (t == "uc") put("uc", escare::kupiec_uc(hits));
    else if (t == "cc") put("cc", escare::christoffersen_cc(hits));
    else if (t == "dq1") put("dq1", escare::dq_test(hits, j.var, 1));
    else if (t == "dq4") put("dq4", escare::dq_test(hits, j.var, 4));
    else if (t == "vqr") put("vqr", escare::vqr_test(j.r, j.var, alpha));
    else throw std::invalid_argument("esc_backtest: unknown test '" + t + "'");
  }
  return rep;
}

}  // namespace

esc_status esc_backtest(const char* returns_csv, const char* forecast_csv, double alpha,
                        const char* tests_csv, const char* out_json) {
  return guarded([&] {
    if (!returns_csv || !forecast_csv || !out_json)
      throw std::invalid_argument("esc_backtest: null argument");
    std::vector<std::string> tests;
    {
      std::stringstream ss(tests_csv && *tests_csv ? tests_csv : "uc,cc,dq1,dq4,vqr");
      std::string t;
      while (std::getline(ss, t, ',')) tests.push_back(t);
    }
    nlohmann::json rep;
    if (std::filesystem::is_directory(forecast_csv)) {
      // one section per model file in the directory
      std::vector<std::filesystem::path> files;
      for (const auto& e : std::filesystem::directory_iterator(forecast_csv))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      if (files.empty())
        throw std::invalid_argument(std::string("no forecast csv files in '") + forecast_csv +
                                    "'");
      for (const auto& f : files)
        rep["models"][f.stem().string()] = backtest_one(returns_csv, f.string(), alpha, tests);
    } else {
      rep = backtest_one(returns_csv, forecast_csv, alpha, tests);
    }
    std::ofstream out(out_json);
    if (!out) throw std::runtime_error(std::string("cannot write '") + out_json + "'");
    out << rep.dump(2) << '\n';
  });
}

esc_status esc_mcs(const char* losses_csv, double level, int bootstrap_b, int block_length,
                   uint64_t seed, const char* out_json) {
  return guarded([&] {
    if (!losses_csv || !out_json) throw std::invalid_argument("esc_mcs: null argument");
    std::ifstream in(losses_csv);
    if (!in) throw std::runtime_error(std::string("cannot open '") + losses_csv + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty losses file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> models;
    {
      std::stringstream ss(line);
      std::string c;
      std::getline(ss, c, ',');
      if (c != "date") throw std::invalid_argument("losses csv must start with a date column");
      while (std::getline(ss, c, ',')) models.push_back(c);
    }
    if (models.size() < 2) throw std::invalid_argument("losses csv needs at least 2 models");
    std::vector<std::vector<double>> losses(models.size());
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      std::stringstream ss(line);
      std::string c;
      std::getline(ss, c, ',');
      for (size_t i = 0; i < models.size(); ++i) {
        if (!std::getline(ss, c, ',')) throw std::runtime_error("short row in losses csv");
        losses[i].push_back(std::stod(c));
      }
    }
    escare::McsConfig cfg;
    cfg.level = level;
    cfg.bootstrap_b = bootstrap_b;
    cfg.block_length = block_length;
    cfg.seed = seed;
    const auto res = escare::mcs(losses, cfg);
    nlohmann::json rep;
    rep["level"] = level;
    for (size_t i = 0; i < models.size(); ++i) {
      rep["models"][models[i]] = {{"included", static_cast<bool>(res.included[i])},
                                  {"p_value", res.p_values[i]}};
    }
    for (int e : res.eliminated) rep["eliminated"].push_back(models[e]);
    std::ofstream out(out_json);
    if (!out) throw std::runtime_error(std::string("cannot write '") + out_json + "'");
    out << rep.dump(2) << '\n';
  });
}

esc_status esc_report(const char* const* returns_csvs, const char* const* forecast_dirs,
                      size_t n_series, double alpha, const char* out_dir) {
  return guarded([&] {
    if (!returns_csvs || !forecast_dirs || n_series == 0 || !out_dir)
      throw std::invalid_argument("esc_report: null argument");
    std::vector<escare::SeriesInput> inputs;
    for (size_t i = 0; i < n_series; ++i) {
      escare::SeriesInput in;
      in.name = std::filesystem::path(returns_csvs[i]).stem().string();
      in.returns = escare::load_daily(returns_csvs[i]);
      in.forecasts = escare::load_forecast_dir(forecast_dirs[i]);
      inputs.push_back(std::move(in));
    }
    escare::McsConfig mcfg;
    const auto tables = escare::build_report(inputs, alpha, mcfg);
    escare::write_report(tables, inputs, out_dir);
  });
}

}  // extern "C"
