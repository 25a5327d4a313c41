// escare command line front end. Talks to the library exclusively through the
// C API in escare/escare.h. Exit codes: 0 ok, 1 validation error, 2 numerical
// failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "escare/escare.h"
#include "json.hpp"

namespace {

int finish(esc_status status) {
  if (status != ESC_OK) std::cerr << "error: " << esc_last_error() << "\n";
  return static_cast<int>(status);
}

// every run leaves its fully resolved settings beside the outputs
void write_run_config(const std::string& anchor, const nlohmann::json& resolved) {
  if (anchor.empty()) return;
  std::string path = anchor;
  std::error_code ec;
  if (std::filesystem::is_directory(anchor, ec))
    path = (std::filesystem::path(anchor) / "run_config.json").string();
  else
    path += ".run.json";
  std::ofstream out(path);
  if (out) out << resolved.dump(2) << "\n";
}

std::string read_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open config '" << path << "'\n";
    std::exit(1);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// merge --seed into the estimator config json (flag wins over file)
std::string with_seed(std::string config, std::uint64_t seed, bool seed_set) {
  if (!seed_set) return config;
  if (config.empty()) return "{\"seed\":" + std::to_string(seed) + "}";
  const auto pos = config.find_last_of('}');
  if (pos == std::string::npos) return config;
  std::string head = config.substr(0, pos);
  const bool empty_obj = head.find(':') == std::string::npos;
  return head + (empty_obj ? "" : ",") + "\"seed\":" + std::to_string(seed) + "}";
}

struct SeriesHandle {
  esc_series* ptr = nullptr;
  ~SeriesHandle() { esc_series_free(ptr); }
};

struct FitHandle {
  esc_fit* ptr = nullptr;
  ~FitHandle() { esc_fit_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"escare: joint expectile / Expected Shortfall tail-risk models"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 1;
  bool seed_set = false;
  int threads = 1;
  std::string config_path;
  std::string out_path;
  app.add_option("--seed", seed, "RNG seed")->each([&](const std::string&) { seed_set = true; });
  app.add_option("--threads", threads, "worker threads for parallel sections");
  app.add_option("--config", config_path, "estimator config JSON file");
  app.add_option("--out", out_path, "output file or directory");

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate replicates from a simulation model");
  int sim_model = 1;
  std::size_t sim_n = 1900, sim_reps = 1;
  sim->add_option("--model", sim_model, "1 (single regime) or 2 (threshold)");
  sim->add_option("--n", sim_n, "sample length per replicate");
  sim->add_option("--reps", sim_reps, "number of replicates");

  // compute-measures
  auto* cm = app.add_subcommand("compute-measures", "daily realized measures from intraday bars");
  std::string cm_kind = "rv", cm_in;
  int cm_interval = 5, cm_base = 1, cm_q = 66;
  cm->add_option("--kind", cm_kind, "rv|rr|scrv|scrr|ssrv|ssrr");
  cm->add_option("--interval", cm_interval, "measure interval in minutes");
  cm->add_option("--base", cm_base, "bar grid of the input file in minutes");
  cm->add_option("--q", cm_q, "scaling lookback in days");
  cm->add_option("--in", cm_in, "intraday csv")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "estimate a model on a daily series");
  std::string fit_model = "es-care", fit_method = "mcmc", fit_measure, fit_in;
  double fit_alpha = 0.01;
  fit->add_option("--model", fit_model, "model family");
  fit->add_option("--method", fit_method, "ml|mcmc|grid");
  fit->add_option("--measure", fit_measure, "measure column for re- families");
  fit->add_option("--alpha", fit_alpha, "quantile level");
  fit->add_option("--in", fit_in, "daily csv")->required();

  // forecast
  auto* fc = app.add_subcommand("forecast", "rolling one-step-ahead VaR/ES forecasts");
  std::string fc_model = "es-care", fc_method = "ml", fc_measure, fc_in;
  double fc_alpha = 0.01;
  std::size_t fc_window = 1000, fc_refit = 1;
  fc->add_option("--model", fc_model, "model family");
  fc->add_option("--method", fc_method, "ml|mcmc");
  fc->add_option("--measure", fc_measure, "measure column for re- families");
  fc->add_option("--alpha", fc_alpha, "quantile level");
  fc->add_option("--window", fc_window, "in-sample window length");
  fc->add_option("--refit-every", fc_refit, "steps between refits (1 = every step)");
  fc->add_option("--in", fc_in, "daily csv")->required();

  // score
  auto* sc = app.add_subcommand("score", "total loss of a forecast file");
  std::string sc_loss = "fz", sc_forecasts, sc_returns;
  double sc_alpha = 0.01;
  sc->add_option("--loss", sc_loss, "fz|quantile");
  sc->add_option("--forecasts", sc_forecasts, "forecast csv")->required();
  sc->add_option("--returns", sc_returns, "daily returns csv")->required();
  sc->add_option("--alpha", sc_alpha, "quantile level");

  // backtest
  auto* bt = app.add_subcommand("backtest", "coverage and independence tests");
  std::string bt_forecasts, bt_returns, bt_tests = "uc,cc,dq1,dq4,vqr";
  double bt_alpha = 0.01;
  bt->add_option("--forecasts", bt_forecasts, "forecast csv")->required();
  bt->add_option("--returns", bt_returns, "daily returns csv")->required();
  bt->add_option("--tests", bt_tests, "comma list of uc,cc,dq1,dq4,vqr");
  bt->add_option("--alpha", bt_alpha, "quantile level");

  // mcs
  auto* mc = app.add_subcommand("mcs", "model confidence set over per-day losses");
  std::string mc_losses;
  double mc_level = 0.90;
  int mc_b = 5000, mc_block = 0;
  mc->add_option("--losses", mc_losses, "csv: date,model1,model2,...")->required();
  mc->add_option("--level", mc_level, "confidence level");
  mc->add_option("--B", mc_b, "bootstrap replicates");
  mc->add_option("--block", mc_block, "bootstrap block length (0 = m^(1/3))");

  // report
  auto* rp = app.add_subcommand("report", "metric/rank tables over forecast directories");
  std::vector<std::string> rp_forecasts, rp_returns;
  double rp_alpha = 0.01;
  rp->add_option("--forecasts", rp_forecasts, "forecast directory (repeat per series)")
      ->required();
  rp->add_option("--returns", rp_returns, "daily returns csv (repeat per series)")->required();
  rp->add_option("--alpha", rp_alpha, "quantile level");

  CLI11_PARSE(app, argc, argv);
  const std::string config = read_config(config_path);

  if (sim->parsed()) {
    const std::string dir = out_path.empty() ? "sims" : out_path;
    const auto st = esc_simulate(sim_model, sim_n, sim_reps, seed, dir.c_str());
    if (st == ESC_OK)
      write_run_config(dir, {{"command", "simulate"}, {"model", sim_model}, {"n", sim_n},
                             {"reps", sim_reps}, {"seed", seed}, {"out", dir}});
    return finish(st);
  }

  if (cm->parsed()) {
    const std::string out = out_path.empty() ? "daily_measures.csv" : out_path;
    const auto st = esc_compute_measures(cm_in.c_str(), cm_kind.c_str(), cm_interval, cm_base,
                                         cm_q, out.c_str());
    if (st == ESC_OK)
      write_run_config(out, {{"command", "compute-measures"}, {"kind", cm_kind},
                             {"interval", cm_interval}, {"base", cm_base}, {"q", cm_q},
                             {"in", cm_in}, {"out", out}});
    return finish(st);
  }

  if (fit->parsed()) {
    SeriesHandle series;
    if (auto st = esc_series_load(fit_in.c_str(), &series.ptr); st != ESC_OK) return finish(st);
    std::string spec = "{\"family\":\"" + fit_model + "\",\"alpha\":" + std::to_string(fit_alpha);
    if (!fit_measure.empty()) spec += ",\"measure\":\"" + fit_measure + "\"";
    spec += "}";
    FitHandle f;
    const std::string cfg = with_seed(config, seed, seed_set);
    if (auto st = esc_fit_series(series.ptr, spec.c_str(), fit_method.c_str(), cfg.c_str(),
                                 &f.ptr);
        st != ESC_OK)
      return finish(st);
    const std::string params = esc_fit_params_json(f.ptr);
    if (out_path.empty()) {
      std::cout << params << "\n";
    } else {
      std::ofstream out(out_path);
      out << params << "\n";
      write_run_config(out_path, {{"command", "fit"}, {"model", fit_model},
                                  {"method", fit_method}, {"measure", fit_measure},
                                  {"alpha", fit_alpha}, {"in", fit_in}, {"seed", seed},
                                  {"config", config.empty() ? "{}" : config},
                                  {"out", out_path}});
    }
    return 0;
  }

  if (fc->parsed()) {
    SeriesHandle series;
    if (auto st = esc_series_load(fc_in.c_str(), &series.ptr); st != ESC_OK) return finish(st);
    std::string spec = "{\"family\":\"" + fc_model + "\",\"alpha\":" + std::to_string(fc_alpha);
    if (!fc_measure.empty()) spec += ",\"measure\":\"" + fc_measure + "\"";
    spec += "}";
    const std::string out = out_path.empty() ? "forecasts.csv" : out_path;
    const std::string cfg = with_seed(config, seed, seed_set);
    const auto st = esc_rolling_forecast(series.ptr, spec.c_str(), fc_method.c_str(),
                                         cfg.c_str(), fc_window, fc_refit, threads, out.c_str());
    if (st == ESC_OK)
      write_run_config(out, {{"command", "forecast"}, {"model", fc_model},
                             {"method", fc_method}, {"measure", fc_measure},
                             {"alpha", fc_alpha}, {"window", fc_window},
                             {"refit_every", fc_refit}, {"threads", threads}, {"seed", seed},
                             {"config", cfg.empty() ? "{}" : cfg}, {"in", fc_in}, {"out", out}});
    return finish(st);
  }

  if (sc->parsed()) {
    double total = 0.0;
    const char* per_day = out_path.empty() ? nullptr : out_path.c_str();
    if (auto st = esc_score(sc_returns.c_str(), sc_forecasts.c_str(), sc_loss.c_str(), sc_alpha,
                            per_day, &total);
        st != ESC_OK)
      return finish(st);
    std::printf("%.10g\n", total);
    return 0;
  }

  if (bt->parsed()) {
    const std::string out = out_path.empty() ? "report.json" : out_path;
    const auto st = esc_backtest(bt_returns.c_str(), bt_forecasts.c_str(), bt_alpha,
                                 bt_tests.c_str(), out.c_str());
    if (st == ESC_OK)
      write_run_config(out, {{"command", "backtest"}, {"forecasts", bt_forecasts},
                             {"returns", bt_returns}, {"tests", bt_tests},
                             {"alpha", bt_alpha}, {"out", out}});
    return finish(st);
  }

  if (mc->parsed()) {
    const std::string out = out_path.empty() ? "mcs.json" : out_path;
    const auto st = esc_mcs(mc_losses.c_str(), mc_level, mc_b, mc_block, seed, out.c_str());
    if (st == ESC_OK)
      write_run_config(out, {{"command", "mcs"}, {"losses", mc_losses}, {"level", mc_level},
                             {"B", mc_b}, {"block", mc_block}, {"seed", seed}, {"out", out}});
    return finish(st);
  }

  if (rp->parsed()) {
    if (rp_forecasts.size() != rp_returns.size()) {
      std::cerr << "error: --forecasts and --returns must be repeated in pairs\n";
      return 1;
    }
    std::vector<const char*> rets, dirs;
    for (const auto& s : rp_returns) rets.push_back(s.c_str());
    for (const auto& s : rp_forecasts) dirs.push_back(s.c_str());
    const std::string out = out_path.empty() ? "report" : out_path;
    const auto st = esc_report(rets.data(), dirs.data(), rets.size(), rp_alpha, out.c_str());
    if (st == ESC_OK)
      write_run_config(out, {{"command", "report"}, {"forecasts", rp_forecasts},
                             {"returns", rp_returns}, {"alpha", rp_alpha}, {"out", out}});
    return finish(st);
  }

  return 0;
}
