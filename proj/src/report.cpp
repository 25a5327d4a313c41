#include "escare/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "escare/objective.hpp"
#include "json.hpp"

namespace escare {

namespace {

struct Joined {
  std::vector<double> r, var, es;
  std::vector<std::string> dates;
};

Joined join_by_date(const ReturnSeries& series, const std::vector<ForecastRecord>& records) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) index.emplace(series.dates[i], i);
  Joined j;
  for (const auto& rec : records) {
    auto it = index.find(rec.date);
    if (it == index.end()) continue;  // forecast beyond the observed sample
    j.r.push_back(series.returns[it->second]);
    j.var.push_back(rec.var);
    j.es.push_back(rec.es);
    j.dates.push_back(rec.date);
  }
  return j;
}

// average rank with ties sharing the mean of their positions
std::map<std::string, double> ranks(const std::vector<std::pair<std::string, double>>& scored) {
  std::vector<std::size_t> order(scored.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scored[a].second < scored[b].second; });
  std::map<std::string, double> out;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           scored[order[j + 1]].second == scored[order[i]].second)
      ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[scored[order[k]].first] = r;
    i = j + 1;
  }
  return out;
}

}  // namespace

std::map<std::string, std::vector<ForecastRecord>> load_forecast_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::map<std::string, std::vector<ForecastRecord>> out;
  if (!fs::is_directory(dir)) throw std::runtime_error("'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no forecast csv files in '" + dir + "'");
  for (const auto& f : files) {
    auto records = read_forecast_csv(f.string());
    if (records.empty()) continue;
    out[records.front().model].insert(out[records.front().model].end(), records.begin(),
                                      records.end());
  }
  if (out.empty()) throw std::runtime_error("no forecast records in '" + dir + "'");
  return out;
}

ReportTables build_report(const std::vector<SeriesInput>& inputs, double alpha,
                          const McsConfig& mcs_config) {
  if (inputs.empty()) throw std::invalid_argument("build_report: no inputs");
  ReportTables tab;
  for (const auto& in : inputs) {
    tab.series_names.push_back(in.name);
    for (const auto& [model, _] : in.forecasts)
      if (std::find(tab.models.begin(), tab.models.end(), model) == tab.models.end())
        tab.models.push_back(model);
  }

  for (const auto& in : inputs) {
    std::vector<std::string> mcs_models;
    std::vector<std::map<std::string, double>> mcs_day_losses;  // date -> fz loss

    for (const auto& model : tab.models) {
      ModelMetrics mm;
      auto it = in.forecasts.find(model);
      if (it == in.forecasts.end()) {
        mm.present = false;
        tab.metrics[model][in.name] = mm;
        continue;
      }
      const Joined j = join_by_date(in.returns, it->second);
      if (j.r.empty()) {
        mm.present = false;
        tab.metrics[model][in.name] = mm;
        continue;
      }
      mm.days = j.r.size();
      const auto hits = HitSeries::from_forecasts(j.r, j.var, alpha);
      mm.vrate = vrate(hits);
      mm.quantile_loss = quantile_loss(j.r, j.var, alpha);
      mm.fz_loss = fz_loss(j.r, j.var, j.es, alpha);
      mm.es_rate = es_rate(j.r, j.es);
      mm.uc_reject = kupiec_uc(hits).reject_at_5pct;
      mm.cc_reject = christoffersen_cc(hits).reject_at_5pct;
      try {
        mm.dq1_reject = dq_test(hits, j.var, 1).reject_at_5pct;
        mm.dq4_reject = dq_test(hits, j.var, 4).reject_at_5pct;
      } catch (const std::exception&) {
        mm.dq1_reject = mm.dq4_reject = false;
      }
      try {
        mm.vqr_reject = vqr_test(j.r, j.var, alpha).reject_at_5pct;
      } catch (const std::exception&) {
        mm.vqr_reject = false;
      }
      const auto fz_days = fz_loss_per_day(j.r, j.var, j.es, alpha);
      std::map<std::string, double> by_date;
      for (std::size_t t = 0; t < fz_days.size(); ++t) by_date[j.dates[t]] = fz_days[t];
      mcs_models.push_back(model);
      mcs_day_losses.push_back(std::move(by_date));
      tab.metrics[model][in.name] = mm;
    }

    if (mcs_models.size() >= 2) {
      // losses enter the set comparison on the dates every model covers
      std::vector<std::string> common;
      for (const auto& [date, _] : mcs_day_losses[0]) {
        bool everywhere = true;
        for (std::size_t i = 1; i < mcs_day_losses.size() && everywhere; ++i)
          everywhere = mcs_day_losses[i].count(date) != 0;
        if (everywhere) common.push_back(date);
      }
      if (common.size() >= 30) {
        std::vector<std::vector<double>> losses(mcs_models.size());
        for (std::size_t i = 0; i < mcs_models.size(); ++i)
          for (const auto& date : common) losses[i].push_back(mcs_day_losses[i].at(date));
        const auto res = mcs(losses, mcs_config);
        for (std::size_t i = 0; i < mcs_models.size(); ++i)
          tab.metrics[mcs_models[i]][in.name].in_mcs = res.included[i];
      }
    } else if (mcs_models.size() == 1) {
      tab.metrics[mcs_models[0]][in.name].in_mcs = true;
    }
  }

  // per-series ranks, averaged across series
  std::map<std::string, double> vsum, qsum, fsum;
  std::map<std::string, int> nseries;
  for (const auto& in : inputs) {
    std::vector<std::pair<std::string, double>> v, q, f;
    for (const auto& model : tab.models) {
      const auto& mm = tab.metrics[model][in.name];
      if (!mm.present) continue;
      v.emplace_back(model, std::fabs(mm.vrate - alpha));
      q.emplace_back(model, mm.quantile_loss);
      f.emplace_back(model, mm.fz_loss);
    }
    for (const auto& [model, r] : ranks(v)) vsum[model] += r;
    for (const auto& [model, r] : ranks(q)) qsum[model] += r;
    for (const auto& [model, r] : ranks(f)) fsum[model] += r;
    for (const auto& [model, _] : ranks(v)) nseries[model] += 1;
  }
  for (const auto& [model, n] : nseries) {
    tab.vrate_avg_rank[model] = vsum[model] / n;
    tab.qloss_avg_rank[model] = qsum[model] / n;
    tab.fz_avg_rank[model] = fsum[model] / n;
  }
  for (const auto& model : tab.models) {
    int total = 0;
    for (const auto& in : inputs) {
      const auto& mm = tab.metrics[model][in.name];
      if (mm.present && mm.in_mcs) ++total;
    }
    tab.mcs_total[model] = total;
  }
  return tab;
}

void write_report(const ReportTables& tab, const std::vector<SeriesInput>& inputs,
                  const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream csv(fs::path(out_dir) / "report.csv");
    csv << "model";
    for (const auto& s : tab.series_names)
      csv << ",vrate_" << s << ",qloss_" << s << ",fzloss_" << s << ",esrate_" << s << ",mcs_" << s;
    csv << ",vrate_avg_rank,qloss_avg_rank,fz_avg_rank,mcs_total\n";
    for (const auto& model : tab.models) {
      csv << model;
      for (const auto& s : tab.series_names) {
        const auto& mm = tab.metrics.at(model).at(s);
        if (!mm.present) {
          csv << ",absent,absent,absent,absent,absent";
        } else {
          csv << ',' << mm.vrate << ',' << mm.quantile_loss << ',' << mm.fz_loss << ','
              << mm.es_rate << ',' << (mm.in_mcs ? 1 : 0);
        }
      }
      auto maybe = [&](const std::map<std::string, double>& m) {
        auto it = m.find(model);
        return it == m.end() ? std::string("absent") : std::to_string(it->second);
      };
      csv << ',' << maybe(tab.vrate_avg_rank) << ',' << maybe(tab.qloss_avg_rank) << ','
          << maybe(tab.fz_avg_rank) << ',' << tab.mcs_total.at(model) << '\n';
    }
  }

  {
    nlohmann::json j;
    j["models"] = tab.models;
    j["series"] = tab.series_names;
    for (const auto& model : tab.models) {
      for (const auto& s : tab.series_names) {
        const auto& mm = tab.metrics.at(model).at(s);
        nlohmann::json e;
        if (!mm.present) {
          e["present"] = false;
        } else {
          e["present"] = true;
          e["days"] = mm.days;
          e["vrate"] = mm.vrate;
          e["quantile_loss"] = mm.quantile_loss;
          e["fz_loss"] = mm.fz_loss;
          e["es_rate"] = mm.es_rate;
          e["reject"] = {{"uc", mm.uc_reject},
                         {"cc", mm.cc_reject},
                         {"dq1", mm.dq1_reject},
                         {"dq4", mm.dq4_reject},
                         {"vqr", mm.vqr_reject}};
          e["in_mcs"] = mm.in_mcs;
        }
        j["metrics"][model][s] = e;
      }
      if (tab.vrate_avg_rank.count(model)) {
        j["avg_rank"][model] = {{"vrate", tab.vrate_avg_rank.at(model)},
                                {"quantile_loss", tab.qloss_avg_rank.at(model)},
                                {"fz_loss", tab.fz_avg_rank.at(model)}};
      }
      j["mcs_total"][model] = tab.mcs_total.at(model);
    }
    std::ofstream out(fs::path(out_dir) / "report.json");
    out << j.dump(2) << '\n';
  }

  {
    // tidy long format for external plotting
    std::ofstream out(fs::path(out_dir) / "plotdata.csv");
    out << "date,series,value\n";
    for (const auto& in : inputs) {
      for (std::size_t t = 0; t < in.returns.size(); ++t)
        out << in.returns.dates[t] << ',' << in.name << ":return," << in.returns.returns[t]
            << '\n';
      for (const auto& [model, records] : in.forecasts)
        for (const auto& rec : records) {
          out << rec.date << ',' << in.name << ':' << model << ":var," << rec.var << '\n';
          out << rec.date << ',' << in.name << ':' << model << ":es," << rec.es << '\n';
        }
    }
  }
}

}  // namespace escare
