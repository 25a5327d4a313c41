#include "escare/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "escare/stats.hpp"

namespace escare {

namespace {
constexpr int kBurnIn = 200;
constexpr double kMeasurementSd = 0.3;

struct Regime {
  double c0, c1, c2;
};

Regime regime_for(int model, double last_return) {
  if (model == 1) return {0.02, 0.10, 0.85};
  return (last_return <= 0.0) ? Regime{0.05, 0.20, 0.80} : Regime{0.10, 0.10, 0.75};
}

double unconditional_level(int model) { return model == 1 ? 0.5 : 1.0; }
}  // namespace

void DgpSpec::validate() const {
  if (model != 1 && model != 2) throw std::invalid_argument("dgp: model must be 1 or 2");
  if (n < 100) throw std::invalid_argument("dgp: n must be >= 100");
}

SimData simulate(const DgpSpec& spec) {
  spec.validate();
  stats::Rng rng(spec.seed);
  SimData out;
  out.returns.reserve(spec.n);
  out.x.reserve(spec.n);
  out.sqrt_h.reserve(spec.n);

  double sh = unconditional_level(spec.model);
  double eps = rng.normal();
  double r = sh * eps;
  double x = 0.1 + 0.9 * sh - 0.02 * eps + 0.02 * (eps * eps - 1.0) + kMeasurementSd * rng.normal();

  const std::size_t total = spec.n + kBurnIn;
  for (std::size_t t = 0; t < total; ++t) {
    const Regime g = regime_for(spec.model, r);
    sh = g.c0 + g.c1 * x + g.c2 * sh;
    eps = rng.normal();
    r = sh * eps;
    x = 0.1 + 0.9 * sh - 0.02 * eps + 0.02 * (eps * eps - 1.0) + kMeasurementSd * rng.normal();
    if (t >= kBurnIn) {
      out.sqrt_h.push_back(sh);
      out.returns.push_back(r);
      out.x.push_back(x);
    }
  }
  const Regime g = regime_for(spec.model, r);
  out.sqrt_h_next = g.c0 + g.c1 * x + g.c2 * sh;
  return out;
}

ParamVector map_to_escare(int model, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("map_to_escare: bad alpha");
  const double z = stats::norm_ppf(alpha);
  ParamVector p = ParamVector::zeros(model == 1 ? Family::ReEsCare : Family::ReTEsCare);
  if (model == 1) {
    p.v[0] = 0.02 * z;
    p.v[1] = 0.10 * z;
    p.v[2] = 0.85;
  } else if (model == 2) {
    p.v[0] = 0.05 * z;
    p.v[1] = 0.20 * z;
    p.v[2] = 0.80;
    p.v[3] = 0.10 * z;
    p.v[4] = 0.10 * z;
    p.v[5] = 0.75;
  } else {
    throw std::invalid_argument("map_to_escare: model must be 1 or 2");
  }
  p.tau_ref() = stats::gaussian_expectile_tau(alpha);
  const int b = p.beta_count();
  p.v[b + 1] = 0.1;             // xi
  p.v[b + 2] = -0.9 / z;        // phi
  p.v[b + 3] = -0.02 * z;       // delta1
  p.v[b + 4] = 0.02 * z * z;    // delta2
  p.v[b + 5] = kMeasurementSd;  // sigma_u
  return p;
}

TrueRisk true_risk(std::span<const double> sqrt_h, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("true_risk: bad alpha");
  const double z = stats::norm_ppf(alpha);
  const double es_mult = stats::gaussian_es_multiplier(alpha);
  TrueRisk out;
  out.var.resize(sqrt_h.size());
  out.es.resize(sqrt_h.size());
  for (std::size_t t = 0; t < sqrt_h.size(); ++t) {
    if (!(sqrt_h[t] > 0.0)) throw std::invalid_argument("true_risk: non-positive volatility");
    out.var[t] = sqrt_h[t] * z;
    out.es[t] = -sqrt_h[t] * es_mult;
  }
  out.tau = stats::gaussian_expectile_tau(alpha);
  return out;
}

void write_simulated_csv(const std::string& path, const SimData& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "date,return,x,sqrt_h\n";
  char date[16];
  for (std::size_t t = 0; t < data.returns.size(); ++t) {
    std::snprintf(date, sizeof(date), "t%06zu", t + 1);
    char row[160];
    std::snprintf(row, sizeof(row), "%s,%.12g,%.12g,%.12g\n", date, data.returns[t], data.x[t],
                  data.sqrt_h[t]);
    out << row;
  }
}

}  // namespace escare
