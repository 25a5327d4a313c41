#include "escare/models.hpp"

#include <cmath>
#include <stdexcept>

#include "escare/stats.hpp"
#include "json.hpp"

namespace escare {

Family family_from_string(const std::string& s) {
  if (s == "care-sav") return Family::CareSav;
  if (s == "es-caviar-add") return Family::EsCaviarAdd;
  if (s == "es-caviar-mult") return Family::EsCaviarMult;
  if (s == "es-care") return Family::EsCare;
  if (s == "re-es-care") return Family::ReEsCare;
  if (s == "re-t-es-care") return Family::ReTEsCare;
  throw std::invalid_argument("unknown model family '" + s + "'");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::CareSav: return "care-sav";
    case Family::EsCaviarAdd: return "es-caviar-add";
    case Family::EsCaviarMult: return "es-caviar-mult";
    case Family::EsCare: return "es-care";
    case Family::ReEsCare: return "re-es-care";
    case Family::ReTEsCare: return "re-t-es-care";
  }
  return "?";
}

bool family_uses_measure(Family f) {
  return f == Family::ReEsCare || f == Family::ReTEsCare;
}

bool family_is_threshold(Family f) { return f == Family::ReTEsCare; }

double es_scaling_factor(double tau, double alpha) {
  if (!(tau > 0.0 && alpha > tau && alpha < 0.5))
    throw std::invalid_argument("es_scaling_factor: need 0 < tau < alpha < 0.5");
  return 1.0 + tau / ((1.0 - 2.0 * tau) * alpha);
}

std::size_t param_count(Family f) {
  switch (f) {
    case Family::CareSav: return 3;
    case Family::EsCaviarAdd: return 6;
    case Family::EsCaviarMult: return 4;
    case Family::EsCare: return 4;
    case Family::ReEsCare: return 9;
    case Family::ReTEsCare: return 12;
  }
  return 0;
}

std::vector<std::string> param_names(Family f) {
  switch (f) {
    case Family::CareSav: return {"beta1", "beta2", "beta3"};
    case Family::EsCaviarAdd: return {"beta1", "beta2", "beta3", "gamma0", "gamma1", "gamma2"};
    case Family::EsCaviarMult: return {"beta1", "beta2", "beta3", "gamma0"};
    case Family::EsCare: return {"beta1", "beta2", "beta3", "tau"};
    case Family::ReEsCare:
      return {"beta1", "beta2", "beta3", "tau", "xi", "phi", "delta1", "delta2", "sigma_u"};
    case Family::ReTEsCare:
      return {"beta1", "beta2", "beta3", "beta4", "beta5", "beta6",
              "tau",   "xi",    "phi",   "delta1", "delta2", "sigma_u"};
  }
  return {};
}

ParamVector ParamVector::zeros(Family f) {
  ParamVector p;
  p.family = f;
  p.v.assign(param_count(f), 0.0);
  return p;
}

double ParamVector::tau() const {
  if (family == Family::CareSav) return external_tau;
  if (family == Family::EsCare || family == Family::ReEsCare) return v[3];
  if (family == Family::ReTEsCare) return v[6];
  throw std::logic_error("tau not a parameter of this family");
}

double& ParamVector::tau_ref() {
  if (family == Family::EsCare || family == Family::ReEsCare) return v[3];
  if (family == Family::ReTEsCare) return v[6];
  throw std::logic_error("tau not a parameter of this family");
}

double ParamVector::gamma(int i) const {
  if (family == Family::EsCaviarAdd) return v[3 + i];
  if (family == Family::EsCaviarMult) return v[3];
  throw std::logic_error("gamma not a parameter of this family");
}

std::vector<std::string> ParamVector::names() const { return param_names(family); }

ConstraintRegion ConstraintRegion::defaults(Family f, double alpha) {
  // Expectile-equation coefficients live in the image of the positive
  // Realized-GARCH recursion under the negative quantile mapping.
  ConstraintRegion r;
  const auto names = param_names(f);
  r.lower.assign(names.size(), 0.0);
  r.upper.assign(names.size(), 0.0);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& n = names[i];
    double lo, hi;
    if (n == "beta1" || n == "beta2" || n == "beta4" || n == "beta5") {
      lo = -3.0; hi = 0.0;
    } else if (n == "beta3" || n == "beta6") {
      lo = 0.0; hi = 1.0;
    } else if (n == "tau") {
      lo = 1e-5; hi = alpha - 1e-5;
    } else if (n == "xi") {
      lo = -1.0; hi = 1.0;
    } else if (n == "phi") {
      lo = 0.0; hi = 1.0;
    } else if (n == "delta1") {
      lo = -0.2; hi = 0.2;
    } else if (n == "delta2") {
      lo = -0.3; hi = 0.3;
    } else if (n == "sigma_u") {
      lo = 1e-4; hi = 1.0;
    } else if (n == "gamma0") {
      lo = (f == Family::EsCaviarMult) ? -8.0 : 0.0;
      hi = (f == Family::EsCaviarMult) ? 2.0 : 3.0;
    } else if (n == "gamma1") {
      lo = 0.0; hi = 3.0;
    } else if (n == "gamma2") {
      lo = 0.0; hi = 0.999;
    } else {
      throw std::logic_error("no default bounds for " + n);
    }
    r.lower[i] = lo;
    r.upper[i] = hi;
  }
  return r;
}

void ConstraintRegion::override_bounds(const std::string& name, double lo, double hi, Family f) {
  const auto names = param_names(f);
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) {
      if (!(lo < hi)) throw std::invalid_argument("constraint override: lo >= hi for " + name);
      lower[i] = lo;
      upper[i] = hi;
      return;
    }
  throw std::invalid_argument("constraint override: unknown parameter '" + name + "'");
}

bool ConstraintRegion::contains(const ParamVector& p, double alpha) const {
  if (p.v.size() != lower.size()) return false;
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    if (!std::isfinite(p.v[i])) return false;
    if (p.v[i] < lower[i] || p.v[i] > upper[i]) return false;
  }
  const auto names = param_names(p.family);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if ((names[i] == "beta3" || names[i] == "beta6") && !(p.v[i] < 1.0)) return false;
    if (names[i] == "tau" && !(p.v[i] > 0.0 && p.v[i] < alpha)) return false;
    if (names[i] == "sigma_u" && !(p.v[i] > 0.0)) return false;
  }
  return true;
}

void ModelSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("model spec: alpha outside (0,0.5)");
  if (family_uses_measure(family) && measure_id.empty())
    throw std::invalid_argument("model spec: " + to_string(family) + " requires a measure id");
}

ModelSpec make_spec(Family f, double alpha, std::string measure_id) {
  ModelSpec s;
  s.family = f;
  s.alpha = alpha;
  s.measure_id = std::move(measure_id);
  s.region = ConstraintRegion::defaults(f, alpha);
  s.validate();
  return s;
}

std::string spec_to_json(const ModelSpec& spec) {
  nlohmann::json j;
  j["family"] = to_string(spec.family);
  j["alpha"] = spec.alpha;
  if (!spec.measure_id.empty()) j["measure"] = spec.measure_id;
  j["threshold_c"] = spec.threshold_c;
  const auto names = param_names(spec.family);
  const auto def = ConstraintRegion::defaults(spec.family, spec.alpha);
  nlohmann::json cons = nlohmann::json::object();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (spec.region.lower[i] != def.lower[i] || spec.region.upper[i] != def.upper[i])
      cons[names[i]] = {spec.region.lower[i], spec.region.upper[i]};
  if (!cons.empty()) j["constraints"] = cons;
  return j.dump(2);
}

ModelSpec spec_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  ModelSpec s = make_spec(family_from_string(j.at("family").get<std::string>()),
                          j.value("alpha", 0.01), j.value("measure", std::string{}));
  s.threshold_c = j.value("threshold_c", 0.0);
  if (j.contains("constraints"))
    for (const auto& [name, bounds] : j.at("constraints").items())
      s.region.override_bounds(name, bounds.at(0).get<double>(), bounds.at(1).get<double>(),
                               s.family);
  return s;
}

void RiskPath::reset(std::size_t n, bool realized) {
  mu.assign(n, 0.0);
  es.assign(n, 0.0);
  if (realized) {
    eps.assign(n, 0.0);
    u.assign(n, 0.0);
  } else {
    eps.clear();
    u.clear();
  }
  eps_sq_mean = 0.0;
  valid = true;
  first_invalid = -1;
}

double initial_expectile(std::span<const double> returns, double alpha) {
  if (returns.size() < 2) throw std::invalid_argument("initial_expectile: need >= 2 returns");
  const std::size_t k = std::min<std::size_t>(100, returns.size());
  return stats::quantile(std::vector<double>(returns.begin(), returns.begin() + k), alpha);
}

namespace {

inline void flag_day(RiskPath& out, std::size_t t) {
  if (out.valid) {
    out.valid = false;
    out.first_invalid = static_cast<std::ptrdiff_t>(t);
  }
}

inline void check_day(RiskPath& out, std::size_t t) {
  if (!(out.mu[t] < 0.0) || !(out.es[t] < 0.0) || !(out.es[t] < out.mu[t])) flag_day(out, t);
}

// Shared expectile/ES recursion driven by |r_{t-1}| or X_{t-1}; the threshold
// variant switches coefficient sets on the sign of r_{t-1}.
void run_care_core(const ParamVector& p, std::span<const double> returns,
                   std::span<const double> driver, double alpha, double tau, double mu1,
                   bool threshold, double threshold_c, RiskPath& out) {
  const std::size_t n = returns.size();
  const double f = es_scaling_factor(tau, alpha);
  out.mu[0] = mu1;
  out.es[0] = f * mu1;
  check_day(out, 0);
  for (std::size_t t = 1; t < n; ++t) {
    int base = 0;
    if (threshold && !(returns[t - 1] <= threshold_c)) base = 3;
    const double b1 = p.v[base + 0], b2 = p.v[base + 1], b3 = p.v[base + 2];
    out.mu[t] = b1 + b2 * driver[t - 1] + b3 * out.mu[t - 1];
    out.es[t] = b1 * f + b2 * f * driver[t - 1] + b3 * out.es[t - 1];
    check_day(out, t);
  }
}

void fill_measurement(const ParamVector& p, std::span<const double> returns,
                      std::span<const double> measures, RiskPath& out) {
  const std::size_t n = returns.size();
  double sq = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double m = out.mu[t];
    out.eps[t] = (m != 0.0) ? returns[t] / m : 0.0;
    if (m == 0.0) flag_day(out, t);
    sq += out.eps[t] * out.eps[t];
  }
  out.eps_sq_mean = sq / static_cast<double>(n);
  const double xi = p.xi(), phi = p.phi(), d1 = p.delta1(), d2 = p.delta2();
  for (std::size_t t = 0; t < n; ++t)
    out.u[t] = measures[t] - xi - phi * std::fabs(out.mu[t]) - d1 * out.eps[t] -
               d2 * (out.eps[t] * out.eps[t] - out.eps_sq_mean);
}

std::vector<double> abs_returns(std::span<const double> returns) {
  std::vector<double> a(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) a[i] = std::fabs(returns[i]);
  return a;
}

}  // namespace

void run_care_sav(const ParamVector& p, std::span<const double> returns, double alpha,
                  double mu1, RiskPath& out) {
  out.reset(returns.size(), false);
  run_care_core(p, returns, abs_returns(returns), alpha, p.external_tau, mu1, false, 0.0, out);
}

void run_es_care(const ParamVector& p, std::span<const double> returns, double alpha,
                 double mu1, RiskPath& out) {
  out.reset(returns.size(), false);
  run_care_core(p, returns, abs_returns(returns), alpha, p.tau(), mu1, false, 0.0, out);
}

void run_es_caviar_add(const ParamVector& p, std::span<const double> returns, double alpha,
                       double mu1, RiskPath& out) {
  const std::size_t n = returns.size();
  out.reset(n, false);
  const double g0 = p.v[3], g1 = p.v[4], g2 = p.v[5];
  // w_1 chosen so that ES_1 = F(alpha) * mu_1 at the Gaussian-implied tau
  const double f0 = es_scaling_factor(stats::gaussian_expectile_tau(alpha), alpha);
  double w = (1.0 - f0) * mu1;
  out.mu[0] = mu1;
  out.es[0] = mu1 - w;
  check_day(out, 0);
  for (std::size_t t = 1; t < n; ++t) {
    out.mu[t] = p.v[0] + p.v[1] * std::fabs(returns[t - 1]) + p.v[2] * out.mu[t - 1];
    if (returns[t - 1] <= out.mu[t - 1])
      w = g0 + g1 * (out.mu[t - 1] - returns[t - 1]) + g2 * w;
    if (w < 0.0) flag_day(out, t);
    out.es[t] = out.mu[t] - w;
    check_day(out, t);
  }
}

void run_es_caviar_mult(const ParamVector& p, std::span<const double> returns, double alpha,
                        double mu1, RiskPath& out) {
  const std::size_t n = returns.size();
  out.reset(n, false);
  (void)alpha;
  const double w = 1.0 + std::exp(p.v[3]);
  out.mu[0] = mu1;
  out.es[0] = w * mu1;
  check_day(out, 0);
  for (std::size_t t = 1; t < n; ++t) {
    out.mu[t] = p.v[0] + p.v[1] * std::fabs(returns[t - 1]) + p.v[2] * out.mu[t - 1];
    out.es[t] = w * out.mu[t];
    check_day(out, t);
  }
}

void run_re_es_care(const ParamVector& p, std::span<const double> returns,
                    std::span<const double> measures, double alpha, double mu1, RiskPath& out) {
  if (measures.size() != returns.size())
    throw std::invalid_argument("run_re_es_care: measures not aligned with returns");
  out.reset(returns.size(), true);
  run_care_core(p, returns, measures, alpha, p.tau(), mu1, false, 0.0, out);
  fill_measurement(p, returns, measures, out);
}

void run_re_t_es_care(const ParamVector& p, std::span<const double> returns,
                      std::span<const double> measures, double alpha, double mu1, RiskPath& out) {
  if (measures.size() != returns.size())
    throw std::invalid_argument("run_re_t_es_care: measures not aligned with returns");
  out.reset(returns.size(), true);
  run_care_core(p, returns, measures, alpha, p.tau(), mu1, true, 0.0, out);
  fill_measurement(p, returns, measures, out);
}

void run_path(const ModelSpec& spec, const ParamVector& p, std::span<const double> returns,
              std::span<const double> measures, RiskPath& out) {
  const double mu1 = initial_expectile(returns, spec.alpha);
  switch (spec.family) {
    case Family::CareSav: run_care_sav(p, returns, spec.alpha, mu1, out); break;
    case Family::EsCaviarAdd: run_es_caviar_add(p, returns, spec.alpha, mu1, out); break;
    case Family::EsCaviarMult: run_es_caviar_mult(p, returns, spec.alpha, mu1, out); break;
    case Family::EsCare: run_es_care(p, returns, spec.alpha, mu1, out); break;
    case Family::ReEsCare: run_re_es_care(p, returns, measures, spec.alpha, mu1, out); break;
    case Family::ReTEsCare: run_re_t_es_care(p, returns, measures, spec.alpha, mu1, out); break;
  }
}

RiskPath run_path(const ModelSpec& spec, const ParamVector& p, std::span<const double> returns,
                  std::span<const double> measures) {
  RiskPath out;
  run_path(spec, p, returns, measures, out);
  return out;
}

OneStep forecast_one_step(const ModelSpec& spec, const ParamVector& p, const RiskPath& path,
                          double last_return, double last_measure) {
  if (path.mu.empty()) throw std::invalid_argument("forecast_one_step: empty path");
  const double mu_n = path.mu.back();
  const double es_n = path.es.back();
  OneStep f;
  switch (spec.family) {
    case Family::CareSav: {
      const double fac = es_scaling_factor(p.external_tau, spec.alpha);
      f.var = p.v[0] + p.v[1] * std::fabs(last_return) + p.v[2] * mu_n;
      f.es = fac * f.var;
      break;
    }
    case Family::EsCaviarAdd: {
      f.var = p.v[0] + p.v[1] * std::fabs(last_return) + p.v[2] * mu_n;
      double w = mu_n - es_n;
      if (last_return <= mu_n) w = p.v[3] + p.v[4] * (mu_n - last_return) + p.v[5] * w;
      f.es = f.var - w;
      break;
    }
    case Family::EsCaviarMult: {
      f.var = p.v[0] + p.v[1] * std::fabs(last_return) + p.v[2] * mu_n;
      f.es = (1.0 + std::exp(p.v[3])) * f.var;
      break;
    }
    case Family::EsCare: {
      const double fac = es_scaling_factor(p.tau(), spec.alpha);
      const double d = std::fabs(last_return);
      f.var = p.v[0] + p.v[1] * d + p.v[2] * mu_n;
      f.es = p.v[0] * fac + p.v[1] * fac * d + p.v[2] * es_n;
      break;
    }
    case Family::ReEsCare: {
      const double fac = es_scaling_factor(p.tau(), spec.alpha);
      f.var = p.v[0] + p.v[1] * last_measure + p.v[2] * mu_n;
      f.es = p.v[0] * fac + p.v[1] * fac * last_measure + p.v[2] * es_n;
      break;
    }
    case Family::ReTEsCare: {
      const double fac = es_scaling_factor(p.tau(), spec.alpha);
      const int base = (last_return <= spec.threshold_c) ? 0 : 3;
      f.var = p.v[base] + p.v[base + 1] * last_measure + p.v[base + 2] * mu_n;
      f.es = p.v[base] * fac + p.v[base + 1] * fac * last_measure + p.v[base + 2] * es_n;
      break;
    }
  }
  return f;
}

}  // namespace escare
