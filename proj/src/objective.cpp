#include "escare/objective.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace escare {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

inline double al_term(double r, double mu, double es, double alpha) {
  // (alpha-1)/ES > 0 since both factors are negative on a valid path
  const double ind = (r <= mu) ? 1.0 : 0.0;
  return std::log((alpha - 1.0) / es) + (r - mu) * (alpha - ind) / (alpha * es);
}
}  // namespace

double als_objective(std::span<const double> returns, std::span<const double> mu, double tau) {
  if (returns.size() != mu.size()) throw std::invalid_argument("als_objective: size mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double d = returns[t] - mu[t];
    const double w = std::fabs(tau - ((returns[t] < mu[t]) ? 1.0 : 0.0));
    s += w * d * d;
  }
  return s;
}

LossReport al_loglik(std::span<const double> returns, const RiskPath& path, double alpha,
                     bool per_day) {
  LossReport rep;
  if (returns.size() != path.mu.size())
    throw std::invalid_argument("al_loglik: path not aligned with returns");
  if (!path.valid) {
    rep.total = kNegInf;
    rep.valid = false;
    return rep;
  }
  if (per_day) rep.per_day.resize(returns.size());
  double s = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (!(path.es[t] < 0.0)) {
      rep.total = kNegInf;
      rep.valid = false;
      rep.per_day.clear();
      return rep;
    }
    const double term = al_term(returns[t], path.mu[t], path.es[t], alpha);
    if (per_day) rep.per_day[t] = term;
    s += term;
  }
  rep.total = s;
  return rep;
}

double measurement_loglik(std::span<const double> u, double sigma_u) {
  if (!(sigma_u > 0.0)) return kNegInf;
  const double s2 = sigma_u * sigma_u;
  const double ls2 = std::log(s2);
  double s = 0.0;
  for (double ut : u) s += kLog2Pi + ls2 + ut * ut / s2;
  return -0.5 * s;
}

LossReport full_loglik(std::span<const double> returns, const RiskPath& path,
                       const ParamVector& params, double alpha) {
  LossReport rep = al_loglik(returns, path, alpha);
  if (!rep.valid) return rep;
  if (!family_uses_measure(params.family)) return rep;
  const double m = measurement_loglik(path.u, params.sigma_u());
  if (m == kNegInf) {
    rep.total = kNegInf;
    rep.valid = false;
    return rep;
  }
  rep.total += m;
  return rep;
}

double path_loglik(const ModelSpec& spec, const ParamVector& p, std::span<const double> returns,
                   std::span<const double> measures, RiskPath& workspace) {
  run_path(spec, p, returns, measures, workspace);
  return full_loglik(returns, workspace, p, spec.alpha).total;
}

double quantile_loss(std::span<const double> returns, std::span<const double> var_forecasts,
                     double alpha) {
  if (returns.size() != var_forecasts.size())
    throw std::invalid_argument("quantile_loss: size mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double ind = (returns[t] < var_forecasts[t]) ? 1.0 : 0.0;
    s += (alpha - ind) * (returns[t] - var_forecasts[t]);
  }
  return s;
}

std::vector<double> quantile_loss_per_day(std::span<const double> returns,
                                          std::span<const double> var_forecasts, double alpha) {
  if (returns.size() != var_forecasts.size())
    throw std::invalid_argument("quantile_loss_per_day: size mismatch");
  std::vector<double> out(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double ind = (returns[t] < var_forecasts[t]) ? 1.0 : 0.0;
    out[t] = (alpha - ind) * (returns[t] - var_forecasts[t]);
  }
  return out;
}

std::vector<double> fz_loss_per_day(std::span<const double> returns,
                                    std::span<const double> var_forecasts,
                                    std::span<const double> es_forecasts, double alpha) {
  if (returns.size() != var_forecasts.size() || returns.size() != es_forecasts.size())
    throw std::invalid_argument("fz_loss: size mismatch");
  std::vector<double> out(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (!(es_forecasts[t] < 0.0))
      throw std::invalid_argument("fz_loss: ES forecast must be negative (day " +
                                  std::to_string(t) + ")");
    out[t] = -al_term(returns[t], var_forecasts[t], es_forecasts[t], alpha);
  }
  return out;
}

double fz_loss(std::span<const double> returns, std::span<const double> var_forecasts,
               std::span<const double> es_forecasts, double alpha) {
  if (returns.size() != var_forecasts.size() || returns.size() != es_forecasts.size())
    throw std::invalid_argument("fz_loss: size mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (!(es_forecasts[t] < 0.0))
      throw std::invalid_argument("fz_loss: ES forecast must be negative (day " +
                                  std::to_string(t) + ")");
    s += -al_term(returns[t], var_forecasts[t], es_forecasts[t], alpha);
  }
  return s;
}

}  // namespace escare
