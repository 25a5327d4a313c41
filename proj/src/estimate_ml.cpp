#include "escare/estimate_ml.hpp"

#include "escare/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "escare/objective.hpp"
#include "escare/stats.hpp"

namespace escare {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

NmResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                     std::vector<double> x0, std::vector<double> step, double ftol,
                     int max_iter) {
  const std::size_t d = x0.size();
  if (step.size() != d) throw std::invalid_argument("nelder_mead: step size mismatch");
  std::vector<std::vector<double>> simplex(d + 1, x0);
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i < d; ++i) simplex[i + 1][i] += step[i];
  int evals = 0;
  for (std::size_t i = 0; i <= d; ++i) {
    fv[i] = f(simplex[i]);
    ++evals;
  }

  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  NmResult res;
  while (evals < max_iter) {
    std::vector<std::size_t> order(d + 1);
    for (std::size_t i = 0; i <= d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order[0], worst = order[d], second = order[d - 1];

    if (std::isfinite(fv[best]) && std::isfinite(fv[worst]) &&
        fv[worst] - fv[best] < ftol * (std::fabs(fv[best]) + ftol)) {
      res.converged = true;
      break;
    }

    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i <= d; ++i)
        if (i != worst) s += simplex[i][j];
      centroid[j] = s / static_cast<double>(d);
    }

    for (std::size_t j = 0; j < d; ++j) xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[order[0]]) {
      for (std::size_t j = 0; j < d; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      for (std::size_t j = 0; j < d; ++j)
        xc[j] = centroid[j] + 0.5 * ((outside ? xr[j] : simplex[worst][j]) - centroid[j]);
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = xc;
        fv[worst] = fc;
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= d; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < d; ++j)
            simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
          fv[i] = f(simplex[i]);
          ++evals;
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= d; ++i)
    if (fv[i] < fv[best]) best = i;
  res.x = simplex[best];
  res.fval = fv[best];
  res.iterations = evals;
  return res;
}

namespace {

// Expectile path under the CARE recursion, mu only; regimes on sign(r_{t-1}).
void expectile_path(std::span<const double> beta, std::span<const double> returns,
                    std::span<const double> driver, bool threshold, double mu1,
                    std::vector<double>& mu) {
  const std::size_t n = returns.size();
  mu.resize(n);
  mu[0] = mu1;
  for (std::size_t t = 1; t < n; ++t) {
    const int base = (threshold && !(returns[t - 1] <= 0.0)) ? 3 : 0;
    mu[t] = beta[base] + beta[base + 1] * driver[t - 1] + beta[base + 2] * mu[t - 1];
  }
}

struct BetaBox {
  std::vector<double> lo, hi;
};

BetaBox beta_box(ExpectileFamily family) {
  BetaBox b;
  const int regimes = family == ExpectileFamily::Threshold ? 2 : 1;
  for (int g = 0; g < regimes; ++g) {
    b.lo.insert(b.lo.end(), {-3.0, -3.0, 0.0});
    b.hi.insert(b.hi.end(), {0.0, 0.0, 0.999});
  }
  return b;
}

}  // namespace

ExpectileFit fit_expectile_regression(std::span<const double> returns,
                                      std::span<const double> driver, double tau,
                                      ExpectileFamily family, double alpha,
                                      std::uint64_t seed, int n_starts) {
  if (returns.size() < 50) throw std::invalid_argument("fit_expectile_regression: need >= 50 obs");
  if (driver.size() != returns.size())
    throw std::invalid_argument("fit_expectile_regression: driver not aligned");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("fit_expectile_regression: bad tau");

  if (family == ExpectileFamily::Constant) {
    auto obj = [&](std::span<const double> b) {
      double s = 0.0;
      for (double r : returns) {
        const double d = r - b[0];
        s += std::fabs(tau - ((r < b[0]) ? 1.0 : 0.0)) * d * d;
      }
      return s;
    };
    const double m = stats::mean(returns);
    auto r = nelder_mead(obj, {m}, {std::max(0.1, std::fabs(m) * 0.5 + 0.1)}, 1e-14, 4000);
    return {r.x, r.fval};
  }

  const bool threshold = family == ExpectileFamily::Threshold;
  const double mu1 = initial_expectile(returns, alpha);
  std::vector<double> mu;
  auto objective = [&](std::span<const double> b) {
    for (std::size_t i = 0; i < b.size(); ++i)
      if (!std::isfinite(b[i])) return kInf;
    expectile_path(b, returns, driver, threshold, mu1, mu);
    return als_objective(returns, mu, tau);
  };

  const BetaBox box = beta_box(family);
  const std::size_t d = box.lo.size();
  auto boxed = [&](std::span<const double> b) {
    for (std::size_t i = 0; i < d; ++i)
      if (b[i] < box.lo[i] || b[i] > box.hi[i]) return kInf;
    return objective(b);
  };

  stats::Rng rng(seed);
  std::vector<std::pair<double, std::vector<double>>> pool;
  for (int s = 0; s < std::max(4, n_starts); ++s) {
    std::vector<double> cand(d);
    for (std::size_t i = 0; i < d; ++i)
      cand[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform();
    pool.emplace_back(boxed(cand), std::move(cand));
  }
  // data-informed starts: a persistent path anchored at the empirical
  // quantile, and the nested constant fit (so the recursion can never lose
  // to a flat expectile)
  {
    std::vector<double> cand(d, 0.0);
    for (std::size_t g = 0; g < d; g += 3) {
      cand[g] = std::min(0.0, mu1 * 0.5);
      cand[g + 2] = 0.5;
    }
    pool.emplace_back(boxed(cand), std::move(cand));
  }
  std::vector<double> const_start(d, 0.0);
  {
    const auto constant =
        fit_expectile_regression(returns, driver, tau, ExpectileFamily::Constant, alpha, seed);
    for (std::size_t g = 0; g < d; g += 3) const_start[g] = std::min(0.0, constant.beta[0]);
  }
  std::sort(pool.begin(), pool.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  ExpectileFit best;
  best.objective = boxed(const_start);
  best.beta = const_start;
  std::vector<std::vector<double>> polish = {const_start};
  for (int k = 0; k < 3 && k < static_cast<int>(pool.size()); ++k)
    if (std::isfinite(pool[k].first)) polish.push_back(pool[k].second);
  for (const auto& start : polish) {
    std::vector<double> step(d);
    for (std::size_t i = 0; i < d; ++i) {
      step[i] = 0.05 * (box.hi[i] - box.lo[i]);
      if (start[i] + step[i] > box.hi[i]) step[i] = -step[i];
    }
    auto r = nelder_mead(boxed, start, step, 1e-12, 6000);
    if (r.fval < best.objective) {
      best.objective = r.fval;
      best.beta = r.x;
    }
  }
  if (!std::isfinite(best.objective))
    throw NumericalError("fit_expectile_regression: all starts infeasible");
  return best;
}

double profile_scaling_factor(std::span<const double> returns, std::span<const double> mu,
                              double alpha) {
  if (returns.size() != mu.size()) throw std::invalid_argument("profile_scaling_factor: size mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double ind = (returns[t] <= mu[t]) ? 1.0 : 0.0;
    s += (returns[t] - mu[t]) * (alpha - ind) / (alpha * std::fabs(mu[t]));
  }
  return s / static_cast<double>(returns.size());
}

double tau_from_scaling_factor(double factor, double alpha) {
  const double x = (factor - 1.0) * alpha;  // tau / (1 - 2 tau)
  if (!(x > 0.0)) return 1e-5;
  return x / (1.0 + 2.0 * x);
}

namespace {

// Moment-based candidate for the measurement parameters: OLS of X_t on
// (1, |mu_t|, eps_t, eps_t^2 - mean) plus the profile tau.
bool moment_candidate(const ModelSpec& spec, std::span<const double> returns,
                      std::span<const double> measures, const std::vector<double>& beta,
                      ParamVector& p) {
  RiskPath path;
  ParamVector tmp = p;
  std::copy(beta.begin(), beta.end(), tmp.v.begin());
  tmp.tau_ref() = 0.5 * (1e-5 + spec.alpha);  // any valid tau; mu path does not depend on it
  run_path(spec, tmp, returns, measures, path);
  if (!path.valid) return false;

  const std::size_t n = returns.size();
  std::vector<double> xtx(16, 0.0), xty(4, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double row[4] = {1.0, std::fabs(path.mu[t]), path.eps[t],
                           path.eps[t] * path.eps[t] - path.eps_sq_mean};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) xtx[i * 4 + j] += row[i] * row[j];
      xty[i] += row[i] * measures[t];
    }
  }
  for (int i = 0; i < 4; ++i) xtx[i * 4 + i] += 1e-10;
  if (!stats::cholesky(xtx, 4)) return false;
  const auto coef = stats::chol_solve(xtx, 4, xty);

  double rss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double fit = coef[0] + coef[1] * std::fabs(path.mu[t]) + coef[2] * path.eps[t] +
                       coef[3] * (path.eps[t] * path.eps[t] - path.eps_sq_mean);
    rss += (measures[t] - fit) * (measures[t] - fit);
  }
  const int b = p.beta_count();
  p.v[b + 1] = coef[0];
  p.v[b + 2] = coef[1];
  p.v[b + 3] = coef[2];
  p.v[b + 4] = coef[3];
  p.v[b + 5] = std::sqrt(std::max(1e-8, rss / static_cast<double>(n)));
  const double fhat = profile_scaling_factor(returns, path.mu, spec.alpha);
  p.tau_ref() = std::clamp(tau_from_scaling_factor(fhat, spec.alpha), 1e-5, spec.alpha - 1e-5);
  return true;
}

std::vector<int> free_coordinates(const ModelSpec& spec) {
  // step 3 optimizes the full vector; step 2 samples everything but the betas
  std::vector<int> idx;
  const auto names = param_names(spec.family);
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i].rfind("beta", 0) != 0) idx.push_back(static_cast<int>(i));
  return idx;
}

}  // namespace

FitReport fit_ml(const ModelSpec& spec, std::span<const double> returns,
                 std::span<const double> measures, const MlConfig& config) {
  spec.validate();
  if (config.n_random_starts < 1) throw std::invalid_argument("fit_ml: n_random_starts < 1");
  if (spec.family == Family::CareSav)
    throw std::invalid_argument("fit_ml: CARE-SAV is estimated by care_grid_search");
  if (family_uses_measure(spec.family) && measures.size() != returns.size())
    throw std::invalid_argument("fit_ml: measures required for " + to_string(spec.family));
  {
    // degenerate data guard: ALS and the AL likelihood are flat on constants
    const double lo = *std::min_element(returns.begin(), returns.end());
    const double hi = *std::max_element(returns.begin(), returns.end());
    if (!(hi > lo)) throw std::invalid_argument("fit_ml: degenerate constant return series");
  }

  FitReport rep;
  stats::Rng rng(config.seed);

  // step 1: expectile-equation coefficients
  const double tau0 = config.step1_tau > 0.0 ? config.step1_tau
                                             : stats::gaussian_expectile_tau(spec.alpha);
  std::vector<double> driver(returns.size());
  if (family_uses_measure(spec.family))
    std::copy(measures.begin(), measures.end(), driver.begin());
  else
    for (std::size_t i = 0; i < returns.size(); ++i) driver[i] = std::fabs(returns[i]);
  const auto family = family_is_threshold(spec.family) ? ExpectileFamily::Threshold
                                                       : ExpectileFamily::Linear;
  const auto step1 =
      fit_expectile_regression(returns, driver, tau0, family, spec.alpha,
                               stats::Rng::stream_seed(config.seed, 17), config.expectile_starts);

  ParamVector p = ParamVector::zeros(spec.family);
  std::copy(step1.beta.begin(), step1.beta.end(), p.v.begin());

  // step 2: random candidates for the non-beta parameters
  RiskPath ws;
  const auto free_idx = free_coordinates(spec);
  ParamVector cand = p;
  double best_ll = -kInf;
  ParamVector best = p;
  for (int s = 0; s < config.n_random_starts; ++s) {
    for (int i : free_idx)
      cand.v[i] = spec.region.lower[i] +
                  (spec.region.upper[i] - spec.region.lower[i]) * rng.uniform();
    if (!spec.region.contains(cand, spec.alpha)) continue;
    const double ll = path_loglik(spec, cand, returns, measures, ws);
    if (std::isfinite(ll)) {
      ++rep.feasible_starts;
      if (ll > best_ll) {
        best_ll = ll;
        best = cand;
      }
    }
  }
  if (family_uses_measure(spec.family)) {
    ParamVector mc = p;
    if (moment_candidate(spec, returns, measures, step1.beta, mc) &&
        spec.region.contains(mc, spec.alpha)) {
      const double ll = path_loglik(spec, mc, returns, measures, ws);
      if (std::isfinite(ll)) {
        ++rep.feasible_starts;
        if (ll > best_ll) {
          best_ll = ll;
          best = mc;
        }
      }
    }
  }
  if (rep.feasible_starts == 0)
    throw NumericalError("fit_ml: no feasible starting vector (all candidates invalid)");

  // step 3: constrained local optimization of the full parameter vector
  auto neg_ll = [&](std::span<const double> x) {
    ParamVector q = best;
    q.v.assign(x.begin(), x.end());
    if (!spec.region.contains(q, spec.alpha)) return kInf;
    const double ll = path_loglik(spec, q, returns, measures, ws);
    return std::isfinite(ll) ? -ll : kInf;
  };
  std::vector<double> step(best.size());
  for (std::size_t i = 0; i < step.size(); ++i) {
    step[i] = 0.02 * (spec.region.upper[i] - spec.region.lower[i]);
    if (best.v[i] + step[i] > spec.region.upper[i]) step[i] = -step[i];
  }
  auto nm = nelder_mead(neg_ll, best.v, step, config.tolerance, config.max_iterations);

  rep.params = best;
  if (std::isfinite(nm.fval) && -nm.fval >= best_ll) {
    rep.params.v = nm.x;
    rep.loglik = -nm.fval;
  } else {
    rep.loglik = best_ll;  // keep the best iterate when polishing failed to improve
    rep.warnings.push_back("local optimizer did not improve on the best random start");
  }
  rep.converged = nm.converged;
  rep.iterations = nm.iterations;
  if (!nm.converged) rep.warnings.push_back("optimizer hit the evaluation cap; best iterate returned");
  return rep;
}

std::vector<double> default_tau_grid(double alpha, int points) {
  if (points < 1) throw std::invalid_argument("default_tau_grid: empty grid");
  const double lo = 1e-4, hi = alpha - 1e-4;
  if (!(hi > lo)) throw std::invalid_argument("default_tau_grid: alpha too small for grid");
  std::vector<double> g(points);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < points; ++i)
    g[i] = std::exp(llo + (lhi - llo) * (points == 1 ? 0.0 : static_cast<double>(i) / (points - 1)));
  return g;
}

GridSearchFit care_grid_search(std::span<const double> returns, double alpha,
                               std::span<const double> grid, std::uint64_t seed, int n_starts) {
  if (grid.empty()) throw std::invalid_argument("care_grid_search: empty grid");
  for (double t : grid)
    if (!(t > 0.0 && t < alpha))
      throw std::invalid_argument("care_grid_search: grid tau outside (0, alpha)");

  std::vector<double> driver(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) driver[i] = std::fabs(returns[i]);
  const double mu1 = initial_expectile(returns, alpha);

  GridSearchFit best;
  double best_dev = kInf;
  std::vector<double> mu;
  std::vector<double> taus(grid.begin(), grid.end());
  std::sort(taus.begin(), taus.end());  // ascending scan makes ties pick the smaller tau
  for (double tau : taus) {
    const auto fit = fit_expectile_regression(returns, driver, tau, ExpectileFamily::Linear,
                                              alpha, seed, n_starts);
    expectile_path(fit.beta, returns, driver, false, mu1, mu);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < returns.size(); ++t)
      if (returns[t] < mu[t]) ++hits;
    const double vrate = static_cast<double>(hits) / static_cast<double>(returns.size());
    const double dev = std::fabs(vrate - alpha);
    if (dev < best_dev) {
      best_dev = dev;
      best.tau = tau;
      best.vrate = vrate;
      best.params = ParamVector::zeros(Family::CareSav);
      best.params.v = fit.beta;
      best.params.external_tau = tau;
    }
  }
  return best;
}

}  // namespace escare
