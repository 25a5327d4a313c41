#include "escare/backtest.hpp"

#include "escare/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "escare/estimate_ml.hpp"
#include "escare/stats.hpp"

namespace escare {

namespace {
double xlogy(double x, double y) { return x > 0.0 ? x * std::log(y) : 0.0; }
}

HitSeries HitSeries::from_forecasts(std::span<const double> returns,
                                    std::span<const double> var_forecasts, double alpha) {
  if (returns.size() != var_forecasts.size())
    throw std::invalid_argument("hit series: size mismatch");
  HitSeries h;
  h.alpha = alpha;
  h.hits.resize(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t)
    h.hits[t] = returns[t] < var_forecasts[t] ? 1 : 0;
  return h;
}

std::size_t HitSeries::count() const {
  std::size_t c = 0;
  for (auto v : hits) c += v;
  return c;
}

double vrate(const HitSeries& h) {
  if (h.hits.empty()) throw std::invalid_argument("vrate: empty hit series");
  return static_cast<double>(h.count()) / static_cast<double>(h.m());
}

TestResult kupiec_uc(const HitSeries& h) {
  if (h.hits.empty()) throw std::invalid_argument("kupiec_uc: empty hit series");
  const double m = static_cast<double>(h.m());
  const double x = static_cast<double>(h.count());
  const double phat = x / m;
  const double ll_null = xlogy(x, h.alpha) + xlogy(m - x, 1.0 - h.alpha);
  const double ll_alt = xlogy(x, phat) + xlogy(m - x, 1.0 - phat);
  TestResult r;
  r.statistic = std::max(0.0, -2.0 * (ll_null - ll_alt));
  r.dof = 1;
  r.p_value = stats::chi2_sf(r.statistic, 1);
  r.reject_at_5pct = r.p_value < 0.05;
  return r;
}

TestResult christoffersen_cc(const HitSeries& h) {
  if (h.m() < 2) throw std::invalid_argument("christoffersen_cc: need m >= 2");
  double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
  for (std::size_t t = 1; t < h.m(); ++t) {
    if (h.hits[t - 1] == 0)
      (h.hits[t] == 0 ? n00 : n01) += 1.0;
    else
      (h.hits[t] == 0 ? n10 : n11) += 1.0;
  }
  TestResult r;
  double lr_ind = 0.0;
  const double n0 = n00 + n01, n1 = n10 + n11;
  if (n0 > 0.0 && n1 > 0.0 && n01 + n11 > 0.0 && n00 + n10 > 0.0) {
    const double p01 = n01 / n0, p11 = n11 / n1, p = (n01 + n11) / (n0 + n1);
    const double ll_null = xlogy(n01 + n11, p) + xlogy(n00 + n10, 1.0 - p);
    const double ll_alt = xlogy(n01, p01) + xlogy(n00, 1.0 - p01) + xlogy(n11, p11) +
                          xlogy(n10, 1.0 - p11);
    lr_ind = std::max(0.0, -2.0 * (ll_null - ll_alt));
  } else {
    r.note = "degenerate transition counts; LR_ind set to 0";
  }
  r.statistic = kupiec_uc(h).statistic + lr_ind;
  r.dof = 2;
  r.p_value = stats::chi2_sf(r.statistic, 2);
  r.reject_at_5pct = r.p_value < 0.05;
  return r;
}

TestResult dq_test(const HitSeries& h, std::span<const double> var_forecasts, int lags) {
  const std::size_t m = h.m();
  if (var_forecasts.size() != m) throw std::invalid_argument("dq_test: size mismatch");
  if (lags < 1) throw std::invalid_argument("dq_test: lags must be >= 1");
  if (m <= static_cast<std::size_t>(lags) + 2)
    throw std::invalid_argument("dq_test: m too small for the lag order");
  const int k = lags + 2;
  const std::size_t rows = m - static_cast<std::size_t>(lags);

  std::vector<double> xtx(k * k, 0.0), xty(k, 0.0);
  std::vector<double> row(k);
  for (std::size_t t = lags; t < m; ++t) {
    row[0] = 1.0;
    for (int l = 1; l <= lags; ++l) row[l] = static_cast<double>(h.hits[t - l]);
    row[k - 1] = var_forecasts[t];
    const double y = static_cast<double>(h.hits[t]) - h.alpha;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j <= i; ++j) xtx[i * k + j] += row[i] * row[j];
      xty[i] += row[i] * y;
    }
  }
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) xtx[i * k + j] = xtx[j * k + i];

  std::vector<double> chol = xtx;
  // scale-aware rank guard
  double scale = 0.0;
  for (int i = 0; i < k; ++i) scale = std::max(scale, xtx[i * k + i]);
  if (!stats::cholesky(chol, k))
    throw NumericalError("dq_test: singular regressor design");
  for (int i = 0; i < k; ++i)
    if (chol[i * k + i] * chol[i * k + i] < 1e-12 * scale)
      throw NumericalError("dq_test: singular regressor design");

  const auto beta = stats::chol_solve(chol, k, xty);
  double quad = 0.0;  // b' (X'X) b
  for (int i = 0; i < k; ++i) quad += beta[i] * xty[i];

  TestResult r;
  r.statistic = quad / (h.alpha * (1.0 - h.alpha));
  r.dof = k;
  r.p_value = stats::chi2_sf(r.statistic, k);
  r.reject_at_5pct = r.p_value < 0.05;
  (void)rows;
  return r;
}

namespace {

// IRLS pass for the tick-loss regression of r on (1, v)
void qreg_irls(std::span<const double> r, std::span<const double> v, double alpha, double& a,
               double& b) {
  for (int pass = 0; pass < 60; ++pass) {
    double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0;
    for (std::size_t t = 0; t < r.size(); ++t) {
      const double u = r[t] - a - b * v[t];
      const double w = std::fabs(alpha - (u < 0.0 ? 1.0 : 0.0)) / std::max(std::fabs(u), 1e-6);
      a00 += w;
      a01 += w * v[t];
      a11 += w * v[t] * v[t];
      b0 += w * r[t];
      b1 += w * v[t] * r[t];
    }
    const double det = a00 * a11 - a01 * a01;
    if (std::fabs(det) < 1e-12) return;
    const double na = (a11 * b0 - a01 * b1) / det;
    const double nb = (a00 * b1 - a01 * b0) / det;
    const double move = std::fabs(na - a) + std::fabs(nb - b);
    a = na;
    b = nb;
    if (move < 1e-10) return;
  }
}

// Tick-loss quantile regression: IRLS warm start + simplex polish.
std::vector<double> qreg_2d(std::span<const double> r, std::span<const double> v, double alpha) {
  double a = 0.0, b = 1.0;
  qreg_irls(r, v, alpha, a, b);
  auto tick = [&](std::span<const double> th) {
    double s = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t) {
      const double u = r[t] - th[0] - th[1] * v[t];
      s += u * (alpha - (u < 0.0 ? 1.0 : 0.0));
    }
    return s;
  };
  auto nm = nelder_mead(tick, {a, b}, {0.05, 0.05}, 1e-14, 4000);
  return nm.x;
}

}  // namespace

TestResult vqr_test(std::span<const double> returns, std::span<const double> var_forecasts,
                    double alpha) {
  const std::size_t m = returns.size();
  if (var_forecasts.size() != m) throw std::invalid_argument("vqr_test: size mismatch");
  if (m < 50) throw std::invalid_argument("vqr_test: need m >= 50");
  {
    const double spread = stats::stddev(var_forecasts);
    const double level = std::fabs(stats::mean(var_forecasts)) + 1.0;
    if (!(spread > 1e-8 * level))
      throw NumericalError("vqr_test: near-constant forecasts leave the slope unidentified");
  }

  const auto theta = qreg_2d(returns, var_forecasts, alpha);

  // Wald covariance by a pairs bootstrap of the day index: the plug-in
  // sparsity estimators badly understate the near-singular direction of the
  // (intercept, slope) errors at 1% coverage.
  const int kBoot = 150;
  stats::Rng rng(0x5eedULL ^ m);
  std::vector<double> rs(m), vs(m), ba(kBoot), bb(kBoot);
  for (int k = 0; k < kBoot; ++k) {
    for (std::size_t t = 0; t < m; ++t) {
      const int j = rng.uniform_int(static_cast<int>(m));
      rs[t] = returns[j];
      vs[t] = var_forecasts[j];
    }
    double a = theta[0], b = theta[1];
    qreg_irls(rs, vs, alpha, a, b);
    ba[k] = a;
    bb[k] = b;
  }
  const double ma = stats::mean(ba), mb = stats::mean(bb);
  double v00 = 0, v01 = 0, v11 = 0;
  for (int k = 0; k < kBoot; ++k) {
    v00 += (ba[k] - ma) * (ba[k] - ma);
    v01 += (ba[k] - ma) * (bb[k] - mb);
    v11 += (bb[k] - mb) * (bb[k] - mb);
  }
  v00 /= kBoot - 1;
  v01 /= kBoot - 1;
  v11 /= kBoot - 1;

  TestResult r;
  r.dof = 2;
  const double detv = v00 * v11 - v01 * v01;
  if (!(detv > 1e-16 * std::max(1.0, v00 * v11)) || !(v00 > 0.0) || !(v11 > 0.0))
    throw NumericalError("vqr_test: degenerate bootstrap covariance (constant forecasts?)");
  const double e0 = theta[0] - 0.0, e1 = theta[1] - 1.0;
  r.statistic = (e0 * (v11 * e0 - v01 * e1) + e1 * (-v01 * e0 + v00 * e1)) / detv;
  r.p_value = stats::chi2_sf(r.statistic, 2);
  r.reject_at_5pct = r.p_value < 0.05;
  return r;
}

double es_rate(std::span<const double> returns, std::span<const double> es_forecasts) {
  if (returns.size() != es_forecasts.size() || returns.empty())
    throw std::invalid_argument("es_rate: bad inputs");
  for (double e : es_forecasts)
    if (!(e < 0.0) || !std::isfinite(e))
      throw std::invalid_argument("es_rate: ES forecasts must be finite and negative");
  std::size_t c = 0;
  for (std::size_t t = 0; t < returns.size(); ++t)
    if (returns[t] < es_forecasts[t]) ++c;
  return static_cast<double>(c) / static_cast<double>(returns.size());
}

namespace {

double safe_t(double num, double var) {
  if (var > 1e-300) return num / std::sqrt(var);
  if (std::fabs(num) < 1e-300) return 0.0;
  return num > 0.0 ? 1e12 : -1e12;
}

}  // namespace

McsResult mcs(const std::vector<std::vector<double>>& losses, const McsConfig& config) {
  const int k = static_cast<int>(losses.size());
  if (k < 2) throw std::invalid_argument("mcs: need at least 2 models");
  const std::size_t m = losses[0].size();
  for (const auto& col : losses)
    if (col.size() != m || m == 0) throw std::invalid_argument("mcs: unequal day counts");
  if (config.bootstrap_b < 100) throw std::invalid_argument("mcs: need at least 100 bootstrap draws");

  const int block = config.block_length > 0
                        ? config.block_length
                        : static_cast<int>(std::ceil(std::cbrt(static_cast<double>(m))));
  stats::Rng rng(config.seed);

  // per-model means over each moving-block resample, shared by all pairs and rounds
  const int B = config.bootstrap_b;
  std::vector<std::vector<double>> boot_mean(B, std::vector<double>(k, 0.0));
  std::vector<std::size_t> idx(m);
  for (int b = 0; b < B; ++b) {
    std::size_t filled = 0;
    while (filled < m) {
      const std::size_t start = static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(m) - block + 1));
      for (int j = 0; j < block && filled < m; ++j) idx[filled++] = start + j;
    }
    for (int i = 0; i < k; ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < m; ++t) s += losses[i][idx[t]];
      boot_mean[b][i] = s / static_cast<double>(m);
    }
  }
  std::vector<double> mbar(k, 0.0);
  for (int i = 0; i < k; ++i) mbar[i] = stats::mean(losses[i]);

  McsResult res;
  res.included.assign(k, true);
  res.p_values.assign(k, 1.0);

  std::vector<int> alive(k);
  for (int i = 0; i < k; ++i) alive[i] = i;
  double cummax_p = 0.0;

  while (alive.size() >= 2) {
    const int ka = static_cast<int>(alive.size());
    std::vector<double> dbar(ka * ka, 0.0), dvar(ka * ka, 0.0);
    for (int a = 0; a < ka; ++a)
      for (int c2 = a + 1; c2 < ka; ++c2) {
        const int i = alive[a], j = alive[c2];
        const double d = mbar[i] - mbar[j];
        double v = 0.0;
        for (int b = 0; b < B; ++b) {
          const double db = boot_mean[b][i] - boot_mean[b][j] - d;
          v += db * db;
        }
        v /= static_cast<double>(B);
        dbar[a * ka + c2] = d;
        dvar[a * ka + c2] = v;
      }

    double t_max = 0.0;
    for (int a = 0; a < ka; ++a)
      for (int c2 = a + 1; c2 < ka; ++c2)
        t_max = std::max(t_max, std::fabs(safe_t(dbar[a * ka + c2], dvar[a * ka + c2])));

    int exceed = 0;
    for (int b = 0; b < B; ++b) {
      double tb = 0.0;
      for (int a = 0; a < ka; ++a)
        for (int c2 = a + 1; c2 < ka; ++c2) {
          const int i = alive[a], j = alive[c2];
          const double num = boot_mean[b][i] - boot_mean[b][j] - dbar[a * ka + c2];
          tb = std::max(tb, std::fabs(safe_t(num, dvar[a * ka + c2])));
        }
      if (tb >= t_max) ++exceed;
    }
    const double p = static_cast<double>(exceed) / static_cast<double>(B);

    if (p >= 1.0 - config.level) {
      cummax_p = std::max(cummax_p, p);
      for (int i : alive) res.p_values[i] = std::max(res.p_values[i], cummax_p);
      break;
    }

    // eliminate the model with the largest studentized excess loss
    int worst_pos = 0;
    double worst_t = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < ka; ++a) {
      double ta = -std::numeric_limits<double>::infinity();
      for (int c2 = 0; c2 < ka; ++c2) {
        if (a == c2) continue;
        const double d = a < c2 ? dbar[a * ka + c2] : -dbar[c2 * ka + a];
        const double v = a < c2 ? dvar[a * ka + c2] : dvar[c2 * ka + a];
        ta = std::max(ta, safe_t(d, v));
      }
      if (ta > worst_t) {
        worst_t = ta;
        worst_pos = a;
      }
    }
    const int worst = alive[worst_pos];
    cummax_p = std::max(cummax_p, p);
    res.p_values[worst] = cummax_p;
    res.included[worst] = false;
    res.eliminated.push_back(worst);
    alive.erase(alive.begin() + worst_pos);
  }
  if (alive.size() == 1) res.p_values[alive[0]] = 1.0;
  return res;
}

}  // namespace escare
