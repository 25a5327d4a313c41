#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace escare {

struct HitSeries {
  std::vector<std::uint8_t> hits;  // I(r_t < VaR_t)
  double alpha = 0.01;

  static HitSeries from_forecasts(std::span<const double> returns,
                                  std::span<const double> var_forecasts, double alpha);
  std::size_t m() const { return hits.size(); }
  std::size_t count() const;
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject_at_5pct = false;
  int dof = 0;
  std::string note;
};

double vrate(const HitSeries& h);

/// Kupiec LR test of unconditional coverage vs chi-square(1); x in {0, m}
/// handled with the 0 ln 0 = 0 convention.
TestResult kupiec_uc(const HitSeries& h);

/// Christoffersen LR_cc = LR_uc + LR_ind vs chi-square(2); degenerate
/// transition counts give LR_ind = 0 with a note.
TestResult christoffersen_cc(const HitSeries& h);

/// Engle-Manganelli dynamic quantile test: (hit_t - alpha) regressed on an
/// intercept, `lags` lagged hits and the contemporaneous VaR forecast;
/// DQ = b'(X'X)b / (alpha(1-alpha)) vs chi-square(lags + 2). Throws on a
/// singular design.
TestResult dq_test(const HitSeries& h, std::span<const double> var_forecasts, int lags);

/// Gaglianone et al. VQR test: quantile regression of r_t on (1, VaR_t) at
/// level alpha, Wald test of (intercept, slope) = (0, 1) vs chi-square(2).
TestResult vqr_test(std::span<const double> returns, std::span<const double> var_forecasts,
                    double alpha);

/// Proportion of returns below the ES forecast (nominal target ~0.35% for
/// 1% ES).
double es_rate(std::span<const double> returns, std::span<const double> es_forecasts);

struct McsConfig {
  double level = 0.90;
  int bootstrap_b = 5000;
  int block_length = 0;  // 0 -> ceil(m^(1/3))
  std::uint64_t seed = 1;
};

struct McsResult {
  std::vector<bool> included;      // in the level-MCS
  std::vector<double> p_values;    // MCS p-value per model (cummax convention)
  std::vector<int> eliminated;     // elimination order, worst first
};

/// Model confidence set with the max-|t| (R) statistic and a moving-block
/// bootstrap for the studentizing variances and the statistic's null
/// distribution. `losses[i]` is model i's per-day loss column.
McsResult mcs(const std::vector<std::vector<double>>& losses, const McsConfig& config);

}  // namespace escare
