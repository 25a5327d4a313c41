#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "escare/models.hpp"

namespace escare {

/// Square-root Realized-GARCH data generators. Model 1 is single-regime,
/// Model 2 switches the volatility recursion on the sign of the lagged return.
struct DgpSpec {
  int model = 1;          // 1 or 2
  std::size_t n = 1900;
  std::uint64_t seed = 1;

  void validate() const;  // model in {1,2}, n >= 100
};

struct SimData {
  std::vector<double> returns;   // r_1..r_n
  std::vector<double> x;         // realized-measure proxy X_1..X_n
  std::vector<double> sqrt_h;    // latent volatility path
  double sqrt_h_next = 0.0;      // sqrt(h_{n+1}), for one-step-ahead truth
};

/// Volatility is initialized at the model's unconditional level and the first
/// 200 draws are discarded.
SimData simulate(const DgpSpec& spec);

/// True Re-(T-)ES-CARE parameters implied by the DGP at quantile level alpha
/// (via z = ppf(alpha): beta = coefficient * z for intercept/measure terms,
/// phi = -0.9/z, delta1 = -0.02 z, delta2 = 0.02 z^2).
ParamVector map_to_escare(int model, double alpha);

struct TrueRisk {
  std::vector<double> var;  // sqrt_h * ppf(alpha)
  std::vector<double> es;   // -sqrt_h * pdf(ppf(alpha)) / alpha
  double tau = 0.0;         // solves the Eq.(5) relation with F = ES/VaR
};

TrueRisk true_risk(std::span<const double> sqrt_h, double alpha);

/// Writes a replicate to the returns-schema CSV: date,return,x,sqrt_h.
void write_simulated_csv(const std::string& path, const SimData& data);

}  // namespace escare
