#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace escare {

enum class Family { CareSav, EsCaviarAdd, EsCaviarMult, EsCare, ReEsCare, ReTEsCare };

Family family_from_string(const std::string& s);
std::string to_string(Family f);
bool family_uses_measure(Family f);
bool family_is_threshold(Family f);

/// ES(alpha) / expectile(tau) scaling: 1 + tau / ((1 - 2 tau) alpha).
/// Valid and > 1 for 0 < tau < alpha < 0.5.
double es_scaling_factor(double tau, double alpha);

/// Parameter layout per family (flat vector + named accessors):
///   CareSav:      [b1,b2,b3]                       tau supplied externally
///   EsCaviarAdd:  [b1,b2,b3, g0,g1,g2]
///   EsCaviarMult: [b1,b2,b3, g0]
///   EsCare:       [b1,b2,b3, tau]
///   ReEsCare:     [b1,b2,b3, tau, xi, phi, d1, d2, sigma_u]
///   ReTEsCare:    [b1..b6,   tau, xi, phi, d1, d2, sigma_u]
struct ParamVector {
  Family family = Family::EsCare;
  std::vector<double> v;
  double external_tau = 0.0;  // CareSav only

  static ParamVector zeros(Family f);
  std::size_t size() const { return v.size(); }
  int beta_count() const { return family_is_threshold(family) ? 6 : 3; }

  double beta(int i) const { return v[i - 1]; }          // 1-based, matches model notation
  double& beta(int i) { return v[i - 1]; }
  double tau() const;
  double& tau_ref();
  double gamma(int i) const;                              // 0-based gamma_0..
  double xi() const { return v[beta_count() + 1]; }
  double phi() const { return v[beta_count() + 2]; }
  double delta1() const { return v[beta_count() + 3]; }
  double delta2() const { return v[beta_count() + 4]; }
  double sigma_u() const { return v[beta_count() + 5]; }

  std::vector<std::string> names() const;
};

std::size_t param_count(Family f);
std::vector<std::string> param_names(Family f);

/// Box constraints plus the structural validity checks (tau in (0, alpha),
/// beta3/beta6 < 1, sigma_u > 0, Add gammas >= 0). Defaults follow the
/// estimation boxes; any bound can be overridden by parameter name.
struct ConstraintRegion {
  std::vector<double> lower, upper;

  static ConstraintRegion defaults(Family f, double alpha);
  void override_bounds(const std::string& name, double lo, double hi, Family f);
  bool contains(const ParamVector& p, double alpha) const;
};

struct ModelSpec {
  Family family = Family::EsCare;
  double alpha = 0.01;
  std::string measure_id;   // required for Re- families
  double threshold_c = 0.0; // self-exciting threshold on r_{t-1}
  ConstraintRegion region;  // populated by make_spec

  void validate() const;
};

ModelSpec make_spec(Family f, double alpha, std::string measure_id = "");

/// JSON (de)serialization of a model spec, including constraint overrides.
std::string spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const std::string& json_text);

/// Aligned per-day expectile (VaR) and ES paths produced by a recursion.
/// eps/u are populated for the Re- families only. An invalid path (mu >= 0 or
/// ES >= 0 or ES >= mu anywhere) keeps its values but sets valid = false;
/// estimators map that to a -inf likelihood.
struct RiskPath {
  std::vector<double> mu, es;
  std::vector<double> eps, u;   // Re- families
  double eps_sq_mean = 0.0;     // sample mean of eps^2 for this path
  bool valid = true;
  std::ptrdiff_t first_invalid = -1;

  void reset(std::size_t n, bool realized);
};

/// mu_1 = empirical alpha-quantile of the first min(100, n) returns.
double initial_expectile(std::span<const double> returns, double alpha);

void run_care_sav(const ParamVector& p, std::span<const double> returns, double alpha,
                  double mu1, RiskPath& out);
void run_es_caviar_add(const ParamVector& p, std::span<const double> returns, double alpha,
                       double mu1, RiskPath& out);
void run_es_caviar_mult(const ParamVector& p, std::span<const double> returns, double alpha,
                        double mu1, RiskPath& out);
void run_es_care(const ParamVector& p, std::span<const double> returns, double alpha,
                 double mu1, RiskPath& out);
void run_re_es_care(const ParamVector& p, std::span<const double> returns,
                    std::span<const double> measures, double alpha, double mu1, RiskPath& out);
void run_re_t_es_care(const ParamVector& p, std::span<const double> returns,
                      std::span<const double> measures, double alpha, double mu1, RiskPath& out);

/// Family dispatch. `measures` may be empty for non-realized families.
void run_path(const ModelSpec& spec, const ParamVector& p, std::span<const double> returns,
              std::span<const double> measures, RiskPath& out);

RiskPath run_path(const ModelSpec& spec, const ParamVector& p, std::span<const double> returns,
                  std::span<const double> measures = {});

struct OneStep {
  double var = 0.0;
  double es = 0.0;
};

/// Applies the family recursion once from the day-n state of `path`.
/// `last_measure` is ignored by the non-realized families.
OneStep forecast_one_step(const ModelSpec& spec, const ParamVector& p, const RiskPath& path,
                          double last_return, double last_measure);

}  // namespace escare
