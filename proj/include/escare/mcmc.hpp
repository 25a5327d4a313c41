#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "escare/models.hpp"
#include "escare/stats.hpp"

namespace escare {

struct McmcConfig {
  int epoch_length = 20000;
  int epoch_discard = 2000;
  int final_epoch = 12000;
  int final_discard = 2000;
  double convergence_threshold = 0.10;  // mean absolute % change of per-parameter sds
  std::array<double, 3> mixture_scales = {1.0, 100.0, 0.01};
  int epoch_cap = 15;
  std::uint64_t seed = 1;
  bool store_chain = false;

  void validate() const;
};

/// Target random-walk acceptance rate for a block of dimension d
/// (44% for d=1, 35% for 2..4, 23.4% above).
double target_acceptance(int block_dim);

/// Generic block-sampled target: a log posterior over a flat parameter
/// vector (-inf allowed), an ordered block partition, a feasible start and
/// per-parameter natural scales for the initial proposal covariance.
struct McmcProblem {
  std::function<double(std::span<const double>)> log_posterior;
  std::vector<std::vector<int>> blocks;
  std::vector<double> init;
  std::vector<double> scale_hint;
};

struct ChainState {
  std::vector<double> current;
  double current_lp = 0.0;
  std::vector<std::vector<double>> sigma;       // per-block covariance (block-dim^2)
  std::vector<std::vector<double>> sigma_chol;  // lower factors of sigma
  std::vector<double> multiplier;               // RGG scalar per block
  std::vector<double> block_mean;               // flat, post-discard mean of last epoch
  std::vector<double> last_sd;                  // per-parameter sd of last epoch
  std::vector<long> proposals, accepts;         // per block, whole run
  int epochs_used = 0;
  bool converged = false;
  int jitter_repairs = 0;
  std::vector<std::string> warnings;
};

struct ProposalDraw {
  std::vector<double> candidate;  // block coordinates only
  int component = 0;              // mixture component index drawn
};

/// Random-walk mixture proposal for one block: candidate = current + N(0, C_i L L^T)
/// with C_i drawn uniformly from `mixture_scales`.
ProposalDraw propose_rw(std::span<const double> block_current,
                        const std::vector<double>& sigma_chol, int dim,
                        const std::array<double, 3>& mixture_scales, stats::Rng& rng);

/// Plain Metropolis accept/reject on a log-posterior difference; -inf
/// candidates are always rejected. Returns true when accepted.
bool mh_step(double lp_current, double lp_candidate, stats::Rng& rng);

/// Epoch-adaptive burn-in: random-walk Metropolis per block with
/// Roberts-Gelman-Gilks scale tuning every 100 iterations; block covariances
/// are re-estimated at each epoch end from the post-discard iterates and the
/// run stops when the mean absolute percentage change of the per-parameter
/// standard deviations drops below the threshold (or at the epoch cap, with a
/// warning).
ChainState run_burnin(const McmcProblem& problem, const McmcConfig& config, stats::Rng& rng);

struct FinalSample {
  std::vector<std::vector<double>> iterates;  // post-discard
  std::vector<double> posterior_mean;
  std::vector<double> acceptance_rate;        // per block
  std::vector<std::string> warnings;
};

/// Final sampling epoch: independent Metropolis-Hastings with a 3-component
/// Gaussian mixture centered at the last burn-in epoch's post-discard block
/// means; the acceptance ratio includes the proposal densities.
FinalSample run_final_epoch(const ChainState& state, const McmcProblem& problem,
                            const McmcConfig& config, stats::Rng& rng);

struct McmcResult {
  std::vector<double> posterior_mean;
  ChainState state;
  FinalSample final_sample;
};

McmcResult run_mcmc(const McmcProblem& problem, const McmcConfig& config);

/// Parameter blocks for a model family (expectile betas share a block with
/// phi; tau is its own block; the remaining measurement parameters form the
/// third block).
std::vector<std::vector<int>> mcmc_blocks(Family f);

struct McmcFit {
  ParamVector params;
  double loglik = 0.0;  // full likelihood at the posterior mean
  bool converged = true;
  int epochs_used = 0;
  std::vector<double> acceptance_rate;
  std::vector<std::string> warnings;
  std::vector<std::vector<double>> chain;  // retained final-epoch iterates when requested
};

/// Posterior-mean fit of a model by the adaptive block sampler under the flat
/// prior over the spec's constraint region.
McmcFit fit_mcmc(const ModelSpec& spec, std::span<const double> returns,
                 std::span<const double> measures, const McmcConfig& config);

}  // namespace escare
