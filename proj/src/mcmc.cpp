#include "escare/mcmc.hpp"

#include "escare/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "escare/estimate_ml.hpp"
#include "escare/objective.hpp"

namespace escare {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr int kTuneEvery = 100;
constexpr double kTuneGain = 0.8;

std::vector<double> jittered_chol(std::vector<double> sigma, int d, int& repairs) {
  double eps = 0.0;
  double diag = 0.0;
  for (int i = 0; i < d; ++i) diag += sigma[i * d + i];
  diag = std::max(diag / d, 1e-12);
  for (int tries = 0; tries < 12; ++tries) {
    std::vector<double> a = sigma;
    if (eps > 0.0)
      for (int i = 0; i < d; ++i) a[i * d + i] += eps;
    if (stats::cholesky(a, d)) {
      if (eps > 0.0) ++repairs;
      return a;
    }
    eps = (eps == 0.0) ? 1e-10 * diag : eps * 10.0;
  }
  throw NumericalError("mcmc: proposal covariance could not be repaired");
}

// log N(x; mean, c * L L^T) for a block
double gauss_logpdf(std::span<const double> x, std::span<const double> mean,
                    const std::vector<double>& chol, int d, double c) {
  std::vector<double> z(d);
  for (int i = 0; i < d; ++i) z[i] = x[i] - mean[i];
  // solve L y = z
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) {
    double s = z[i];
    for (int k = 0; k < i; ++k) s -= chol[i * d + k] * z[k];
    z[i] = s / chol[i * d + i];
    logdet += std::log(chol[i * d + i]);
  }
  double q = 0.0;
  for (int i = 0; i < d; ++i) q += z[i] * z[i];
  q /= c;
  logdet = 2.0 * logdet + d * std::log(c);
  return -0.5 * (d * kLog2Pi + logdet + q);
}

double mixture_logpdf(std::span<const double> x, std::span<const double> mean,
                      const std::vector<double>& chol, int d,
                      const std::array<double, 3>& scales) {
  double best = kNegInf;
  std::array<double, 3> lp;
  for (int i = 0; i < 3; ++i) {
    lp[i] = gauss_logpdf(x, mean, chol, d, scales[i]) - std::log(3.0);
    best = std::max(best, lp[i]);
  }
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += std::exp(lp[i] - best);
  return best + std::log(s);
}

}  // namespace

void McmcConfig::validate() const {
  if (epoch_discard >= epoch_length || final_discard >= final_epoch)
    throw std::invalid_argument("mcmc config: discard must be below the epoch length");
  if (!(convergence_threshold > 0.0))
    throw std::invalid_argument("mcmc config: threshold must be positive");
  if (epoch_cap < 2) throw std::invalid_argument("mcmc config: epoch cap must be >= 2");
}

double target_acceptance(int block_dim) {
  if (block_dim < 1) throw std::invalid_argument("target_acceptance: dim must be >= 1");
  if (block_dim == 1) return 0.44;
  if (block_dim <= 4) return 0.35;
  return 0.234;
}

ProposalDraw propose_rw(std::span<const double> block_current,
                        const std::vector<double>& sigma_chol, int dim,
                        const std::array<double, 3>& mixture_scales, stats::Rng& rng) {
  ProposalDraw out;
  out.component = rng.uniform_int(3);
  const double s = std::sqrt(mixture_scales[out.component]);
  std::vector<double> z(dim);
  for (int i = 0; i < dim; ++i) z[i] = rng.normal();
  out.candidate.assign(block_current.begin(), block_current.end());
  for (int i = 0; i < dim; ++i) {
    double step = 0.0;
    for (int k = 0; k <= i; ++k) step += sigma_chol[i * dim + k] * z[k];
    out.candidate[i] += s * step;
  }
  return out;
}

bool mh_step(double lp_current, double lp_candidate, stats::Rng& rng) {
  if (lp_candidate == kNegInf) return false;
  const double diff = lp_candidate - lp_current;
  if (diff >= 0.0) return true;
  return std::log(rng.uniform()) < diff;
}

namespace {

struct BlockWork {
  int dim = 0;
  double target = 0.0;
  std::vector<double> chol_scaled;  // chol(multiplier * sigma)
  int tune_count = 0;
  int tune_accepts = 0;
};

void rescale_chol(const ChainState& st, int b, BlockWork& w) {
  w.chol_scaled = st.sigma_chol[b];
  const double s = std::sqrt(st.multiplier[b]);
  for (auto& v : w.chol_scaled) v *= s;
}

}  // namespace

ChainState run_burnin(const McmcProblem& problem, const McmcConfig& config, stats::Rng& rng) {
  config.validate();
  const std::size_t dim = problem.init.size();
  const std::size_t nb = problem.blocks.size();
  ChainState st;
  st.current = problem.init;
  st.current_lp = problem.log_posterior(st.current);
  if (st.current_lp == kNegInf)
    throw NumericalError("mcmc: initial point has zero posterior mass");
  st.sigma.resize(nb);
  st.sigma_chol.resize(nb);
  st.multiplier.assign(nb, 1.0);
  st.proposals.assign(nb, 0);
  st.accepts.assign(nb, 0);
  st.block_mean = st.current;

  std::vector<BlockWork> work(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const int d = static_cast<int>(problem.blocks[b].size());
    work[b].dim = d;
    work[b].target = target_acceptance(d);
    st.sigma[b].assign(d * d, 0.0);
    for (int i = 0; i < d; ++i) {
      const double s = problem.scale_hint[problem.blocks[b][i]];
      st.sigma[b][i * d + i] = s * s;
    }
    st.multiplier[b] = 2.38 * 2.38 / d;
    st.sigma_chol[b] = jittered_chol(st.sigma[b], d, st.jitter_repairs);
    rescale_chol(st, b, work[b]);
  }

  std::vector<std::vector<double>> epoch_iterates;
  epoch_iterates.reserve(config.epoch_length);
  std::vector<double> prev_sd;
  std::vector<double> cand_full(dim);
  std::vector<double> block_buf;

  for (int epoch = 1; epoch <= config.epoch_cap; ++epoch) {
    epoch_iterates.clear();
    for (int it = 0; it < config.epoch_length; ++it) {
      for (std::size_t b = 0; b < nb; ++b) {
        const auto& idx = problem.blocks[b];
        const int d = work[b].dim;
        block_buf.resize(d);
        for (int i = 0; i < d; ++i) block_buf[i] = st.current[idx[i]];
        const auto draw = propose_rw(block_buf, work[b].chol_scaled, d, config.mixture_scales, rng);
        cand_full = st.current;
        for (int i = 0; i < d; ++i) cand_full[idx[i]] = draw.candidate[i];
        const double lp_cand = problem.log_posterior(cand_full);
        ++st.proposals[b];
        ++work[b].tune_count;
        if (mh_step(st.current_lp, lp_cand, rng)) {
          st.current = cand_full;
          st.current_lp = lp_cand;
          ++st.accepts[b];
          ++work[b].tune_accepts;
        }
        if (work[b].tune_count == kTuneEvery) {
          const double rate = static_cast<double>(work[b].tune_accepts) / kTuneEvery;
          st.multiplier[b] *= std::exp(kTuneGain * (rate - work[b].target));
          st.multiplier[b] = std::clamp(st.multiplier[b], 1e-8, 1e6);
          rescale_chol(st, b, work[b]);
          work[b].tune_count = 0;
          work[b].tune_accepts = 0;
        }
      }
      epoch_iterates.push_back(st.current);
    }
    st.epochs_used = epoch;

    const std::vector<std::vector<double>> kept(epoch_iterates.begin() + config.epoch_discard,
                                                epoch_iterates.end());
    // per-parameter sd of this epoch
    std::vector<double> sd(dim, 0.0), mean(dim, 0.0);
    for (const auto& row : kept)
      for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
    for (auto& v : mean) v /= static_cast<double>(kept.size());
    for (const auto& row : kept)
      for (std::size_t j = 0; j < dim; ++j) sd[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    for (auto& v : sd) v = std::sqrt(v / std::max<std::size_t>(1, kept.size() - 1));
    st.block_mean = mean;
    st.last_sd = sd;

    // refreshed block covariances for the next epoch
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& idx = problem.blocks[b];
      const int d = work[b].dim;
      std::vector<std::vector<double>> rows(kept.size(), std::vector<double>(d));
      for (std::size_t r = 0; r < kept.size(); ++r)
        for (int i = 0; i < d; ++i) rows[r][i] = kept[r][idx[i]];
      auto cov = stats::sample_cov(rows);
      bool degenerate = true;
      for (int i = 0; i < d; ++i)
        if (cov[i * d + i] > 0.0) degenerate = false;
      if (!degenerate) {
        st.sigma[b] = cov;
        st.sigma_chol[b] = jittered_chol(st.sigma[b], d, st.jitter_repairs);
        st.multiplier[b] = 2.38 * 2.38 / d;
        rescale_chol(st, b, work[b]);
      }
    }

    if (!prev_sd.empty()) {
      double mapc = 0.0;
      int counted = 0;
      for (std::size_t j = 0; j < dim; ++j)
        if (prev_sd[j] > 0.0) {
          mapc += std::fabs(sd[j] - prev_sd[j]) / prev_sd[j];
          ++counted;
        }
      mapc = counted > 0 ? mapc / counted : 0.0;
      if (mapc < config.convergence_threshold) {
        st.converged = true;
        break;
      }
    }
    prev_sd = sd;
  }
  if (!st.converged)
    st.warnings.push_back("burn-in epoch cap reached before the sd-change threshold; proceeding");
  return st;
}

FinalSample run_final_epoch(const ChainState& state, const McmcProblem& problem,
                            const McmcConfig& config, stats::Rng& rng) {
  const std::size_t dim = problem.init.size();
  const std::size_t nb = problem.blocks.size();
  FinalSample out;

  std::vector<std::vector<double>> chol(nb);
  int repairs = 0;
  for (std::size_t b = 0; b < nb; ++b)
    chol[b] = jittered_chol(state.sigma[b], static_cast<int>(problem.blocks[b].size()), repairs);

  std::vector<double> current = state.current;
  double current_lp = state.current_lp;
  std::vector<long> props(nb, 0), accs(nb, 0);
  std::vector<double> cand_full(dim);
  std::vector<std::vector<double>> iterates;
  iterates.reserve(config.final_epoch);

  std::vector<double> mean_b, cur_b, cand_b;
  for (int it = 0; it < config.final_epoch; ++it) {
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& idx = problem.blocks[b];
      const int d = static_cast<int>(idx.size());
      mean_b.resize(d);
      cur_b.resize(d);
      for (int i = 0; i < d; ++i) {
        mean_b[i] = state.block_mean[idx[i]];
        cur_b[i] = current[idx[i]];
      }
      // independent draw centered at the last-epoch mean
      const auto draw = propose_rw(mean_b, chol[b], d, config.mixture_scales, rng);
      cand_full = current;
      for (int i = 0; i < d; ++i) cand_full[idx[i]] = draw.candidate[i];
      const double lp_cand = problem.log_posterior(cand_full);
      ++props[b];
      if (lp_cand != kNegInf) {
        const double q_cand =
            mixture_logpdf(draw.candidate, mean_b, chol[b], d, config.mixture_scales);
        const double q_cur = mixture_logpdf(cur_b, mean_b, chol[b], d, config.mixture_scales);
        const double log_ratio = (lp_cand - current_lp) + (q_cur - q_cand);
        if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
          current = cand_full;
          current_lp = lp_cand;
          ++accs[b];
        }
      }
    }
    iterates.push_back(current);
  }

  out.iterates.assign(iterates.begin() + config.final_discard, iterates.end());
  out.posterior_mean.assign(dim, 0.0);
  for (const auto& row : out.iterates)
    for (std::size_t j = 0; j < dim; ++j) out.posterior_mean[j] += row[j];
  for (auto& v : out.posterior_mean) v /= static_cast<double>(out.iterates.size());
  out.acceptance_rate.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    out.acceptance_rate[b] = static_cast<double>(accs[b]) / static_cast<double>(props[b]);
    if (out.acceptance_rate[b] < 0.01)
      out.warnings.push_back("final-epoch acceptance below 1% for block " + std::to_string(b));
  }
  return out;
}

McmcResult run_mcmc(const McmcProblem& problem, const McmcConfig& config) {
  stats::Rng rng(config.seed);
  McmcResult res;
  res.state = run_burnin(problem, config, rng);
  res.final_sample = run_final_epoch(res.state, problem, config, rng);
  res.posterior_mean = res.final_sample.posterior_mean;
  return res;
}

std::vector<std::vector<int>> mcmc_blocks(Family f) {
  switch (f) {
    case Family::ReEsCare: return {{0, 1, 2, 5}, {3}, {4, 6, 7, 8}};
    case Family::ReTEsCare: return {{0, 1, 2, 3, 4, 5, 8}, {6}, {7, 9, 10, 11}};
    case Family::EsCare: return {{0, 1, 2}, {3}};
    case Family::EsCaviarAdd: return {{0, 1, 2}, {3, 4, 5}};
    case Family::EsCaviarMult: return {{0, 1, 2}, {3}};
    case Family::CareSav:
      throw std::invalid_argument("mcmc_blocks: CARE-SAV is estimated by grid search");
  }
  throw std::logic_error("mcmc_blocks: unknown family");
}

McmcFit fit_mcmc(const ModelSpec& spec, std::span<const double> returns,
                 std::span<const double> measures, const McmcConfig& config) {
  spec.validate();
  config.validate();
  if (family_uses_measure(spec.family) && measures.size() != returns.size())
    throw std::invalid_argument("fit_mcmc: measures required for " + to_string(spec.family));

  // chain start: step-1 ALS betas plus a cheap ML-style candidate search
  MlConfig warm;
  warm.seed = stats::Rng::stream_seed(config.seed, 101);
  warm.n_random_starts = 500;
  warm.max_iterations = 2000;
  warm.expectile_starts = 12;
  const FitReport start = fit_ml(spec, returns, measures, warm);

  McmcProblem prob;
  prob.blocks = mcmc_blocks(spec.family);
  prob.init = start.params.v;
  prob.scale_hint.resize(prob.init.size());
  for (std::size_t i = 0; i < prob.init.size(); ++i)
    prob.scale_hint[i] = std::min(0.1, (spec.region.upper[i] - spec.region.lower[i]) / 10.0);

  RiskPath ws;
  ParamVector p = start.params;
  prob.log_posterior = [&, spec](std::span<const double> x) {
    p.v.assign(x.begin(), x.end());
    if (!spec.region.contains(p, spec.alpha)) return kNegInf;
    return path_loglik(spec, p, returns, measures, ws);  // flat prior over the region
  };

  McmcResult r = run_mcmc(prob, config);

  McmcFit fit;
  fit.params = start.params;
  fit.params.v = r.posterior_mean;
  fit.loglik = prob.log_posterior(fit.params.v);
  fit.converged = r.state.converged;
  fit.epochs_used = r.state.epochs_used;
  fit.acceptance_rate = r.final_sample.acceptance_rate;
  fit.warnings = r.state.warnings;
  fit.warnings.insert(fit.warnings.end(), r.final_sample.warnings.begin(),
                      r.final_sample.warnings.end());
  if (config.store_chain) fit.chain = std::move(r.final_sample.iterates);
  return fit;
}

}  // namespace escare
