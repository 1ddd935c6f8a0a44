#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "retmix/stats.hpp"

namespace retmix {

struct EMConfig {
  double std_ratio_bound = 16.0;  // sqrt of the variance-ratio bound
  double epsilon = 1e-15;         // relative log-likelihood convergence
  long long max_iters = 1000000000LL;
  int starts_per_component = 200;  // starts used per (g - 1) when g > 1
  bool record_path = false;        // keep the per-iteration log-likelihoods
};

enum class EMStatus { Converged, VarianceRatioViolated, MaxIters, DegenerateWeight };

struct EMFitResult {
  UnivariateMixture mixture;
  double log_likelihood = 0.0;
  long long iterations = 0;
  EMStatus status = EMStatus::Converged;
  std::vector<double> ll_path;  // filled when EMConfig::record_path is set
};

/// Log-likelihood of data under a mixture. Returns -infinity when the mixture
/// density vanishes (or overflows to zero) at any observation.
double log_likelihood(std::span<const double> data, const UnivariateMixture& mix);

/// Posterior component-membership probabilities of a single observation.
/// Throws std::domain_error when the mixture density at x is zero.
std::vector<double> posterior_probs(double x, const UnivariateMixture& mix);

/// Closed-form 1-component fit: sample mean and MLE std (divides by n).
EMFitResult analytic_mle(std::span<const double> data);

/// Builds one random start: draws g means from seed_mix, attaches each datum
/// to its nearest mean, sets weight = attached count / T and std = RMS
/// distance about the mean. Regenerates until every weight is positive and
/// the variance-ratio constraint holds; gives up after 10,000 attempts.
UnivariateMixture random_start(std::span<const double> data, int g,
                               const UnivariateMixture& seed_mix, const EMConfig& cfg,
                               std::mt19937_64& rng);

/// EM iterations from a given start. The log-likelihood never decreases; the
/// run ends Converged when the relative gain drops below cfg.epsilon, or with
/// a non-Converged status (and a -infinity log-likelihood) on a variance-ratio
/// violation, a degenerate weight, a nonpositive variance, or max_iters.
EMFitResult em_fit(std::span<const double> data, const UnivariateMixture& start,
                   const EMConfig& cfg);

/// Best-of-many-starts fit of a g-component mixture. g = 1 is the analytic
/// MLE. For g > 1, cfg.starts_per_component * (g - 1) starts run as an
/// embarrassingly parallel map, each start on its own RNG stream derived from
/// (seed, start index); ties in the final argmax go to the lowest start index,
/// so the result is reproducible for fixed (data, g, cfg, seed) regardless of
/// thread count. Start means are drawn from seed_mix when provided, else from
/// the 1-component MLE. Returns nullopt when no start converges.
std::optional<EMFitResult> multi_start_fit(std::span<const double> data, int g,
                                           const EMConfig& cfg, std::uint64_t seed,
                                           const UnivariateMixture* seed_mix = nullptr,
                                           int threads = 0);

/// Draws n values from a univariate normal mixture (inverse-CDF component
/// selection, then a normal draw).
std::vector<double> sample_mixture(const UnivariateMixture& mix, int n, std::mt19937_64& rng);

}  // namespace retmix
