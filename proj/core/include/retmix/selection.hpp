#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "retmix/em.hpp"

namespace retmix {

struct SelectionConfig {
  int max_components = 5;
  int bootstrap_samples = 100;
  double forward_alpha = 0.25;
  double backward_alpha = 0.25;
  EMConfig em;
};

enum class TestDirection { Forward, Backward };

struct LRTRecord {
  int h0 = 0;
  int h1 = 0;
  double lambda_obs = 0.0;
  double p_value = 1.0;
  double alpha_used = 0.0;
  TestDirection direction = TestDirection::Forward;
  bool rejected = false;
  bool reused = false;  // p-value carried over from an earlier identical test
};

struct SelectionTrace {
  std::vector<LRTRecord> tests;
  int chosen_g = 1;
  std::map<int, EMFitResult> fits_by_g;
};

struct BootstrapLRT {
  double lambda_obs = 0.0;
  double p_value = 1.0;
  int valid_samples = 0;
  std::vector<double> null_lambdas;  // retained samples, in sample-index order
};

/// lambda = -2 (LL0 - LL1). Negative values signal an inferior local optimum
/// under the larger model; callers decide what to do with them.
double lrt_statistic(double ll0, double ll1);

/// Bootstrapped likelihood-ratio test of g0 vs g1 components. Fits both sizes
/// to the data (fit0/fit1 may be supplied to reuse existing fits), then draws
/// B samples of size |data| from the fitted g0 mixture. Each sample is fit at
/// both sizes: the g0 fit is seeded from the sample's own 1-component MLE and
/// the g1 fit from the sample's g0 fit. Samples whose fits fail or whose
/// statistic is negative shrink the denominator. The p-value follows the
/// "+1" convention: (1 + #{lambda_b > 0 and lambda_b >= lambda_obs}) /
/// (valid + 1). Samples run in parallel on per-sample RNG streams.
BootstrapLRT bootstrap_lrt(std::span<const double> data, int g0, int g1, int B,
                           const SelectionConfig& cfg, std::uint64_t seed, int threads = 0,
                           const EMFitResult* fit0 = nullptr,
                           const EMFitResult* fit1 = nullptr);

/// One hypothesis test inside select_components: given the fits of both
/// hypotheses on the original data, produce (lambda_obs, p_value).
using LRTester = std::function<std::pair<double, double>(
    int h0, int h1, const EMFitResult& fit0, const EMFitResult& fit1)>;

/// Forward-backward selection of the number of components.
///
/// Forward: the basis starts at 1; each g = 2..max_components is tested
/// against the basis at forward_alpha and the basis moves to g on rejection.
/// Backward: h0 = basis-1, basis-2, ... is tested against the current basis
/// at backward_alpha; the basis drops to h0 on acceptance and the search ends
/// at the first rejection. A (h0, h1) pair already tested reuses its p-value,
/// judged against the current phase's alpha. Fits of the original data use
/// 3x the configured start count, each g seeded from the best (g-1) fit; a
/// g-component fit may not score below the (g-1) fit (error otherwise).
SelectionTrace select_components(std::span<const double> data, const SelectionConfig& cfg,
                                 std::uint64_t seed, int threads = 0);

/// Same procedure with an injectable tester (used to replay recorded
/// accept/reject sequences without bootstrapping).
SelectionTrace select_components_with_tester(std::span<const double> data,
                                             const SelectionConfig& cfg, std::uint64_t seed,
                                             int threads, const LRTester& tester);

}  // namespace retmix
