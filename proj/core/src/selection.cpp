#include "retmix/selection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "retmix/parallel.hpp"
#include "retmix/rng.hpp"

namespace retmix {

double lrt_statistic(double ll0, double ll1) { return -2.0 * (ll0 - ll1); }

BootstrapLRT bootstrap_lrt(std::span<const double> data, int g0, int g1, int B,
                           const SelectionConfig& cfg, std::uint64_t seed, int threads,
                           const EMFitResult* fit0, const EMFitResult* fit1) {
  if (!(g0 < g1)) throw std::invalid_argument("bootstrap_lrt: requires g0 < g1");
  if (B < 1) throw std::invalid_argument("bootstrap_lrt: requires B >= 1");
  const int T = static_cast<int>(data.size());

  EMFitResult f0, f1;
  if (fit0) {
    f0 = *fit0;
  } else {
    auto r = multi_start_fit(data, g0, cfg.em, seed, nullptr, threads);
    if (!r) throw std::runtime_error("bootstrap_lrt: g0 fit failed on the original data");
    f0 = std::move(*r);
  }
  if (fit1) {
    f1 = *fit1;
  } else {
    auto r = multi_start_fit(data, g1, cfg.em, seed + 1, &f0.mixture, threads);
    if (!r) throw std::runtime_error("bootstrap_lrt: g1 fit failed on the original data");
    f1 = std::move(*r);
  }

  BootstrapLRT out;
  out.lambda_obs = lrt_statistic(f0.log_likelihood, f1.log_likelihood);

  // One slot per sample; NaN marks a discarded sample.
  std::vector<double> lambdas(B, std::numeric_limits<double>::quiet_NaN());
  const UnivariateMixture null_mix = f0.mixture;
  parallel_for(B, threads, [&](int b) {
    auto rng = make_stream(seed, 0x626f6f74ULL, static_cast<std::uint64_t>(b));
    std::vector<double> sample = sample_mixture(null_mix, T, rng);
    std::uint64_t sub = rng();
    std::optional<EMFitResult> s0 =
        (g0 == 1) ? std::optional<EMFitResult>(analytic_mle(sample))
                  : multi_start_fit(sample, g0, cfg.em, sub, nullptr, 1);
    if (!s0) return;
    auto s1 = multi_start_fit(sample, g1, cfg.em, sub + 1, &s0->mixture, 1);
    if (!s1) return;
    double lam = lrt_statistic(s0->log_likelihood, s1->log_likelihood);
    if (lam >= 0.0) lambdas[b] = lam;
  });

  int above = 0;
  for (double lam : lambdas) {
    if (std::isnan(lam)) continue;
    out.null_lambdas.push_back(lam);
    if (lam > 0.0 && lam >= out.lambda_obs) ++above;
  }
  out.valid_samples = static_cast<int>(out.null_lambdas.size());
  out.p_value = static_cast<double>(1 + above) / (out.valid_samples + 1);
  return out;
}

SelectionTrace select_components(std::span<const double> data, const SelectionConfig& cfg,
                                 std::uint64_t seed, int threads) {
  // Trace state is threaded through the tester closure; fits are supplied by
  // the driver below.
  std::uint64_t test_counter = 0;
  LRTester tester = [&, seed, threads](int h0, int h1, const EMFitResult& f0,
                                       const EMFitResult& f1) {
    std::uint64_t state = ++test_counter;
    std::uint64_t sub = seed ^ splitmix64(state);
    BootstrapLRT bl = bootstrap_lrt(data, h0, h1, cfg.bootstrap_samples, cfg, sub, threads,
                                    &f0, &f1);
    return std::make_pair(bl.lambda_obs, bl.p_value);
  };
  return select_components_with_tester(data, cfg, seed, threads, tester);
}

SelectionTrace select_components_with_tester(std::span<const double> data,
                                             const SelectionConfig& cfg, std::uint64_t seed,
                                             int threads, const LRTester& tester) {
  if (cfg.max_components < 1)
    throw std::invalid_argument("select_components: max_components must be >= 1");
  if (static_cast<int>(data.size()) < 3 * cfg.max_components)
    throw std::invalid_argument("select_components: need at least 3*max_components points");

  SelectionTrace trace;
  trace.fits_by_g[1] = analytic_mle(data);

  // Original-data fits get three times the per-start budget, mirroring the
  // heavier effort spent on the real sample vs bootstrap replicas.
  EMConfig em_orig = cfg.em;
  em_orig.starts_per_component *= 3;
  for (int g = 2; g <= cfg.max_components; ++g) {
    const UnivariateMixture& prev = trace.fits_by_g[g - 1].mixture;
    auto fit = multi_start_fit(data, g, em_orig, seed + static_cast<std::uint64_t>(g),
                               &prev, threads);
    if (!fit)
      throw std::runtime_error("select_components: no local optimum found for g = " +
                               std::to_string(g));
    if (fit->log_likelihood < trace.fits_by_g[g - 1].log_likelihood)
      throw std::runtime_error(
          "select_components: inferior local optimum at g = " + std::to_string(g) +
          "; increase the start count");
    trace.fits_by_g[g] = std::move(*fit);
  }

  auto run_test = [&](int h0, int h1, double alpha, TestDirection dir) -> bool {
    LRTRecord rec;
    rec.h0 = h0;
    rec.h1 = h1;
    rec.alpha_used = alpha;
    rec.direction = dir;
    for (const LRTRecord& old : trace.tests) {
      if (old.h0 == h0 && old.h1 == h1) {
        rec.lambda_obs = old.lambda_obs;
        rec.p_value = old.p_value;
        rec.reused = true;
        break;
      }
    }
    if (!rec.reused) {
      auto [lambda, p] = tester(h0, h1, trace.fits_by_g[h0], trace.fits_by_g[h1]);
      rec.lambda_obs = lambda;
      rec.p_value = p;
    }
    rec.rejected = rec.p_value <= alpha;
    trace.tests.push_back(rec);
    return rec.rejected;
  };

  int basis = 1;
  for (int g = 2; g <= cfg.max_components; ++g)
    if (run_test(basis, g, cfg.forward_alpha, TestDirection::Forward)) basis = g;

  int chosen = basis;
  for (int h0 = basis - 1; h0 >= 1; --h0) {
    if (run_test(h0, chosen, cfg.backward_alpha, TestDirection::Backward)) break;
    chosen = h0;
  }
  trace.chosen_g = chosen;
  return trace;
}

}  // namespace retmix
