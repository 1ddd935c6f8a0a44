#include <doctest.h>

#include <cmath>

#include "retmix/rng.hpp"
#include "retmix/selection.hpp"

using namespace retmix;

TEST_SUITE("selection") {

TEST_CASE("lrt_statistic") {
  CHECK(lrt_statistic(-3.4, -3.4) == doctest::Approx(0.0));
  CHECK(lrt_statistic(-24.7605, -18.3915) == doctest::Approx(12.738).epsilon(1e-4));
  CHECK(lrt_statistic(17.9019, 18.6383) == doctest::Approx(1.4728).epsilon(1e-4));
}

TEST_CASE("bootstrap_lrt p-value bounds and reproducibility from the lambda list") {
  UnivariateMixture gen({{1.0, 0.5, 1.0}});
  auto rng = make_stream(404);
  std::vector<double> data = sample_mixture(gen, 70, rng);

  SelectionConfig cfg;
  cfg.em.starts_per_component = 6;
  cfg.em.epsilon = 1e-9;
  cfg.em.max_iters = 5000;
  BootstrapLRT r = bootstrap_lrt(data, 1, 2, 30, cfg, 99, 2);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value <= 1.0);
  CHECK(r.valid_samples <= 30);
  CHECK(r.valid_samples >= 1);

  // The stored null lambdas reproduce the p-value exactly.
  int above = 0;
  for (double lam : r.null_lambdas) {
    CHECK(lam >= 0.0);
    if (lam > 0.0 && lam >= r.lambda_obs) ++above;
  }
  CHECK(r.p_value ==
        doctest::Approx(static_cast<double>(1 + above) / (r.valid_samples + 1)));

  // lambda_obs above every bootstrap draw pins p at 1/(valid+1).
  if (above == 0)
    CHECK(r.p_value == doctest::Approx(1.0 / (r.valid_samples + 1)));
}

TEST_CASE("select_components trivial and worked-example replays") {
  UnivariateMixture gen({{1.0, 0.0, 1.0}});
  auto rng = make_stream(5150);
  std::vector<double> data = sample_mixture(gen, 60, rng);

  SelectionConfig cfg;
  cfg.max_components = 1;
  SelectionTrace t1 = select_components(data, cfg, 1);
  CHECK(t1.chosen_g == 1);
  CHECK(t1.tests.empty());

  // Replay of the published worked sequence (max 10, forward 0.15 / backward
  // 0.20): rejections at (1 vs 4), (4 vs 7) going forward, acceptances down
  // the backward chain until (4 vs 5) rejects, choosing 5 components.
  SelectionConfig cfg2;
  cfg2.max_components = 10;
  cfg2.forward_alpha = 0.15;
  cfg2.backward_alpha = 0.20;
  cfg2.em.starts_per_component = 2;
  cfg2.em.epsilon = 1e-6;
  UnivariateMixture wide({{0.5, -2.0, 1.0}, {0.5, 2.0, 1.0}});
  auto rng2 = make_stream(6);
  std::vector<double> data2 = sample_mixture(wide, 120, rng2);

  LRTester scripted = [](int h0, int h1, const EMFitResult&, const EMFitResult&) {
    auto reject = [](bool r) { return r ? 0.01 : 0.90; };
    // Forward: reject 1v4 and 4v7 only. Backward p-values: 6v7 and 5v6 accept,
    // 4v5 is a RETEST of the forward pair, so the recorded forward p-value is
    // reused; make it land between the two alphas (0.15 < p <= 0.20).
    if (h0 == 1 && h1 == 4) return std::make_pair(10.0, reject(true));
    if (h0 == 4 && h1 == 7) return std::make_pair(10.0, reject(true));
    if (h0 == 4 && h1 == 5) return std::make_pair(3.0, 0.18);
    if (h0 == 6 && h1 == 7) return std::make_pair(1.0, reject(false));
    if (h0 == 5 && h1 == 6) return std::make_pair(1.0, reject(false));
    return std::make_pair(1.0, reject(false));
  };
  SelectionTrace t2 = select_components_with_tester(data2, cfg2, 7, 1, scripted);
  CHECK(t2.chosen_g == 5);
  // Forward tests: 9; backward: 6v7, 5v6, 4v5 -> 12 total, last one reused.
  REQUIRE(t2.tests.size() == 12);
  CHECK(t2.tests.back().h0 == 4);
  CHECK(t2.tests.back().h1 == 5);
  CHECK(t2.tests.back().reused);
  CHECK(t2.tests.back().rejected);  // 0.18 <= backward alpha 0.20
  for (const auto& t : t2.tests) CHECK(t.h0 < t.h1);
}

TEST_CASE("select_components finds three separated clusters") {
  UnivariateMixture gen(
      {{1.0 / 3, 0.0, 0.5}, {1.0 / 3, 5.0, 0.5}, {1.0 / 3, 10.0, 0.5}});
  SelectionConfig cfg;
  cfg.max_components = 4;
  cfg.bootstrap_samples = 20;
  cfg.em.starts_per_component = 6;
  cfg.em.epsilon = 1e-8;
  cfg.em.max_iters = 3000;

  int hits = 0;
  const int trials = 5;
  for (int trial = 0; trial < trials; ++trial) {
    auto rng = make_stream(9000 + trial);
    std::vector<double> data = sample_mixture(gen, 450, rng);
    SelectionTrace t = select_components(data, cfg, 100 + trial, 0);
    if (t.chosen_g == 3) ++hits;
    // Fit log-likelihoods are nondecreasing in g.
    double prev = -1e308;
    for (const auto& [g, fit] : t.fits_by_g) {
      CHECK(fit.log_likelihood >= prev);
      prev = fit.log_likelihood;
    }
    // Forward never lowers the basis; backward never raises it.
    int basis = 1;
    for (const auto& rec : t.tests) {
      if (rec.direction == TestDirection::Forward) {
        CHECK(rec.h0 == basis);
        if (rec.rejected) basis = rec.h1;
      } else {
        CHECK(rec.h1 <= basis);
        basis = std::min(basis, rec.h1);
      }
    }
  }
  CHECK(hits >= 4);  // 3 clusters recovered in nearly every seeded run
}

}  // TEST_SUITE
