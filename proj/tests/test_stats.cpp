#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "retmix/em.hpp"
#include "retmix/rng.hpp"
#include "retmix/stats.hpp"

using namespace retmix;

TEST_SUITE("stats") {

TEST_CASE("normal_pdf closed-form values") {
  CHECK(normal_pdf(0.0, 0.0, 1.0) == doctest::Approx(0.3989422804).epsilon(1e-9));
  CHECK(normal_pdf(2.5, 2.5, 0.4) == doctest::Approx(1.0 / (0.4 * std::sqrt(2.0 * M_PI))));
  CHECK(normal_pdf(1.0, 0.0, 1.0) == normal_pdf(-1.0, 0.0, 1.0));
  CHECK_THROWS_AS(normal_pdf(0.0, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(normal_pdf(0.0, 0.0, -1.0), std::domain_error);
}

TEST_CASE("normal_cdf matches quadrature of the density") {
  CHECK(normal_cdf(0.0, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(normal_cdf(60.0, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  // Checked against the quadrature oracle: integral of phi over (-inf, 1.959964].
  double q = oracles::integrate([](double x) { return normal_pdf(x, 0.0, 1.0); }, -20.0,
                                1.959964);
  CHECK(q == doctest::Approx(0.975).epsilon(1e-9));
  CHECK(normal_cdf(1.959964, 0.0, 1.0) == doctest::Approx(q).epsilon(1e-11));
  CHECK_THROWS_AS(normal_cdf(0.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("mixture_pdf basics and contaminated-normal value") {
  UnivariateMixture one({{1.0, 0.3, 1.7}});
  CHECK(mixture_pdf(0.9, one) == doctest::Approx(normal_pdf(0.9, 0.3, 1.7)));

  // Contaminated normal: 0.75 N(0.08, 0.10) + 0.25 N(0.08, 0.30) at its mean.
  UnivariateMixture tukey({{0.75, 0.08, 0.10}, {0.25, 0.08, 0.30}});
  double expected = 0.75 * normal_pdf(0.08, 0.08, 0.10) + 0.25 * normal_pdf(0.08, 0.08, 0.30);
  CHECK(mixture_pdf(0.08, tukey) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(3.3245154).epsilon(1e-6));
}

TEST_CASE("mixture pdf integrates to one and matches the cdf") {
  auto rng = make_stream(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    int g = 1 + static_cast<int>(unif(rng) * 4);
    std::vector<MixtureComponent> comps(g);
    double wsum = 0.0;
    for (auto& c : comps) {
      c.weight = 0.1 + unif(rng);
      c.mean = 4.0 * (unif(rng) - 0.5);
      c.std = 0.2 + 2.0 * unif(rng);
      wsum += c.weight;
    }
    for (auto& c : comps) c.weight /= wsum;
    double resid = 1.0;
    for (int i = 0; i + 1 < g; ++i) resid -= comps[i].weight;
    comps.back().weight = resid;  // close the simplex exactly
    UnivariateMixture mix(comps);

    double lo = -40.0, hi = 40.0;
    double total =
        oracles::integrate([&](double x) { return mixture_pdf(x, mix); }, lo, hi, 1e-10);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));

    for (double x : {-1.3, 0.0, 0.7, 2.9}) {
      double viaint =
          oracles::integrate([&](double t) { return mixture_pdf(t, mix); }, lo, x, 1e-10);
      CHECK(mixture_cdf(x, mix) == doctest::Approx(viaint).epsilon(1e-8));
      CHECK(mixture_pdf(x, mix) >= 0.0);
    }

    // cdf' ~ pdf away from the tails.
    for (double x : {-0.9, 0.4, 1.2}) {
      double d = oracles::central_diff([&](double t) { return mixture_cdf(t, mix); }, x);
      if (mixture_pdf(x, mix) > 1e-8)
        CHECK(d == doctest::Approx(mixture_pdf(x, mix)).epsilon(1e-6));
    }
  }
}

TEST_CASE("mixture_cdf is nondecreasing with the right limits") {
  UnivariateMixture mix({{0.4, -1.0, 0.5}, {0.6, 2.0, 1.5}});
  CHECK(mixture_cdf(-1e3, mix) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mixture_cdf(1e3, mix) == doctest::Approx(1.0).epsilon(1e-12));
  double prev = 0.0;
  for (double x = -8.0; x <= 8.0; x += 0.25) {
    double v = mixture_cdf(x, mix);
    CHECK(v >= prev);
    prev = v;
  }
  UnivariateMixture sym({{1.0, 0.7, 0.9}});
  CHECK(mixture_cdf(0.7, sym) == doctest::Approx(0.5));
}

TEST_CASE("mixture_moments reproduces the published small-cap summary") {
  MomentSummary m = mixture_moments(fixtures::small_cap());
  CHECK(std::abs(m.mean - 1.132) < 1e-3);
  CHECK(std::abs(m.std - 0.3206) < 1e-3);
  CHECK(std::abs(m.skewness - 0.23954) < 1e-3);
  CHECK(std::abs(m.kurtosis - 3.71740) < 1e-3);
}

TEST_CASE("mixture_moments of a single component is normal") {
  MomentSummary m = mixture_moments(UnivariateMixture({{1.0, 0.37, 0.21}}));
  CHECK(m.mean == doctest::Approx(0.37));
  CHECK(m.std == doctest::Approx(0.21));
  CHECK(std::abs(m.skewness) < 1e-10);
  CHECK(std::abs(m.kurtosis - 3.0) < 1e-10);
}

TEST_CASE("mixture_moments symmetric two-point mean cancels") {
  UnivariateMixture mix({{0.5, -0.8, 0.3}, {0.5, 0.8, 0.3}});
  CHECK(std::abs(mixture_moments(mix).mean) < 1e-14);
}

TEST_CASE("mixture_moments agrees with Monte Carlo") {
  UnivariateMixture mix({{0.3, -1.0, 0.4}, {0.7, 1.5, 1.1}});
  MomentSummary m = mixture_moments(mix);
  auto rng = make_stream(11);
  const int n = 1000000;
  std::vector<double> draws = sample_mixture(mix, n, rng);
  oracles::MomentStats s = oracles::sample_moments(draws);
  double se_mean = m.std / std::sqrt(n);
  CHECK(std::abs(s.mean - m.mean) < 3.0 * se_mean);
  double se_var = m.std * m.std * std::sqrt(2.0 / (n - 1.0));
  CHECK(std::abs(s.var - m.std * m.std) < 3.0 * se_var);
  // Conservative standard errors for higher sample moments of a mixture.
  CHECK(std::abs(s.skew - m.skewness) < 3.0 * std::sqrt(6.0 / n) * 3.0);
  CHECK(std::abs(s.kurt - m.kurtosis) < 3.0 * std::sqrt(24.0 / n) * 3.0);
}

TEST_CASE("information_criteria reproduces every published table row") {
  for (const auto& row : fixtures::ic_table_rows()) {
    ICReport r = information_criteria(row.ll, 3 * row.g - 1, 88);
    CHECK(std::abs(r.aic - row.aic) < 1e-3);
    CHECK(std::abs(r.aicc - row.aicc) < 1e-3);
    CHECK(std::abs(r.bic - row.bic) < 1e-3);
    CHECK(r.aicc >= r.aic);
  }
}

TEST_CASE("information_criteria joint comparison and edge cases") {
  ICReport mixture = information_criteria(159.09, 28, 88);
  ICReport normal = information_criteria(134.43, 9, 88);
  CHECK(std::abs(mixture.aic - -262.18) < 0.02);
  CHECK(std::abs(normal.aic - -250.86) < 0.02);
  CHECK(mixture.aic < normal.aic);

  ICReport zero = information_criteria(0.0, 0, 10);
  CHECK(zero.aic == doctest::Approx(0.0));
  CHECK(zero.bic == doctest::Approx(0.0));
  CHECK(zero.aicc == doctest::Approx(0.5));

  CHECK_THROWS_AS(information_criteria(1.0, 8, 10), std::domain_error);
}

TEST_CASE("count_free_params univariate") {
  CHECK(count_free_params(fixtures::large_cap()) == 2);
  CHECK(count_free_params(fixtures::small_cap()) == 8);
}

TEST_CASE("future_obs_density is a proper symmetric density") {
  const double xbar = 1.08, s = 0.2;
  const int T = 12;
  CHECK(future_obs_density(xbar + 0.37, xbar, s, T) ==
        doctest::Approx(future_obs_density(xbar - 0.37, xbar, s, T)).epsilon(1e-14));
  double total = oracles::integrate(
      [&](double x) { return future_obs_density(x, xbar, s, T); }, xbar - 60.0, xbar + 60.0,
      1e-10);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(future_obs_density(0.0, 0.0, 1.0, 1), std::domain_error);
  CHECK_THROWS_AS(future_obs_density(0.0, 0.0, 0.0, 5), std::domain_error);
}

TEST_CASE("future_obs_density approaches the normal for large T") {
  const double xbar = 0.3, s = 1.4;
  for (double x : {-2.0, 0.3, 1.9, 4.0})
    CHECK(std::abs(future_obs_density(x, xbar, s, 10000) - normal_pdf(x, xbar, s)) < 1e-3);
}

TEST_CASE("mixture invariants enforced") {
  CHECK_THROWS_AS(UnivariateMixture({{0.5, 0.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(UnivariateMixture({{1.0, 0.0, 0.0}}), std::invalid_argument);
  UnivariateMixture mix({{0.6, 2.0, 1.0}, {0.4, -1.0, 0.5}});
  CHECK(mix[0].mean == doctest::Approx(-1.0));  // sorted by ascending mean
  UnivariateMixture ties({{0.5, 1.0, 2.0}, {0.5, 1.0, 0.5}});
  CHECK(ties[0].std == doctest::Approx(0.5));  // mean ties break by std
}

}  // TEST_SUITE
