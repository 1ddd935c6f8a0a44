#pragma once

#include <span>
#include <vector>

namespace retmix {

struct ARMASpec {
  std::vector<double> ar_coeffs;
  std::vector<double> ma_coeffs;  // model convention: Z_t = eps_t - theta_1 eps_{t-1} - ...
  double innovation_variance = 1.0;
};

/// Sample autocorrelations for lags 0..max_lag; the denominator is the total
/// sum of squares about the sample mean. Throws on constant series.
std::vector<double> acf(std::span<const double> series, int max_lag);

/// Partial autocorrelations via the Durbin-Levinson recursion on the sample
/// ACF; entry 0 is fixed at 1.
std::vector<double> pacf(std::span<const double> series, int max_lag);

/// Ljung-Box portmanteau test of no serial correlation over lags 1..max_lag.
/// Returns the p-value from the chi-square reference with max_lag degrees of
/// freedom.
double serial_correlation_test(std::span<const double> series, int max_lag);

/// alpha* / N.
double bonferroni_alpha(double alpha_star, int n_tests);

/// Family-wise error 1 - (1 - alpha)^N.
double familywise_error(double alpha, int n_tests);

/// Theoretical autocorrelations of a stationary ARMA process for lags
/// 0..max_lag, computed from the psi-weight expansion. Throws when the AR
/// polynomial has a root on or inside the unit circle.
std::vector<double> theoretical_arma_acf(const ARMASpec& spec, int max_lag);

/// Regularized lower incomplete gamma P(a, x); exposed for the chi-square
/// reference distribution.
double gamma_p(double a, double x);

}  // namespace retmix
