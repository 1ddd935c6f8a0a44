#include "retmix/diagnostics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace retmix {

std::vector<double> acf(std::span<const double> series, int max_lag) {
  const int T = static_cast<int>(series.size());
  if (max_lag < 0) throw std::invalid_argument("acf: max_lag must be >= 0");
  if (T <= max_lag) throw std::invalid_argument("acf: series shorter than max_lag");
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= T;
  double tss = 0.0;
  for (double x : series) tss += (x - mean) * (x - mean);
  if (!(tss > 0.0)) throw std::domain_error("acf: series is constant");
  std::vector<double> r(max_lag + 1);
  for (int k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (int t = k; t < T; ++t) s += (series[t] - mean) * (series[t - k] - mean);
    r[k] = s / tss;
  }
  return r;
}

std::vector<double> pacf(std::span<const double> series, int max_lag) {
  std::vector<double> rho = acf(series, max_lag);
  std::vector<double> phi_prev(max_lag + 1, 0.0), phi(max_lag + 1, 0.0);
  std::vector<double> out(max_lag + 1, 0.0);
  out[0] = 1.0;
  if (max_lag == 0) return out;
  phi_prev[1] = rho[1];
  out[1] = rho[1];
  double denom = 1.0 - rho[1] * rho[1];
  for (int k = 2; k <= max_lag; ++k) {
    double num = rho[k];
    for (int j = 1; j < k; ++j) num -= phi_prev[j] * rho[k - j];
    double pk = (denom != 0.0) ? num / denom : 0.0;
    for (int j = 1; j < k; ++j) phi[j] = phi_prev[j] - pk * phi_prev[k - j];
    phi[k] = pk;
    out[k] = pk;
    denom *= (1.0 - pk * pk);
    phi_prev = phi;
  }
  return out;
}

namespace {

double gamma_p_series(double a, double x) {
  double sum = 1.0 / a, term = sum;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: invalid arguments");
  if (x == 0.0) return 0.0;
  return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double serial_correlation_test(std::span<const double> series, int max_lag) {
  const int T = static_cast<int>(series.size());
  if (max_lag < 1) throw std::invalid_argument("serial_correlation_test: max_lag must be >= 1");
  if (T <= max_lag + 1)
    throw std::invalid_argument("serial_correlation_test: series too short");
  std::vector<double> r = acf(series, max_lag);
  double q = 0.0;
  for (int k = 1; k <= max_lag; ++k) q += r[k] * r[k] / (T - k);
  q *= static_cast<double>(T) * (T + 2.0);
  double p = 1.0 - gamma_p(0.5 * max_lag, 0.5 * q);
  return p > 0.0 ? p : std::numeric_limits<double>::min();
}

double bonferroni_alpha(double alpha_star, int n_tests) {
  if (n_tests < 1) throw std::invalid_argument("bonferroni_alpha: N must be >= 1");
  return alpha_star / n_tests;
}

double familywise_error(double alpha, int n_tests) {
  if (n_tests < 1) throw std::invalid_argument("familywise_error: N must be >= 1");
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("familywise_error: alpha must lie in (0, 1)");
  return 1.0 - std::pow(1.0 - alpha, n_tests);
}

std::vector<double> theoretical_arma_acf(const ARMASpec& spec, int max_lag) {
  if (!(spec.innovation_variance > 0.0))
    throw std::invalid_argument("theoretical_arma_acf: innovation variance must be positive");
  const int p = static_cast<int>(spec.ar_coeffs.size());
  const int q = static_cast<int>(spec.ma_coeffs.size());

  // Stationarity: companion-matrix eigenvalues strictly inside the unit circle.
  if (p > 0) {
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) comp(0, i) = spec.ar_coeffs[i];
    for (int i = 1; i < p; ++i) comp(i, i - 1) = 1.0;
    Eigen::VectorXcd ev = comp.eigenvalues();
    for (int i = 0; i < p; ++i)
      if (std::abs(ev(i)) >= 1.0 - 1e-12)
        throw std::domain_error("theoretical_arma_acf: AR part is not stationary");
  }

  // psi-weights of Z_t = sum_j psi_j eps_{t-j}; truncated when negligible.
  const int kMax = 100000;
  std::vector<double> psi;
  psi.reserve(1024);
  psi.push_back(1.0);
  double tail = 1.0;
  for (int j = 1; j < kMax; ++j) {
    double v = 0.0;
    if (j <= q) v -= spec.ma_coeffs[j - 1];
    for (int i = 1; i <= std::min(j, p); ++i) v += spec.ar_coeffs[i - 1] * psi[j - i];
    psi.push_back(v);
    tail = std::abs(v);
    if (j > q + p && tail < 1e-16 && j > max_lag) break;
  }

  std::vector<double> gamma(max_lag + 1, 0.0);
  const int n = static_cast<int>(psi.size());
  for (int k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (int i = 0; i + k < n; ++i) s += psi[i] * psi[i + k];
    gamma[k] = spec.innovation_variance * s;
  }
  std::vector<double> rho(max_lag + 1);
  for (int k = 0; k <= max_lag; ++k) rho[k] = gamma[k] / gamma[0];
  return rho;
}

}  // namespace retmix
