#include "retmix/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace retmix {

namespace {
constexpr double kSqrt2Pi = 2.506628274631000502415765284811;
constexpr double kWeightSumTol = 1e-12;
}  // namespace

UnivariateMixture::UnivariateMixture(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("mixture needs at least one component");
  double sum = 0.0;
  for (const auto& c : components_) {
    if (!(c.std > 0.0)) throw std::invalid_argument("mixture component std must be positive");
    if (!(c.weight > 0.0) || c.weight > 1.0 + kWeightSumTol)
      throw std::invalid_argument("mixture component weight must be in (0, 1]");
    sum += c.weight;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol)
    throw std::invalid_argument("mixture weights must sum to 1");
  std::sort(components_.begin(), components_.end(),
            [](const MixtureComponent& a, const MixtureComponent& b) {
              if (a.mean != b.mean) return a.mean < b.mean;
              return a.std < b.std;
            });
}

double normal_pdf(double x, double mean, double std) {
  if (!(std > 0.0)) throw std::domain_error("normal_pdf: std must be positive");
  const double z = (x - mean) / std;
  return std::exp(-0.5 * z * z) / (std * kSqrt2Pi);
}

double normal_cdf(double x, double mean, double std) {
  if (!(std > 0.0)) throw std::domain_error("normal_cdf: std must be positive");
  const double z = (x - mean) / std;
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double mixture_pdf(double x, const UnivariateMixture& mix) {
  double d = 0.0;
  for (const auto& c : mix.components()) d += c.weight * normal_pdf(x, c.mean, c.std);
  return d;
}

double mixture_cdf(double x, const UnivariateMixture& mix) {
  double p = 0.0;
  for (const auto& c : mix.components()) p += c.weight * normal_cdf(x, c.mean, c.std);
  return p;
}

MomentSummary mixture_moments(const UnivariateMixture& mix) {
  // Raw moments of N(mu, sigma): E X^2 = mu^2 + s^2, E X^3 = mu^3 + 3 mu s^2,
  // E X^4 = mu^4 + 6 mu^2 s^2 + 3 s^4. Mixture raw moments are weight sums.
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const auto& c : mix.components()) {
    const double mu = c.mean, s2 = c.std * c.std;
    m1 += c.weight * mu;
    m2 += c.weight * (mu * mu + s2);
    m3 += c.weight * (mu * mu * mu + 3.0 * mu * s2);
    m4 += c.weight * (mu * mu * mu * mu + 6.0 * mu * mu * s2 + 3.0 * s2 * s2);
  }
  MomentSummary out;
  out.mean = m1;
  const double var = m2 - m1 * m1;
  out.std = std::sqrt(var);
  out.skewness = (m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1) / (var * out.std);
  out.kurtosis = (m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1) / (var * var);
  return out;
}

ICReport information_criteria(double log_likelihood, int free_params, int sample_size) {
  if (free_params < 0) throw std::domain_error("information_criteria: free_params must be >= 0");
  if (sample_size <= free_params + 2)
    throw std::domain_error("information_criteria: AICC needs sample_size > free_params + 2");
  ICReport r;
  r.log_likelihood = log_likelihood;
  r.free_params = free_params;
  r.sample_size = sample_size;
  r.aic = 2.0 * free_params - 2.0 * log_likelihood;
  r.aicc = r.aic + 2.0 * (free_params + 1.0) * (free_params + 2.0) /
                       (sample_size - free_params - 2.0);
  r.bic = -2.0 * log_likelihood + free_params * std::log(static_cast<double>(sample_size));
  return r;
}

int count_free_params(const UnivariateMixture& mix) { return 3 * mix.size() - 1; }

double future_obs_density(double x, double sample_mean, double sample_std, int T) {
  if (T < 2) throw std::domain_error("future_obs_density: T must be >= 2");
  if (!(sample_std > 0.0)) throw std::domain_error("future_obs_density: sample_std must be positive");
  const double df = T - 1.0;
  const double scale = sample_std * std::sqrt(1.0 + 1.0 / T);
  const double z = (x - sample_mean) / scale;
  const double logc = std::lgamma(0.5 * T) - std::lgamma(0.5 * df) -
                      0.5 * std::log(M_PI * df);
  return std::exp(logc - 0.5 * T * std::log1p(z * z / df)) / scale;
}

}  // namespace retmix
