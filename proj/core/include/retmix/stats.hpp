#pragma once

#include <vector>

namespace retmix {

/// One normal component of a univariate mixture.
struct MixtureComponent {
  double weight = 0.0;  // in (0, 1]
  double mean = 0.0;
  double std = 0.0;  // > 0
};

/// A finite normal mixture with canonical component order: ascending mean,
/// ties broken by ascending std. Weights sum to 1 within 1e-12.
class UnivariateMixture {
 public:
  UnivariateMixture() = default;
  explicit UnivariateMixture(std::vector<MixtureComponent> components);

  int size() const { return static_cast<int>(components_.size()); }
  const std::vector<MixtureComponent>& components() const { return components_; }
  const MixtureComponent& operator[](int i) const { return components_[i]; }

 private:
  std::vector<MixtureComponent> components_;
};

struct MomentSummary {
  double mean = 0.0;
  double std = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
};

struct ICReport {
  double log_likelihood = 0.0;
  int free_params = 0;
  int sample_size = 0;
  double aic = 0.0;
  double aicc = 0.0;
  double bic = 0.0;
};

/// Normal density. Throws std::domain_error when std <= 0.
double normal_pdf(double x, double mean, double std);

/// Normal CDF via the complementary error function; absolute error well
/// below 1e-12 in double precision. Throws std::domain_error when std <= 0.
double normal_cdf(double x, double mean, double std);

double mixture_pdf(double x, const UnivariateMixture& mix);
double mixture_cdf(double x, const UnivariateMixture& mix);

/// Mean, std, skewness and kurtosis from the component parameters using the
/// normal raw-moment identities. A 1-component mixture has skewness 0 and
/// kurtosis 3.
MomentSummary mixture_moments(const UnivariateMixture& mix);

/// AIC = 2k - 2 LL, AICC = AIC + 2(k+1)(k+2)/(T-k-2), BIC = -2 LL + k ln T.
/// Throws std::domain_error when T <= k + 2 (AICC denominator nonpositive).
ICReport information_criteria(double log_likelihood, int free_params, int sample_size);

/// Free parameters of a univariate normal mixture: 3g - 1.
int count_free_params(const UnivariateMixture& mix);

/// Density of an unobserved next draw given the sample mean, the unbiased
/// sample std and the sample size: a Student-t with T-1 degrees of freedom,
/// centered at the mean and scaled by S sqrt(1 + 1/T).
/// Throws std::domain_error when T < 2 or sample_std <= 0.
double future_obs_density(double x, double sample_mean, double sample_std, int T);

}  // namespace retmix
