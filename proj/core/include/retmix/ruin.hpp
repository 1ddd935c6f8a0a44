#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "retmix/ecme.hpp"

namespace retmix {

/// Portfolio weights and expense ratios. Weights may be constant or given per
/// period (decumulation plans index them by the period being entered).
struct PortfolioSpec {
  std::vector<double> weights;                        // sums to 1 within 1e-12
  std::vector<double> expenses;                       // each in [0, 1)
  std::vector<std::vector<double>> per_period_weights;  // optional; overrides weights

  const std::vector<double>& weights_at(int period) const {
    if (!per_period_weights.empty())
      return per_period_weights[std::min<size_t>(period, per_period_weights.size() - 1)];
    return weights;
  }
  void validate(int n_assets) const;
};

struct Horizon {
  bool fixed = true;
  int length = 0;               // fixed horizon T_F
  std::vector<double> pmf;      // P(T_R = t) for t = 0..T when not fixed

  int max_length() const { return fixed ? length : static_cast<int>(pmf.size()) - 1; }
};

struct DecumulationPlan {
  double withdrawal_rate = 0.0;  // W_R >= 0
  Horizon horizon;
  PortfolioSpec portfolio;
};

struct RuinReport {
  double success_prob = 0.0;
  double success_se = 0.0;
  std::vector<double> ruin_prob;       // P[Ruin(t)], index t-1, t = 1..T
  std::vector<double> ruin_se;
  std::vector<double> longevity_pmf;   // P(P_L = l), l = 0..T-1
  double longevity_tail = 0.0;         // P(P_L >= T)
  double longevity_mean = 0.0;         // truncated at T: the tail counts as T
  double longevity_median = 0.0;       // T means ">= T"; half-integer when the
                                       // cumulative hits exactly one half
  std::vector<int> longevity_modes;    // all argmax l (T stands for the tail)
  int paths = 0;
};

/// Inverse-CDF component pick; the boundary is inclusive (u <= cumulative).
int sample_component(const std::vector<double>& probs, double u);

/// Multivariate normal draw by rotating independent normals through the
/// eigenvector basis. Throws std::domain_error when cov is not positive
/// definite.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           std::mt19937_64& rng);

/// n draws from the joint mixture: component pick, then a conditional draw.
Eigen::MatrixXd sample_joint(const JointMixture& model, int n, std::mt19937_64& rng);

/// Appends stress events as extra observations.
ReturnsPanel seed_black_swans(const ReturnsPanel& panel,
                              const std::vector<Eigen::VectorXd>& events);

/// Distribution of the expense-adjusted portfolio compounding return: a
/// G-component univariate mixture with weights p_c, means w' mu_c and
/// variances w' Sigma_c w, where w_i = alpha_i (1 - E_i).
UnivariateMixture portfolio_return_mixture(const JointMixture& model,
                                           const PortfolioSpec& spec, int period = 0);

/// One period of the ruin-factor recursion: nullopt when ruined (r_hat <= rf),
/// else rf / (r_hat - rf).
std::optional<double> ruin_factor_step(double rf, double r_hat);

/// Monte Carlo decumulation outcomes over n_paths independent paths, each on
/// its own RNG stream. Ruin at t means the path survived withdrawals
/// 1..t-1 and r_hat(t) <= RF(t-1).
RuinReport simulate_ruin(const DecumulationPlan& plan, const JointMixture& model,
                         int n_paths, std::uint64_t seed, int threads = 0);

/// Ruin probability under a random horizon from per-horizon success
/// probabilities: sum_t (1 - success(t)) P(T_R = t); mass at t = 0
/// contributes nothing. Missing support entries throw.
double random_horizon_ruin(const std::vector<double>& success_by_T,
                           const std::vector<double>& horizon_pmf);

enum class AllocationObjective { MaxSuccess, MinVariance };

struct AllocationConfig {
  int n_paths = 20000;       // MaxSuccess simulation budget per evaluation
  int lattice = 20;          // initial simplex lattice resolution
  int refinements = 6;       // lattice shrink rounds
  double tolerance = 1e-10;  // MinVariance projected-gradient stop
};

struct AllocationResult {
  std::vector<double> weights;
  double objective = 0.0;  // success probability or analytic portfolio std
};

/// Optimal constant weights on the simplex. MinVariance minimizes the
/// analytic std of the portfolio return mixture (deterministic projected
/// gradient with lattice multistart); MaxSuccess maximizes the simulated
/// success probability under common random numbers across candidates.
/// Objective ties prefer the lexicographically smallest weight vector.
AllocationResult optimize_static_allocation(const DecumulationPlan& plan,
                                            const JointMixture& model,
                                            AllocationObjective objective,
                                            const AllocationConfig& cfg, std::uint64_t seed,
                                            int threads = 0);

}  // namespace retmix
