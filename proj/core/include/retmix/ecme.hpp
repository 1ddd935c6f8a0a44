#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "retmix/grid.hpp"
#include "retmix/lp.hpp"
#include "retmix/stats.hpp"

namespace retmix {

/// One component of the fixed-marginal multivariate mixture. Its mean vector
/// and covariance diagonal are pinned to the marginal parameters of the
/// univariate components named by cell_id; only the off-diagonals move.
struct JointComponent {
  double prob = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int cell_id = 0;
};

struct JointMixture {
  std::vector<JointComponent> components;
  std::vector<UnivariateMixture> marginals;
  CellGrid grid;

  int num_components() const { return static_cast<int>(components.size()); }
  int num_assets() const { return grid.num_assets(); }
};

/// Builds the zero-covariance joint mixture implied by a structure solution:
/// one component per kept cell, probability from the LP, means/variances from
/// the marginals.
JointMixture make_joint_mixture(const std::vector<UnivariateMixture>& marginals,
                                const StructureSolution& structure);

/// Validates the JointMixture invariants (probabilities sum to 1, pinned
/// means/diagonals, positive definiteness, marginal constraints). Throws on
/// violation.
void validate_joint(const JointMixture& model, double prob_tol = 1e-9);

struct LMConfig {
  int steps_per_thread = 1000;   // candidate steps per task
  int thread_multiplier = 2;     // tasks = thread_multiplier * threads (when task_count == 0)
  int task_count = 0;            // explicit task count; 0 derives from threads
  int beat_pool = 80;            // improving candidates eligible for selection
  double ridge_mult_min = 2.0;
  double ridge_mult_max = 10.0;
  double pd_min_eigenvalue = 1e-13;
  double det_min = 1e-13;
  double convergence_scale = 1e6;  // inner/outer tolerance = scale * epsilon * |LL|
  double epsilon = 1e-15;
  long long max_outer_iters = 1000;
};

struct Step2RoundTrace {
  double ll = 0.0;
  int negative_eigenvalues = 0;
  int positive_eigenvalues = 0;
  double eigenvector_condition = 0.0;  // Bauer-Fike kappa(U) of the Hessian
  int repairs = 0;
};

struct EcmeIterationTrace {
  int step1_iterations = 0;
  std::vector<int> dropped_cells;
  double step1_ll = 0.0;
  std::vector<Step2RoundTrace> step2_rounds;
  double step2_ll = 0.0;
};

struct EcmeTrace {
  double initial_ll = 0.0;
  std::vector<EcmeIterationTrace> iterations;
  double final_ll = 0.0;
};

/// Multivariate normal density. Throws std::domain_error when cov is not
/// positive definite.
double mvn_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
               const Eigen::MatrixXd& cov);

/// Sum over time of ln sum_c p_c f^c(x_t); -infinity when the mixture density
/// vanishes at some observation.
double joint_log_likelihood(const ReturnsPanel& panel, const JointMixture& model);

struct Step1Result {
  JointMixture model;
  MarginalConstraints constraints;  // re-reduced when components were dropped
  int iterations = 0;
  std::vector<int> dropped_cells;
  double log_likelihood = 0.0;
};

/// Newton iterations on the Lagrangian of the component probabilities under
/// the marginal equality constraints. Components whose probability reaches
/// <= 0 are dropped permanently and the constraint system is re-reduced to
/// full row rank. The constraint rows are rescaled by powers of 10 (capped at
/// 1e10) whenever the bordered Hessian is rank deficient.
Step1Result step1_probabilities(const ReturnsPanel& panel, const JointMixture& model,
                                const MarginalConstraints& constraints,
                                double epsilon = 1e-15);

/// d ln f^c / d sigma_jk for one component: 0.5 (x-mu)' Sinv A^{jk} Sinv
/// (x-mu) - |S^{(jk)}| / |S|, where S^{(jk)} has a 1 at (j,k) and zeros in the
/// rest of row j and column k. Throws std::domain_error when j == k.
double q_term(const Eigen::VectorXd& x, const JointComponent& comp, int j, int k);

/// Gradient of the joint log-likelihood with respect to the off-diagonal
/// covariances, ordered component-major with (j,k), j < k, lexicographic.
Eigen::VectorXd step2_gradient(const ReturnsPanel& panel, const JointMixture& model);

/// Exact Hessian for the same parameter ordering.
Eigen::MatrixXd step2_hessian(const ReturnsPanel& panel, const JointMixture& model);

struct PDConfig {
  double pd_min_eigenvalue = 1e-13;
  double det_min = 1e-13;
};

/// True iff the minimum eigenvalue exceeds pd_min_eigenvalue and the
/// determinant exceeds det_min. Throws std::invalid_argument when the input
/// is not symmetric.
bool is_positive_definite(const Eigen::MatrixXd& cov, const PDConfig& cfg = {});

/// Divides the off-diagonals by growing factors (1 + i * multiplier), the
/// multiplier scaling up tenfold every 100 attempts, until the matrix passes
/// is_positive_definite. The diagonal is returned bit-identical; positive
/// definite inputs come back unchanged.
Eigen::MatrixXd ridge_repair(const Eigen::MatrixXd& cov, double multiplier,
                             const PDConfig& cfg = {});

struct LMCandidate {
  bool valid = false;
  Eigen::VectorXd covariances;  // post-repair flattened off-diagonals
  double log_likelihood = 0.0;
  int repairs = 0;
};

/// One damped-Newton candidate with explicit damping s and line-search
/// lambda: solves (H + s I) delta = -lambda g, applies delta to the
/// covariances, and ridge-repairs any component that leaves the positive
/// definite region. A rank-deficient solve invalidates the candidate.
LMCandidate apply_damped_step(const ReturnsPanel& panel, const JointMixture& model,
                              const Eigen::VectorXd& gradient,
                              const Eigen::MatrixXd& hessian, double s, double lambda,
                              double ridge_multiplier, const PDConfig& cfg = {});

/// Randomized version: |s| is drawn uniformly in (0, 10^e] with e uniform on
/// 1..(digits of the largest |H| entry + 2) and a random sign, and lambda is
/// uniform in (0, 1).
LMCandidate lm_candidate_step(const ReturnsPanel& panel, const JointMixture& model,
                              const Eigen::VectorXd& gradient,
                              const Eigen::MatrixXd& hessian, const LMConfig& cfg,
                              std::mt19937_64& rng);

using EcmeObserver = std::function<void(const JointMixture&, const char* step, double ll)>;

struct EcmeResult {
  JointMixture model;
  EcmeTrace trace;
};

/// Alternates step1_probabilities with rounds of randomized damped-Newton
/// covariance updates. Each round launches `tasks` independent candidate
/// streams, keeps the top beat_pool improvers, and accepts one at random
/// weighted by log-likelihood gain; the accepted sequence never decreases.
/// Outer convergence: a covariance round fails to improve the step-1 value.
EcmeResult ecme_fit(const ReturnsPanel& panel, const JointMixture& initial,
                    const MarginalConstraints& constraints, const LMConfig& cfg,
                    std::uint64_t seed, int threads = 0,
                    const EcmeObserver& observer = nullptr);

/// Overall covariance and correlation matrices of the mixture via the law of
/// total expectation.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> mixture_covariance(const JointMixture& model);

/// Free parameters of the fixed-marginal joint mixture: two per marginal
/// component (mean, std) + G N(N-1)/2 covariances + (G - rank of the marginal
/// constraint system) free probabilities.
int count_free_params(const JointMixture& model);

}  // namespace retmix
