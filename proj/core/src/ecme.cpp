#include "retmix/ecme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "retmix/parallel.hpp"
#include "retmix/rng.hpp"

namespace retmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925286766559;

double rel_tol(double scale, double epsilon, double ref) {
  double mag = std::abs(ref);
  return scale * epsilon * (mag > 0.0 ? mag : 1.0);
}

int n_cov_terms(int n_assets) { return n_assets * (n_assets - 1) / 2; }

// Cached per-component inverse and sqrt(det(Sigma^-1)).
struct CompCache {
  Eigen::MatrixXd inv;
  double sq_det_inv = 0.0;
};

std::vector<CompCache> build_cache(const JointMixture& model) {
  std::vector<CompCache> cache(model.num_components());
  for (int c = 0; c < model.num_components(); ++c) {
    cache[c].inv = model.components[c].cov.inverse();
    double d = cache[c].inv.determinant();
    if (!(d > 0.0))
      throw std::domain_error("joint mixture component covariance is not positive definite");
    cache[c].sq_det_inv = std::sqrt(d);
  }
  return cache;
}

// Density grid: fvals[t][c] = f^c(x_t) (no probability weight), denom[t] =
// sum_c p_c f^c(x_t). Returns the log-likelihood.
double density_grid(const ReturnsPanel& panel, const JointMixture& model,
                    const std::vector<CompCache>& cache, Eigen::MatrixXd& fvals,
                    Eigen::VectorXd& denom) {
  const int T = static_cast<int>(panel.rows());
  const int N = model.num_assets();
  const int G = model.num_components();
  const double picst = std::pow(kTwoPi, 0.5 * N);
  fvals.resize(T, G);
  denom.resize(T);
  double ll = 0.0;
  for (int t = 0; t < T; ++t) {
    double m = 0.0;
    Eigen::VectorXd x = panel.row(t).transpose();
    for (int c = 0; c < G; ++c) {
      Eigen::VectorXd d = x - model.components[c].mean;
      double q = d.dot(cache[c].inv * d);
      double f = cache[c].sq_det_inv / picst * std::exp(-0.5 * q);
      fvals(t, c) = f;
      m += model.components[c].prob * f;
    }
    denom(t) = m;
    ll += (m > 0.0) ? std::log(m) : kNegInf;
  }
  return ll;
}

// No component may have zero likelihood at every time point; such a component
// vanishes from the step-1 objective and breaks the bordered Hessian.
void check_support(const Eigen::MatrixXd& fvals) {
  for (int c = 0; c < fvals.cols(); ++c)
    if (!(fvals.col(c).sum() > 0.0))
      throw std::runtime_error("joint component " + std::to_string(c) +
                               " has zero likelihood at every time point");
}

// Sigma^{(jk)}: 1 at (j,k), zeros elsewhere in row j and column k.
Eigen::MatrixXd unit_row_col(const Eigen::MatrixXd& m, int j, int k) {
  Eigen::MatrixXd out = m;
  out.row(j).setZero();
  out.col(k).setZero();
  out(j, k) = 1.0;
  return out;
}

// Flattened covariance layout helpers: component-major, (j,k) with j < k in
// lexicographic order.
Eigen::VectorXd get_covs(const JointMixture& model) {
  const int N = model.num_assets();
  Eigen::VectorXd out(model.num_components() * n_cov_terms(N));
  int idx = 0;
  for (const auto& comp : model.components)
    for (int j = 0; j < N; ++j)
      for (int k = j + 1; k < N; ++k) out(idx++) = comp.cov(j, k);
  return out;
}

void set_covs(JointMixture& model, const Eigen::VectorXd& covs) {
  const int N = model.num_assets();
  int idx = 0;
  for (auto& comp : model.components)
    for (int j = 0; j < N; ++j)
      for (int k = j + 1; k < N; ++k) {
        comp.cov(j, k) = covs(idx);
        comp.cov(k, j) = covs(idx);
        ++idx;
      }
}

}  // namespace

JointMixture make_joint_mixture(const std::vector<UnivariateMixture>& marginals,
                                const StructureSolution& structure) {
  std::vector<int> comps(marginals.size());
  for (size_t a = 0; a < marginals.size(); ++a) comps[a] = marginals[a].size();
  JointMixture model;
  model.grid = CellGrid(comps);
  model.marginals = marginals;
  const int N = static_cast<int>(marginals.size());
  for (int cell : structure.kept_cells) {
    JointComponent jc;
    jc.cell_id = cell;
    jc.prob = structure.probs[cell];
    jc.mean.resize(N);
    jc.cov = Eigen::MatrixXd::Zero(N, N);
    std::vector<int> tuple = model.grid.tuple_of(cell);
    for (int a = 0; a < N; ++a) {
      const MixtureComponent& mc = marginals[a][tuple[a]];
      jc.mean(a) = mc.mean;
      jc.cov(a, a) = mc.std * mc.std;
    }
    model.components.push_back(std::move(jc));
  }
  return model;
}

void validate_joint(const JointMixture& model, double prob_tol) {
  const int N = model.num_assets();
  double psum = 0.0;
  for (const auto& comp : model.components) {
    psum += comp.prob;
    if (!(comp.prob > 0.0)) throw std::invalid_argument("joint component probability <= 0");
    std::vector<int> tuple = model.grid.tuple_of(comp.cell_id);
    for (int a = 0; a < N; ++a) {
      const MixtureComponent& mc = model.marginals[a][tuple[a]];
      if (comp.mean(a) != mc.mean || comp.cov(a, a) != mc.std * mc.std)
        throw std::invalid_argument("joint component mean/variance differs from its marginal");
    }
    if (!is_positive_definite(comp.cov))
      throw std::invalid_argument("joint component covariance is not positive definite");
  }
  if (std::abs(psum - 1.0) > prob_tol)
    throw std::invalid_argument("joint component probabilities do not sum to 1");
  for (int a = 0; a < N; ++a)
    for (int i = 0; i < model.marginals[a].size(); ++i) {
      double s = 0.0;
      for (const auto& comp : model.components)
        if (model.grid.indicator(comp.cell_id, a, i)) s += comp.prob;
      if (std::abs(s - model.marginals[a][i].weight) > prob_tol)
        throw std::invalid_argument("joint probabilities violate a marginal constraint");
    }
}

double mvn_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
               const Eigen::MatrixXd& cov) {
  const int N = static_cast<int>(x.size());
  if (mean.size() != N || cov.rows() != N || cov.cols() != N)
    throw std::invalid_argument("mvn_pdf: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("mvn_pdf: covariance is not positive definite");
  Eigen::VectorXd d = x - mean;
  double q = d.dot(llt.solve(d));
  double logdet = 0.0;
  const Eigen::MatrixXd& packed = llt.matrixLLT();
  for (int i = 0; i < N; ++i) logdet += 2.0 * std::log(packed(i, i));
  return std::exp(-0.5 * (N * std::log(kTwoPi) + logdet + q));
}

double joint_log_likelihood(const ReturnsPanel& panel, const JointMixture& model) {
  auto cache = build_cache(model);
  Eigen::MatrixXd fvals;
  Eigen::VectorXd denom;
  return density_grid(panel, model, cache, fvals, denom);
}

Step1Result step1_probabilities(const ReturnsPanel& panel, const JointMixture& model,
                                const MarginalConstraints& constraints, double epsilon) {
  Step1Result out;
  out.model = model;
  out.constraints = constraints;
  const int T = static_cast<int>(panel.rows());

  auto cache = build_cache(out.model);
  Eigen::MatrixXd fvals;
  Eigen::VectorXd denom;
  double old_ll = density_grid(panel, out.model, cache, fvals, denom);
  check_support(fvals);

  Eigen::MatrixXd lhs = out.constraints.lhs;
  Eigen::VectorXd rhs = out.constraints.rhs;
  int G = out.model.num_components();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(lhs.rows());
  Eigen::VectorXd probs(G);
  for (int c = 0; c < G; ++c) probs(c) = out.model.components[c].prob;

  for (int iter = 1;; ++iter) {
    out.iterations = iter;
    const int n_rows = static_cast<int>(lhs.rows());
    const int ld = G + n_rows;

    // Bordered system with constraint rescaling until numerically full rank.
    double mult = 1.0;
    Eigen::MatrixXd H(ld, ld);
    for (;;) {
      Eigen::MatrixXd scaled = mult * lhs;
      H.setZero();
      for (int r = 0; r < G; ++r)
        for (int c = r; c < G; ++c) {
          double s = 0.0;
          for (int t = 0; t < T; ++t) s += fvals(t, r) * fvals(t, c) / (denom(t) * denom(t));
          H(r, c) = -s;
          H(c, r) = -s;
        }
      H.block(0, G, G, n_rows) = -scaled.transpose();
      H.block(G, 0, n_rows, G) = -scaled;
      if (Eigen::FullPivLU<Eigen::MatrixXd>(H).rank() == ld) break;
      mult *= 10.0;
      if (mult > 1e10)
        throw std::runtime_error("step1_probabilities: bordered Hessian stays singular");
    }

    Eigen::VectorXd grad(ld);
    for (int c = 0; c < G; ++c) {
      double s = 0.0;
      for (int t = 0; t < T; ++t) s += fvals(t, c) / denom(t);
      grad(c) = s - (mult * lhs).col(c).dot(lambda);
    }
    grad.tail(n_rows) = -(mult * lhs * probs - mult * rhs);

    Eigen::VectorXd delta = H.colPivHouseholderQr().solve(-grad);
    probs += delta.head(G);
    lambda += delta.tail(n_rows);

    // Permanently drop any component that needs a nonpositive probability.
    std::vector<int> keep;
    for (int c = 0; c < G; ++c)
      if (probs(c) > 0.0) keep.push_back(c);
    bool dropped = static_cast<int>(keep.size()) < G;
    if (dropped) {
      std::vector<JointComponent> comps;
      Eigen::VectorXd new_probs(keep.size());
      std::vector<int> kept_cells;
      for (size_t i = 0; i < keep.size(); ++i) {
        int c = keep[i];
        new_probs(i) = probs(c);
        comps.push_back(out.model.components[c]);
        kept_cells.push_back(out.model.components[c].cell_id);
      }
      for (int c = 0; c < G; ++c)
        if (!(probs(c) > 0.0)) out.dropped_cells.push_back(out.model.components[c].cell_id);
      out.model.components = std::move(comps);
      probs = new_probs;
      G = out.model.num_components();
      if (G == 0) throw std::runtime_error("step1_probabilities: all components dropped");
      out.constraints = reduce_constraints(out.model.grid, out.model.marginals, kept_cells);
      lhs = out.constraints.lhs;
      rhs = out.constraints.rhs;
      lambda = Eigen::VectorXd::Zero(lhs.rows());
      cache = build_cache(out.model);
    }

    for (int c = 0; c < G; ++c) out.model.components[c].prob = probs(c);
    double ll = density_grid(panel, out.model, cache, fvals, denom);

    if (!dropped && ll - old_ll < rel_tol(1.0, epsilon, old_ll)) {
      out.log_likelihood = ll;
      return out;
    }
    if (!dropped) old_ll = ll;
    if (iter > 10000)
      throw std::runtime_error("step1_probabilities: Newton failed to converge");
  }
}

double q_term(const Eigen::VectorXd& x, const JointComponent& comp, int j, int k) {
  if (j == k) throw std::domain_error("q_term: requires j != k");
  const int N = static_cast<int>(comp.cov.rows());
  Eigen::MatrixXd inv = comp.cov.inverse();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  A(j, k) = 1.0;
  A(k, j) = 1.0;
  Eigen::VectorXd d = x - comp.mean;
  double quad = 0.5 * d.dot(inv * A * inv * d);
  double ratio = unit_row_col(comp.cov, j, k).determinant() / comp.cov.determinant();
  return quad - ratio;
}

Eigen::VectorXd step2_gradient(const ReturnsPanel& panel, const JointMixture& model) {
  const int T = static_cast<int>(panel.rows());
  const int N = model.num_assets();
  const int G = model.num_components();
  const int nc = n_cov_terms(N);
  auto cache = build_cache(model);
  Eigen::MatrixXd fvals;
  Eigen::VectorXd denom;
  density_grid(panel, model, cache, fvals, denom);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(G * nc);
  for (int c = 0; c < G; ++c) {
    const auto& comp = model.components[c];
    const double det = comp.cov.determinant();
    int pair = 0;
    for (int j = 0; j < N; ++j)
      for (int k = j + 1; k < N; ++k, ++pair) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
        A(j, k) = A(k, j) = 1.0;
        Eigen::MatrixXd M = cache[c].inv * A * cache[c].inv;
        double ratio = unit_row_col(comp.cov, j, k).determinant() / det;
        double s = 0.0;
        for (int t = 0; t < T; ++t) {
          Eigen::VectorXd d = panel.row(t).transpose() - comp.mean;
          double q = 0.5 * d.dot(M * d) - ratio;
          s += comp.prob * fvals(t, c) * q / denom(t);
        }
        grad(c * nc + pair) = s;
      }
  }
  return grad;
}

Eigen::MatrixXd step2_hessian(const ReturnsPanel& panel, const JointMixture& model) {
  const int T = static_cast<int>(panel.rows());
  const int N = model.num_assets();
  const int G = model.num_components();
  const int nc = n_cov_terms(N);
  const int dim = G * nc;
  auto cache = build_cache(model);
  Eigen::MatrixXd fvals;
  Eigen::VectorXd denom;
  density_grid(panel, model, cache, fvals, denom);

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(nc);
  for (int j = 0; j < N; ++j)
    for (int k = j + 1; k < N; ++k) pairs.emplace_back(j, k);

  // Q values per (t, flattened covariance index).
  Eigen::MatrixXd Q(T, dim);
  std::vector<double> det(G), det_jk(dim);
  for (int c = 0; c < G; ++c) {
    const auto& comp = model.components[c];
    det[c] = comp.cov.determinant();
    for (int p = 0; p < nc; ++p) {
      auto [j, k] = pairs[p];
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
      A(j, k) = A(k, j) = 1.0;
      Eigen::MatrixXd M = cache[c].inv * A * cache[c].inv;
      det_jk[c * nc + p] = unit_row_col(comp.cov, j, k).determinant();
      double ratio = det_jk[c * nc + p] / det[c];
      for (int t = 0; t < T; ++t) {
        Eigen::VectorXd d = panel.row(t).transpose() - comp.mean;
        Q(t, c * nc + p) = 0.5 * d.dot(M * d) - ratio;
      }
    }
  }

  Eigen::MatrixXd H(dim, dim);
  for (int ci = 0; ci < G; ++ci) {
    for (int pi = 0; pi < nc; ++pi) {
      const int row = ci * nc + pi;
      auto [j, k] = pairs[pi];
      const auto& comp = model.components[ci];
      Eigen::MatrixXd S_jk = unit_row_col(comp.cov, j, k);
      Eigen::MatrixXd Ajk = Eigen::MatrixXd::Zero(N, N);
      Ajk(j, k) = Ajk(k, j) = 1.0;
      for (int cp = 0; cp < G; ++cp) {
        for (int pp = 0; pp < nc; ++pp) {
          const int col = cp * nc + pp;
          if (row > col) continue;  // fill the upper triangle, mirror below
          double h = 0.0;
          if (ci != cp) {
            for (int t = 0; t < T; ++t) {
              double a = comp.prob * fvals(t, ci) * Q(t, row);
              double b = model.components[cp].prob * fvals(t, cp) * Q(t, col);
              h -= a * b / (denom(t) * denom(t));
            }
          } else {
            auto [r, s] = pairs[pp];
            Eigen::MatrixXd Ars = Eigen::MatrixXd::Zero(N, N);
            Ars(r, s) = Ars(s, r) = 1.0;
            Eigen::MatrixXd q4 = cache[ci].inv * Ajk * cache[ci].inv * Ars * cache[ci].inv +
                                 cache[ci].inv * Ars * cache[ci].inv * Ajk * cache[ci].inv;
            const double q1 = 2.0 * det_jk[row] * det_jk[col] / (det[ci] * det[ci]);
            // d|S^{(jk)}|/d sigma_rs: each surviving occurrence of sigma_rs in
            // S^{(jk)} contributes one unit-row-column determinant. With the
            // upper-triangle ordering only these three layouts occur.
            double dd;
            if (j == r || k == s)
              dd = unit_row_col(S_jk, s, r).determinant() / det[ci];
            else if (k == r)
              dd = unit_row_col(S_jk, r, s).determinant() / det[ci];
            else
              dd = (unit_row_col(S_jk, s, r).determinant() +
                    unit_row_col(S_jk, r, s).determinant()) /
                   det[ci];
            for (int t = 0; t < T; ++t) {
              Eigen::VectorXd d = panel.row(t).transpose() - comp.mean;
              double dQ = q1 - dd - 0.5 * d.dot(q4 * d);
              double f = comp.prob * fvals(t, ci);
              h += f *
                   (denom(t) * dQ + (denom(t) - f) * Q(t, row) * Q(t, col)) /
                   (denom(t) * denom(t));
            }
          }
          H(row, col) = h;
          H(col, row) = h;
        }
      }
    }
  }
  return H;
}

bool is_positive_definite(const Eigen::MatrixXd& cov, const PDConfig& cfg) {
  if (cov.rows() != cov.cols() || !cov.isApprox(cov.transpose(), 1e-12))
    throw std::invalid_argument("is_positive_definite: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  double det = 1.0;
  for (int i = 0; i < cov.rows(); ++i) {
    double ev = es.eigenvalues()(i);
    if (ev <= cfg.pd_min_eigenvalue) return false;
    det *= ev;
  }
  return det > cfg.det_min;
}

Eigen::MatrixXd ridge_repair(const Eigen::MatrixXd& cov, double multiplier,
                             const PDConfig& cfg) {
  for (int i = 0; i < cov.rows(); ++i)
    if (!(cov(i, i) > 0.0))
      throw std::domain_error("ridge_repair: diagonal entries must be positive");
  if (is_positive_definite(cov, cfg)) return cov;

  Eigen::MatrixXd out = cov;
  double mult = multiplier;
  for (long i = 1; i <= 1000000; ++i) {
    double scale = 1.0 + static_cast<double>(i) * mult;
    for (int r = 0; r < cov.rows(); ++r)
      for (int c = 0; c < cov.cols(); ++c)
        if (r != c) out(r, c) = cov(r, c) / scale;
    if (is_positive_definite(out, cfg)) return out;
    if (i % 100 == 0) mult *= 10.0;
  }
  throw std::runtime_error("ridge_repair: matrix could not be repaired");
}

LMCandidate apply_damped_step(const ReturnsPanel& panel, const JointMixture& model,
                              const Eigen::VectorXd& gradient,
                              const Eigen::MatrixXd& hessian, double s, double lambda,
                              double ridge_multiplier, const PDConfig& cfg) {
  LMCandidate cand;
  const int dim = static_cast<int>(gradient.size());
  Eigen::MatrixXd damped = hessian + s * Eigen::MatrixXd::Identity(dim, dim);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(damped);
  if (qr.rank() < dim) return cand;  // singular solve: discard
  Eigen::VectorXd delta = qr.solve(-lambda * gradient);

  JointMixture next = model;
  Eigen::VectorXd covs = get_covs(model) + delta;
  set_covs(next, covs);
  for (auto& comp : next.components) {
    if (!is_positive_definite(comp.cov, cfg)) {
      comp.cov = ridge_repair(comp.cov, ridge_multiplier, cfg);
      cand.repairs += 1;
    }
  }
  cand.valid = true;
  cand.covariances = get_covs(next);
  cand.log_likelihood = joint_log_likelihood(panel, next);
  return cand;
}

LMCandidate lm_candidate_step(const ReturnsPanel& panel, const JointMixture& model,
                              const Eigen::VectorXd& gradient,
                              const Eigen::MatrixXd& hessian, const LMConfig& cfg,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double maxmag = hessian.size() > 0 ? hessian.cwiseAbs().maxCoeff() : 0.0;
  int digits = (maxmag >= 1.0 ? static_cast<int>(std::log10(maxmag)) + 1 : 1) + 2;
  int expon = 1 + static_cast<int>(unif(rng) * digits);
  double s = unif(rng) * std::pow(10.0, expon);
  if (unif(rng) <= 0.5) s = -s;
  double lambda = unif(rng);
  PDConfig pd{cfg.pd_min_eigenvalue, cfg.det_min};
  std::uniform_real_distribution<double> rmult(cfg.ridge_mult_min, cfg.ridge_mult_max);
  return apply_damped_step(panel, model, gradient, hessian, s, lambda, rmult(rng), pd);
}

EcmeResult ecme_fit(const ReturnsPanel& panel, const JointMixture& initial,
                    const MarginalConstraints& constraints, const LMConfig& cfg,
                    std::uint64_t seed, int threads, const EcmeObserver& observer) {
  EcmeResult res;
  res.model = initial;
  MarginalConstraints current_constraints = constraints;
  res.trace.initial_ll = joint_log_likelihood(panel, res.model);
  PDConfig pd{cfg.pd_min_eigenvalue, cfg.det_min};

  const int n_threads = resolve_threads(threads);
  const int tasks = cfg.task_count > 0 ? cfg.task_count : cfg.thread_multiplier * n_threads;

  for (long long outer = 1; outer <= cfg.max_outer_iters; ++outer) {
    EcmeIterationTrace it;

    Step1Result s1 = step1_probabilities(panel, res.model, current_constraints, cfg.epsilon);
    res.model = std::move(s1.model);
    current_constraints = std::move(s1.constraints);
    it.step1_iterations = s1.iterations;
    it.dropped_cells = s1.dropped_cells;
    it.step1_ll = s1.log_likelihood;
    if (observer) observer(res.model, "step1", it.step1_ll);
    const double e_ll = it.step1_ll;

    // No off-diagonal parameters: step 2 has nothing to move.
    if (n_cov_terms(res.model.num_assets()) == 0) {
      it.step2_ll = e_ll;
      res.trace.iterations.push_back(std::move(it));
      res.trace.final_ll = e_ll;
      return res;
    }

    double old_ll = e_ll;
    for (int round = 1;; ++round) {
      Eigen::VectorXd grad = step2_gradient(panel, res.model);
      Eigen::MatrixXd hess = step2_hessian(panel, res.model);

      Step2RoundTrace rt;
      {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
        for (int i = 0; i < hess.rows(); ++i)
          (es.eigenvalues()(i) > 0.0 ? rt.positive_eigenvalues : rt.negative_eigenvalues)++;
        // Bauer-Fike sensitivity: condition number of the eigenvector matrix.
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(es.eigenvectors());
        double smin = svd.singularValues()(svd.singularValues().size() - 1);
        rt.eigenvector_condition = smin > 0.0 ? svd.singularValues()(0) / smin : 1e300;
      }

      // Parallel candidate streams; each task reports its best improver.
      struct TaskBest {
        double ll = kNegInf;
        Eigen::VectorXd covs;
        int repairs = 0;
      };
      std::vector<TaskBest> best(tasks);
      parallel_for(tasks, threads, [&](int h) {
        auto rng = make_stream(seed, static_cast<std::uint64_t>(outer) << 32 | round,
                               static_cast<std::uint64_t>(h));
        for (int step = 0; step < cfg.steps_per_thread; ++step) {
          LMCandidate cand = lm_candidate_step(panel, res.model, grad, hess, cfg, rng);
          if (cand.valid && cand.log_likelihood > best[h].ll) {
            best[h].ll = cand.log_likelihood;
            best[h].covs = cand.covariances;
            best[h].repairs = cand.repairs;
          }
        }
      });

      // Rank improvers (ties by task index), keep the beat pool, pick one at
      // random weighted by log-likelihood gain.
      std::vector<int> order;
      for (int h = 0; h < tasks; ++h)
        if (best[h].ll > old_ll) order.push_back(h);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (best[a].ll != best[b].ll) return best[a].ll > best[b].ll;
        return a < b;
      });
      if (static_cast<int>(order.size()) > cfg.beat_pool) order.resize(cfg.beat_pool);

      double new_ll = old_ll;
      if (!order.empty()) {
        double total_gain = 0.0;
        for (int h : order) total_gain += best[h].ll - old_ll;
        auto rng = make_stream(seed, 0x62656174ULL, static_cast<std::uint64_t>(outer),
                               static_cast<std::uint64_t>(round));
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * total_gain;
        int pick = order.back();
        double acc = 0.0;
        for (int h : order) {
          acc += best[h].ll - old_ll;
          if (u <= acc) {
            pick = h;
            break;
          }
        }
        if (best[pick].ll < old_ll)
          throw std::runtime_error("ecme_fit: covariance step regressed the log-likelihood");
        set_covs(res.model, best[pick].covs);
        for (auto& comp : res.model.components)
          if (!is_positive_definite(comp.cov, pd))
            throw std::runtime_error("ecme_fit: accepted covariances are not positive definite");
        new_ll = joint_log_likelihood(panel, res.model);
        if (std::abs(new_ll - best[pick].ll) > rel_tol(1.0, 1e-9, best[pick].ll))
          throw std::runtime_error("ecme_fit: accepted log-likelihood failed to reproduce");
        rt.repairs = best[pick].repairs;
        if (observer) observer(res.model, "step2", new_ll);
      }
      rt.ll = new_ll;
      it.step2_rounds.push_back(rt);

      if (new_ll - old_ll < rel_tol(cfg.convergence_scale, cfg.epsilon, old_ll)) {
        old_ll = new_ll;
        break;
      }
      old_ll = new_ll;
    }
    it.step2_ll = old_ll;
    res.trace.iterations.push_back(std::move(it));

    if (old_ll - e_ll < rel_tol(cfg.convergence_scale, cfg.epsilon, e_ll)) {
      res.trace.final_ll = old_ll;
      return res;
    }
  }
  res.trace.final_ll = joint_log_likelihood(panel, res.model);
  return res;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> mixture_covariance(const JointMixture& model) {
  const int N = model.num_assets();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(N);
  for (const auto& comp : model.components) mean += comp.prob * comp.mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(N, N);
  for (const auto& comp : model.components)
    cov += comp.prob * (comp.cov + comp.mean * comp.mean.transpose());
  cov -= mean * mean.transpose();
  Eigen::MatrixXd corr(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      corr(i, j) = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
  return {cov, corr};
}

int count_free_params(const JointMixture& model) {
  int marginal_params = 0;
  for (const auto& m : model.marginals) marginal_params += 2 * m.size();
  const int G = model.num_components();
  const int N = model.num_assets();
  std::vector<int> kept;
  for (const auto& comp : model.components) kept.push_back(comp.cell_id);
  MarginalConstraints mc = reduce_constraints(model.grid, model.marginals, kept);
  int rank = static_cast<int>(mc.lhs.rows());
  return marginal_params + G * n_cov_terms(N) + (G - rank);
}

}  // namespace retmix
