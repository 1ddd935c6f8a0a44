#include "retmix/em.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "retmix/parallel.hpp"
#include "retmix/rng.hpp"

namespace retmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kStartRetryBudget = 10000;

double rel_tol(double epsilon, double ref) {
  double mag = std::abs(ref);
  return epsilon * (mag > 0.0 ? mag : 1.0);
}

// Working copy of a mixture as parallel arrays; canonical ordering is
// restored only when results are materialized.
struct Params {
  std::vector<double> w, mu, sigma;
  explicit Params(int g) : w(g), mu(g), sigma(g) {}
  explicit Params(const UnivariateMixture& m)
      : w(m.size()), mu(m.size()), sigma(m.size()) {
    for (int i = 0; i < m.size(); ++i) {
      w[i] = m[i].weight;
      mu[i] = m[i].mean;
      sigma[i] = m[i].std;
    }
  }
  int g() const { return static_cast<int>(w.size()); }
  UnivariateMixture to_mixture() const {
    std::vector<MixtureComponent> cs(w.size());
    for (size_t i = 0; i < w.size(); ++i) cs[i] = {w[i], mu[i], sigma[i]};
    return UnivariateMixture(std::move(cs));
  }
};

bool violates_ratio(const std::vector<double>& sigma, double bound) {
  double lo = sigma[0], hi = sigma[0];
  for (double s : sigma) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return hi > bound * lo;
}

}  // namespace

double log_likelihood(std::span<const double> data, const UnivariateMixture& mix) {
  if (data.empty()) throw std::invalid_argument("log_likelihood: data is empty");
  double ll = 0.0;
  for (double x : data) {
    double d = mixture_pdf(x, mix);
    if (!(d > 0.0)) return kNegInf;
    ll += std::log(d);
  }
  return ll;
}

std::vector<double> posterior_probs(double x, const UnivariateMixture& mix) {
  double d = mixture_pdf(x, mix);
  if (!(d > 0.0)) throw std::domain_error("posterior_probs: zero mixture density");
  std::vector<double> post(mix.size());
  for (int i = 0; i < mix.size(); ++i)
    post[i] = mix[i].weight * normal_pdf(x, mix[i].mean, mix[i].std) / d;
  return post;
}

EMFitResult analytic_mle(std::span<const double> data) {
  if (data.empty()) throw std::invalid_argument("analytic_mle: data is empty");
  double mean = 0.0;
  for (double x : data) mean += x;
  mean /= static_cast<double>(data.size());
  double ss = 0.0;
  for (double x : data) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(data.size()));
  if (!(sd > 0.0)) throw std::domain_error("analytic_mle: data has zero variance");
  EMFitResult r;
  r.mixture = UnivariateMixture({{1.0, mean, sd}});
  r.log_likelihood = log_likelihood(data, r.mixture);
  r.iterations = 0;
  r.status = EMStatus::Converged;
  return r;
}

UnivariateMixture random_start(std::span<const double> data, int g,
                               const UnivariateMixture& seed_mix, const EMConfig& cfg,
                               std::mt19937_64& rng) {
  if (g < 1) throw std::invalid_argument("random_start: g must be >= 1");
  const int T = static_cast<int>(data.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Params p(g);
  for (int attempt = 0; attempt < kStartRetryBudget; ++attempt) {
    // g means drawn from the seed mixture.
    for (int c = 0; c < g; ++c) {
      double u = unif(rng);
      int cid = seed_mix.size() - 1;
      double cum = 0.0;
      for (int i = 0; i < seed_mix.size(); ++i) {
        cum += seed_mix[i].weight;
        if (u <= cum) {
          cid = i;
          break;
        }
      }
      p.mu[c] = seed_mix[cid].mean + seed_mix[cid].std * gauss(rng);
    }
    // Nearest-mean attachment.
    std::vector<int> count(g, 0);
    std::vector<double> ssq(g, 0.0);
    for (double x : data) {
      int cid = 0;
      double best = std::abs(x - p.mu[0]);
      for (int c = 1; c < g; ++c) {
        double d = std::abs(x - p.mu[c]);
        if (d < best) {
          best = d;
          cid = c;
        }
      }
      count[cid] += 1;
      ssq[cid] += best * best;
    }
    bool ok = true;
    for (int c = 0; c < g; ++c) {
      if (count[c] == 0) {
        ok = false;
        break;
      }
      p.w[c] = static_cast<double>(count[c]) / T;
      p.sigma[c] = std::sqrt(ssq[c] / count[c]);
      if (!(p.sigma[c] > 0.0)) ok = false;
    }
    if (ok && !violates_ratio(p.sigma, cfg.std_ratio_bound)) return p.to_mixture();
  }
  throw std::runtime_error("random_start: no feasible start within the retry budget");
}

EMFitResult em_fit(std::span<const double> data, const UnivariateMixture& start,
                   const EMConfig& cfg) {
  const int T = static_cast<int>(data.size());
  if (T == 0) throw std::invalid_argument("em_fit: data is empty");
  Params p(start);
  const int g = p.g();

  std::vector<double> ll_path;
  auto fail = [&](EMStatus status, long long iters) {
    EMFitResult r;
    r.mixture = start;
    r.log_likelihood = kNegInf;
    r.iterations = iters;
    r.status = status;
    r.ll_path = std::move(ll_path);
    return r;
  };

  // Vectorized density grid: pdens.col(c) = w_c phi_c(x); mdens = row sums.
  Eigen::Map<const Eigen::ArrayXd> x(data.data(), T);
  const Eigen::ArrayXd x2 = x.square();
  Eigen::ArrayXXd pdens(T, g);
  Eigen::ArrayXd mdens(T), post(T);
  constexpr double kInvSqrt2Pi = 0.39894228040143268;
  auto refresh = [&]() -> double {
    for (int c = 0; c < g; ++c) {
      double a = p.w[c] * kInvSqrt2Pi / p.sigma[c];
      double b = -0.5 / (p.sigma[c] * p.sigma[c]);
      pdens.col(c) = a * (b * (x - p.mu[c]).square()).exp();
    }
    mdens = pdens.rowwise().sum();
    if (!(mdens.minCoeff() > 0.0)) return kNegInf;
    return mdens.log().sum();
  };

  double old_ll = refresh();
  if (old_ll == kNegInf) return fail(EMStatus::VarianceRatioViolated, 0);
  if (cfg.record_path) ll_path.push_back(old_ll);

  for (long long iter = 1;; ++iter) {
    Params next(g);
    double wsum = 0.0;
    for (int c = 0; c < g; ++c) {
      // E-step posterior sums; the last weight closes the simplex exactly.
      post = pdens.col(c) / mdens;
      double post_sum = post.sum();
      double wx = (post * x).sum();
      double wxx = (post * x2).sum();
      next.w[c] = (c < g - 1) ? post_sum / T : 1.0 - wsum;
      wsum += next.w[c];
      if (g > 1 && (!(next.w[c] > 0.0) || !(next.w[c] < 1.0)))
        return fail(EMStatus::DegenerateWeight, iter);
      double denom = (c < g - 1) ? post_sum : next.w[c] * T;
      next.mu[c] = wx / denom;
      double var = wxx / denom - next.mu[c] * next.mu[c];
      if (!(var > 0.0)) return fail(EMStatus::VarianceRatioViolated, iter);
      next.sigma[c] = std::sqrt(var);
    }
    if (violates_ratio(next.sigma, cfg.std_ratio_bound))
      return fail(EMStatus::VarianceRatioViolated, iter);
    if (iter > cfg.max_iters) return fail(EMStatus::MaxIters, iter);

    p = next;
    double new_ll = refresh();
    if (new_ll == kNegInf) return fail(EMStatus::VarianceRatioViolated, iter);
    if (cfg.record_path) ll_path.push_back(new_ll);
    if (new_ll - old_ll < rel_tol(cfg.epsilon, old_ll)) {
      EMFitResult r;
      r.mixture = p.to_mixture();
      r.log_likelihood = new_ll;
      r.iterations = iter;
      r.status = EMStatus::Converged;
      r.ll_path = std::move(ll_path);
      return r;
    }
    old_ll = new_ll;
  }
}

std::optional<EMFitResult> multi_start_fit(std::span<const double> data, int g,
                                           const EMConfig& cfg, std::uint64_t seed,
                                           const UnivariateMixture* seed_mix, int threads) {
  if (g < 1) throw std::invalid_argument("multi_start_fit: g must be >= 1");
  if (g == 1) return analytic_mle(data);

  UnivariateMixture base = seed_mix ? *seed_mix : analytic_mle(data).mixture;
  const int n_starts = cfg.starts_per_component * (g - 1);
  std::vector<std::optional<EMFitResult>> results(n_starts);
  parallel_for(n_starts, threads, [&](int s) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(s));
    UnivariateMixture start;
    try {
      start = random_start(data, g, base, cfg, rng);
    } catch (const std::runtime_error&) {
      return;  // no feasible start on this stream
    }
    EMFitResult fit = em_fit(data, start, cfg);
    if (fit.status == EMStatus::Converged) results[s] = std::move(fit);
  });

  std::optional<EMFitResult> best;
  for (auto& r : results)
    if (r && (!best || r->log_likelihood > best->log_likelihood)) best = std::move(r);
  return best;
}

std::vector<double> sample_mixture(const UnivariateMixture& mix, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double u = unif(rng);
    int cid = mix.size() - 1;
    double cum = 0.0;
    for (int c = 0; c < mix.size(); ++c) {
      cum += mix[c].weight;
      if (u <= cum) {
        cid = c;
        break;
      }
    }
    out[i] = mix[cid].mean + mix[cid].std * gauss(rng);
  }
  return out;
}

}  // namespace retmix
