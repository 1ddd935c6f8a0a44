#include "retmix/ruin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "retmix/parallel.hpp"
#include "retmix/rng.hpp"

namespace retmix {

void PortfolioSpec::validate(int n_assets) const {
  auto check_weights = [n_assets](const std::vector<double>& w) {
    if (static_cast<int>(w.size()) != n_assets)
      throw std::invalid_argument("portfolio weights length mismatch");
    double sum = 0.0;
    for (double v : w) {
      if (v < 0.0) throw std::invalid_argument("portfolio weights must be nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("portfolio weights must sum to 1");
  };
  if (per_period_weights.empty())
    check_weights(weights);
  else
    for (const auto& w : per_period_weights) check_weights(w);
  if (static_cast<int>(expenses.size()) != n_assets)
    throw std::invalid_argument("portfolio expenses length mismatch");
  for (double e : expenses)
    if (e < 0.0 || e >= 1.0) throw std::invalid_argument("expenses must lie in [0, 1)");
}

int sample_component(const std::vector<double>& probs, double u) {
  double cum = 0.0;
  for (size_t i = 0; i + 1 < probs.size(); ++i) {
    cum += probs[i];
    if (u <= cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           std::mt19937_64& rng) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("sample_mvn: covariance is not positive definite");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(mean.size());
  for (int i = 0; i < mean.size(); ++i)
    z(i) = std::sqrt(es.eigenvalues()(i)) * gauss(rng);
  return mean + es.eigenvectors() * z;
}

Eigen::MatrixXd sample_joint(const JointMixture& model, int n, std::mt19937_64& rng) {
  const int N = model.num_assets();
  std::vector<double> probs(model.num_components());
  for (int c = 0; c < model.num_components(); ++c) probs[c] = model.components[c].prob;

  // Pre-factor each component once.
  std::vector<Eigen::MatrixXd> root(model.num_components());
  for (int c = 0; c < model.num_components(); ++c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.components[c].cov);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::domain_error("sample_joint: component covariance is not positive definite");
    root[c] = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal();
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd out(n, N);
  Eigen::VectorXd z(N);
  for (int i = 0; i < n; ++i) {
    int c = sample_component(probs, unif(rng));
    for (int a = 0; a < N; ++a) z(a) = gauss(rng);
    out.row(i) = (model.components[c].mean + root[c] * z).transpose();
  }
  return out;
}

ReturnsPanel seed_black_swans(const ReturnsPanel& panel,
                              const std::vector<Eigen::VectorXd>& events) {
  const int N = static_cast<int>(panel.cols());
  ReturnsPanel out(panel.rows() + static_cast<int>(events.size()), N);
  out.topRows(panel.rows()) = panel;
  for (size_t i = 0; i < events.size(); ++i) {
    if (events[i].size() != N)
      throw std::invalid_argument("seed_black_swans: event length mismatch");
    out.row(panel.rows() + static_cast<int>(i)) = events[i].transpose();
  }
  return out;
}

UnivariateMixture portfolio_return_mixture(const JointMixture& model,
                                           const PortfolioSpec& spec, int period) {
  const int N = model.num_assets();
  spec.validate(N);
  const std::vector<double>& alpha = spec.weights_at(period);
  Eigen::VectorXd w(N);
  for (int a = 0; a < N; ++a) w(a) = alpha[a] * (1.0 - spec.expenses[a]);

  std::vector<MixtureComponent> comps;
  comps.reserve(model.num_components());
  for (const auto& jc : model.components) {
    double mu = w.dot(jc.mean);
    double var = w.dot(jc.cov * w);
    if (!(var > 0.0))
      throw std::domain_error("portfolio_return_mixture: nonpositive component variance");
    comps.push_back({jc.prob, mu, std::sqrt(var)});
  }
  return UnivariateMixture(std::move(comps));
}

std::optional<double> ruin_factor_step(double rf, double r_hat) {
  if (r_hat <= rf) return std::nullopt;
  return rf / (r_hat - rf);
}

RuinReport simulate_ruin(const DecumulationPlan& plan, const JointMixture& model,
                         int n_paths, std::uint64_t seed, int threads) {
  const int T = plan.horizon.max_length();
  if (T < 1) throw std::invalid_argument("simulate_ruin: horizon must cover t >= 1");
  if (n_paths < 1) throw std::invalid_argument("simulate_ruin: need at least one path");

  // Period return mixtures; constant weights need only one.
  std::vector<UnivariateMixture> period_mix;
  const bool per_period = !plan.portfolio.per_period_weights.empty();
  period_mix.reserve(per_period ? T : 1);
  for (int t = 0; t < (per_period ? T : 1); ++t)
    period_mix.push_back(portfolio_return_mixture(model, plan.portfolio, t));

  std::vector<double> probs(model.num_components());
  for (int c = 0; c < model.num_components(); ++c) probs[c] = model.components[c].prob;

  // ruin_count[t-1] = paths ruined exactly at withdrawal t.
  std::vector<long long> ruin_count(T, 0);
  const int blocks = resolve_threads(threads);
  std::vector<std::vector<long long>> block_counts(blocks, std::vector<long long>(T, 0));
  parallel_for(blocks, threads, [&](int blk) {
    const long long lo = static_cast<long long>(blk) * n_paths / blocks;
    const long long hi = static_cast<long long>(blk + 1) * n_paths / blocks;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (long long path = lo; path < hi; ++path) {
      auto rng = make_stream(seed, 0x7275696eULL, static_cast<std::uint64_t>(path));
      double rf = plan.withdrawal_rate;
      for (int t = 1; t <= T; ++t) {
        const UnivariateMixture& mix = period_mix[per_period ? t - 1 : 0];
        int c = sample_component(probs, unif(rng));
        double r_hat = mix[c].mean + mix[c].std * gauss(rng);
        auto next = ruin_factor_step(rf, r_hat);
        if (!next) {
          block_counts[blk][t - 1] += 1;
          break;
        }
        rf = *next;
      }
    }
  });
  for (int blk = 0; blk < blocks; ++blk)
    for (int t = 0; t < T; ++t) ruin_count[t] += block_counts[blk][t];

  RuinReport rep;
  rep.paths = n_paths;
  rep.ruin_prob.resize(T);
  rep.ruin_se.resize(T);
  long long ruined_total = 0;
  for (int t = 0; t < T; ++t) {
    double p = static_cast<double>(ruin_count[t]) / n_paths;
    rep.ruin_prob[t] = p;
    rep.ruin_se[t] = std::sqrt(p * (1.0 - p) / n_paths);
    ruined_total += ruin_count[t];
  }
  rep.success_prob = 1.0 - static_cast<double>(ruined_total) / n_paths;
  rep.success_se = std::sqrt(rep.success_prob * (1.0 - rep.success_prob) / n_paths);

  // P(P_L = l) = P[Ruin(l + 1)]; the tail P(P_L >= T) is the success mass.
  rep.longevity_pmf = rep.ruin_prob;
  rep.longevity_tail = rep.success_prob;

  rep.longevity_mean = T * rep.longevity_tail;
  for (int l = 0; l < T; ++l) rep.longevity_mean += l * rep.longevity_pmf[l];

  double cum = 0.0;
  rep.longevity_median = T;
  for (int l = 0; l < T; ++l) {
    cum += rep.longevity_pmf[l];
    if (cum >= 0.5) {
      rep.longevity_median =
          (cum == 0.5) ? (2.0 * l + 1.0) / 2.0 : static_cast<double>(l);
      break;
    }
  }

  double best = rep.longevity_tail;
  for (int l = 0; l < T; ++l) best = std::max(best, rep.longevity_pmf[l]);
  for (int l = 0; l < T; ++l)
    if (rep.longevity_pmf[l] == best) rep.longevity_modes.push_back(l);
  if (rep.longevity_tail == best) rep.longevity_modes.push_back(T);
  return rep;
}

double random_horizon_ruin(const std::vector<double>& success_by_T,
                           const std::vector<double>& horizon_pmf) {
  double total = 0.0;
  for (size_t t = 1; t < horizon_pmf.size(); ++t) {
    if (horizon_pmf[t] == 0.0) continue;
    if (t > success_by_T.size())
      throw std::invalid_argument("random_horizon_ruin: missing success probability for t=" +
                                  std::to_string(t));
    total += (1.0 - success_by_T[t - 1]) * horizon_pmf[t];
  }
  return total;
}

namespace {

// Projection onto the probability simplex (Euclidean).
std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (auto& x : v) x = std::max(0.0, x - theta);
  return v;
}

bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i] - 1e-15) return true;
    if (a[i] > b[i] + 1e-15) return false;
  }
  return false;
}

}  // namespace

AllocationResult optimize_static_allocation(const DecumulationPlan& plan,
                                            const JointMixture& model,
                                            AllocationObjective objective,
                                            const AllocationConfig& cfg, std::uint64_t seed,
                                            int threads) {
  const int N = model.num_assets();
  PortfolioSpec spec = plan.portfolio;
  spec.per_period_weights.clear();  // constant weights only
  if (static_cast<int>(spec.expenses.size()) != N)
    throw std::invalid_argument("optimize_static_allocation: expenses length mismatch");

  // Portfolio std from the mixture moments directly; finite-difference probes
  // may sit slightly off the simplex, which the closed form tolerates.
  auto analytic_std = [&](const std::vector<double>& alpha) {
    Eigen::VectorXd w(N);
    for (int a = 0; a < N; ++a) w(a) = alpha[a] * (1.0 - spec.expenses[a]);
    double mean = 0.0, raw2 = 0.0;
    for (const auto& jc : model.components) {
      double mu = w.dot(jc.mean);
      double var = w.dot(jc.cov * w);
      mean += jc.prob * mu;
      raw2 += jc.prob * (var + mu * mu);
    }
    return std::sqrt(raw2 - mean * mean);
  };

  if (N == 1) {
    std::vector<double> one{1.0};
    double obj = objective == AllocationObjective::MinVariance ? analytic_std(one) : 1.0;
    if (objective == AllocationObjective::MaxSuccess) {
      DecumulationPlan p = plan;
      p.portfolio = spec;
      p.portfolio.weights = one;
      obj = simulate_ruin(p, model, cfg.n_paths, seed, threads).success_prob;
    }
    return {one, obj};
  }

  if (objective == AllocationObjective::MinVariance) {
    // Deterministic projected gradient with a lattice multistart; the
    // objective is smooth (a quadratic form in the effective weights).
    auto grad = [&](const std::vector<double>& alpha) {
      std::vector<double> g(N);
      const double h = 1e-7;
      for (int i = 0; i < N; ++i) {
        std::vector<double> up = alpha, dn = alpha;
        up[i] += h;
        dn[i] -= h;
        double su = 0.0, sd = 0.0;
        for (int j = 0; j < N; ++j) {
          su += up[j];
          sd += dn[j];
        }
        for (int j = 0; j < N; ++j) {
          up[j] /= su;
          dn[j] /= sd;
        }
        g[i] = (analytic_std(up) - analytic_std(dn)) / (2.0 * h);
      }
      return g;
    };

    std::vector<std::vector<double>> starts;
    starts.push_back(std::vector<double>(N, 1.0 / N));
    for (int i = 0; i < N; ++i) {
      std::vector<double> v(N, 0.02 / (N - 1));
      v[i] = 0.98;
      starts.push_back(v);
    }

    std::vector<double> best_alpha;
    double best_obj = 0.0;
    for (const auto& start : starts) {
      std::vector<double> alpha = start;
      double f = analytic_std(alpha);
      double step = 0.25;
      for (int it = 0; it < 5000 && step > cfg.tolerance; ++it) {
        std::vector<double> g = grad(alpha);
        std::vector<double> cand(N);
        for (int i = 0; i < N; ++i) cand[i] = alpha[i] - step * g[i];
        cand = project_simplex(std::move(cand));
        double fc = analytic_std(cand);
        if (fc < f - 1e-15) {
          alpha = std::move(cand);
          f = fc;
        } else {
          step *= 0.5;
        }
      }
      if (best_alpha.empty() || f < best_obj - 1e-12 ||
          (std::abs(f - best_obj) <= 1e-12 && lex_less(alpha, best_alpha))) {
        best_alpha = alpha;
        best_obj = f;
      }
    }
    return {best_alpha, best_obj};
  }

  // MaxSuccess: common random numbers. Component picks depend only on the
  // mixture probabilities, so each path-period ( component, z ) pair is shared
  // across candidate weight vectors.
  const int T = plan.horizon.max_length();
  std::vector<double> probs(model.num_components());
  for (int c = 0; c < model.num_components(); ++c) probs[c] = model.components[c].prob;
  std::vector<int16_t> comp_draw(static_cast<size_t>(cfg.n_paths) * T);
  std::vector<float> z_draw(static_cast<size_t>(cfg.n_paths) * T);
  {
    auto rng = make_stream(seed, 0x63726eULL);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (size_t i = 0; i < comp_draw.size(); ++i) {
      comp_draw[i] = static_cast<int16_t>(sample_component(probs, unif(rng)));
      z_draw[i] = static_cast<float>(gauss(rng));
    }
  }

  auto success_of = [&](const std::vector<double>& alpha) {
    PortfolioSpec s = spec;
    s.weights = alpha;
    UnivariateMixture mix = portfolio_return_mixture(model, s);
    std::vector<long long> ok(resolve_threads(threads), 0);
    const int blocks = static_cast<int>(ok.size());
    parallel_for(blocks, threads, [&](int blk) {
      long long lo = static_cast<long long>(blk) * cfg.n_paths / blocks;
      long long hi = static_cast<long long>(blk + 1) * cfg.n_paths / blocks;
      for (long long p = lo; p < hi; ++p) {
        double rf = plan.withdrawal_rate;
        bool alive = true;
        for (int t = 0; t < T && alive; ++t) {
          size_t idx = static_cast<size_t>(p) * T + t;
          const MixtureComponent& mc = mix[comp_draw[idx]];
          double r_hat = mc.mean + mc.std * static_cast<double>(z_draw[idx]);
          auto next = ruin_factor_step(rf, r_hat);
          if (!next)
            alive = false;
          else
            rf = *next;
        }
        if (alive) ok[blk] += 1;
      }
    });
    long long total = std::accumulate(ok.begin(), ok.end(), 0LL);
    return static_cast<double>(total) / cfg.n_paths;
  };

  // Lattice search with shrinking neighborhoods around the incumbent.
  std::vector<double> best_alpha(N, 1.0 / N);
  double best_obj = success_of(best_alpha);
  double radius = 1.0;
  int resolution = cfg.lattice;
  for (int round = 0; round <= cfg.refinements; ++round) {
    std::vector<std::vector<double>> candidates;
    std::vector<int> bars(N - 1, 0);
    std::function<void(int, int)> enumerate = [&](int pos, int left) {
      if (pos == N - 1) {
        std::vector<double> alpha(N);
        double frac = 0.0;
        for (int i = 0; i < N - 1; ++i) {
          alpha[i] = best_alpha[i] + radius * (static_cast<double>(bars[i]) / resolution - 0.5);
          frac += alpha[i];
        }
        alpha[N - 1] = 1.0 - frac;
        for (double& v : alpha) v = std::max(0.0, v);
        double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
        if (sum <= 0.0) return;
        for (double& v : alpha) v /= sum;
        candidates.push_back(std::move(alpha));
      } else {
        for (int b = 0; b <= left; ++b) {
          bars[pos] = b;
          enumerate(pos + 1, left);
        }
      }
    };
    enumerate(0, resolution);
    for (const auto& alpha : candidates) {
      double obj = success_of(alpha);
      if (obj > best_obj + 1e-12 ||
          (std::abs(obj - best_obj) <= 1e-12 && lex_less(alpha, best_alpha))) {
        best_obj = obj;
        best_alpha = alpha;
      }
    }
    radius *= 0.4;
  }
  return {best_alpha, best_obj};
}

}  // namespace retmix
