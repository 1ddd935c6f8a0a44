#include "retmix/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace retmix {

namespace {

// Multivariate normal baseline: sample mean vector + MLE covariance.
std::pair<double, int> mvn_baseline(const ReturnsPanel& panel) {
  const int T = static_cast<int>(panel.rows());
  const int N = static_cast<int>(panel.cols());
  Eigen::VectorXd mean = panel.colwise().mean().transpose();
  Eigen::MatrixXd centered = panel.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(T);
  double ll = 0.0;
  for (int t = 0; t < T; ++t) ll += std::log(mvn_pdf(panel.row(t).transpose(), mean, cov));
  return {ll, N + N * (N + 1) / 2};
}

void write_univariate_section(std::ofstream& out, int asset, const SelectionTrace& trace,
                              int T) {
  out << "== asset " << asset << " ==\n";
  for (const auto& [g, fit] : trace.fits_by_g) {
    ICReport ic = information_criteria(fit.log_likelihood, 3 * g - 1, T);
    out << g << "-component  LL " << format_double(fit.log_likelihood) << "  AIC "
        << format_double(ic.aic) << "  AICC " << format_double(ic.aicc) << "  BIC "
        << format_double(ic.bic) << "\n";
    for (const auto& c : fit.mixture.components())
      out << "    pi " << format_double(c.weight) << "  mu " << format_double(c.mean)
          << "  sigma " << format_double(c.std) << "\n";
  }
  for (size_t i = 0; i < trace.tests.size(); ++i) {
    const LRTRecord& t = trace.tests[i];
    out << "test " << i + 1 << " (" << t.h0 << " vs " << t.h1 << ") "
        << (t.direction == TestDirection::Forward ? "forward" : "backward") << "  lambda "
        << format_double(t.lambda_obs) << "  p " << format_double(t.p_value) << "  alpha "
        << format_double(t.alpha_used) << (t.rejected ? "  REJECT" : "  accept")
        << (t.reused ? "  (reused)" : "") << "\n";
  }
  out << "chosen_g " << trace.chosen_g << "\n\n";
}

void write_structure_section(std::ofstream& out, const char* name,
                             const StructureSolution& sol) {
  out << "== structure LP (" << name << ") ==\n";
  out << "objective " << format_double(sol.objective) << "\n";
  for (size_t c = 0; c < sol.probs.size(); ++c)
    out << "cell " << c << "  p " << format_double(sol.probs[c]) << "\n";
  out << "\n";
}

void write_joint_section(std::ofstream& out, const FittedJoint& fj, int T) {
  const JointMixture& m = fj.ecme.model;
  out << "== joint fit from " << fj.start_name << " start ==\n";
  out << "LL " << format_double(fj.ecme.trace.final_ll) << "  free_params " << fj.free_params
      << "  AIC " << format_double(fj.aic) << "  T " << T << "\n";
  auto [cov, corr] = mixture_covariance(m);
  for (const auto& comp : m.components) {
    out << "component cell " << comp.cell_id << "  p " << format_double(comp.prob)
        << "  det " << format_double(comp.cov.determinant()) << "\n";
    const int N = m.num_assets();
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        double rho = comp.cov(i, j) / std::sqrt(comp.cov(i, i) * comp.cov(j, j));
        out << "    rho(" << i << "," << j << ") " << format_double(rho) << "\n";
      }
  }
  out << "overall correlations:\n";
  for (int i = 0; i < corr.rows(); ++i)
    for (int j = i + 1; j < corr.cols(); ++j)
      out << "    rho(" << i << "," << j << ") " << format_double(corr(i, j)) << "\n";
  out << "\n";
}

}  // namespace

PipelineResult run_pipeline(const ControlConfig& cfg, const ReturnsPanel& panel,
                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "issues");

  auto record_issue = [&](const std::string& what) {
    std::ofstream err(fs::path(out_dir) / "issues" / "pipeline_error.txt");
    err << what << "\n";
  };

  try {
    PipelineResult res;
    const int T = static_cast<int>(panel.rows());
    const int N = static_cast<int>(panel.cols());
    if (N != cfg.n_assets || T != cfg.n_timepoints)
      throw ParseError("config", "control file dimensions do not match the returns panel");

    SelectionConfig sel;
    sel.max_components = cfg.max_components;
    sel.bootstrap_samples = cfg.bootstrap_samples;
    sel.forward_alpha = cfg.forward_alpha;
    sel.backward_alpha = cfg.backward_alpha;
    sel.em.std_ratio_bound = cfg.std_ratio_bound;
    sel.em.epsilon = cfg.epsilon;
    sel.em.starts_per_component = cfg.starts_multiplier;

    for (int a = 0; a < N; ++a) {
      std::vector<double> col(panel.col(a).data(), panel.col(a).data() + T);
      res.selection.push_back(
          select_components(col, sel, cfg.seed + static_cast<std::uint64_t>(a) * 7919,
                            cfg.threads));
      res.marginals.push_back(
          res.selection.back().fits_by_g.at(res.selection.back().chosen_g).mixture);
    }

    res.table = tabulate(panel, res.marginals);

    LPConfig lp;
    lp.penalty_M = cfg.lp_penalty;
    lp.ssd_segments = cfg.lp_segments;
    res.minimax = minimax_structure(res.table, res.marginals, lp);
    res.min_ssd = min_ssd_structure(res.table, res.marginals, lp);

    auto [bll, bparams] = mvn_baseline(panel);
    res.mvn_baseline_ll = bll;
    res.mvn_baseline_aic = 2.0 * bparams - 2.0 * bll;

    if (N == 1) {
      // Joint model reduces to the marginal itself.
      StructureSolution direct;
      direct.probs.resize(res.marginals[0].size());
      for (int i = 0; i < res.marginals[0].size(); ++i) {
        direct.probs[i] = res.marginals[0][i].weight;
        direct.kept_cells.push_back(i);
      }
      res.best_model = make_joint_mixture(res.marginals, direct);
      res.best_ll = joint_log_likelihood(panel, res.best_model);
    } else {
      LMConfig lm;
      lm.steps_per_thread = cfg.lm_steps_per_thread;
      lm.thread_multiplier = cfg.lm_thread_multiplier;
      lm.task_count = cfg.lm_task_count;
      lm.beat_pool = cfg.lm_beat_pool;
      lm.epsilon = cfg.epsilon;

      const StructureSolution* starts[2] = {&res.minimax, &res.min_ssd};
      const char* names[2] = {"minimax", "min-ssd"};
      for (int i = 0; i < 2; ++i) {
        JointMixture init = make_joint_mixture(res.marginals, *starts[i]);
        MarginalConstraints mc =
            reduce_constraints(init.grid, res.marginals, starts[i]->kept_cells);
        FittedJoint fj;
        fj.start_name = names[i];
        fj.ecme = ecme_fit(panel, init, mc, lm, cfg.seed + 1000 + i, cfg.threads);
        fj.free_params = count_free_params(fj.ecme.model);
        fj.aic = 2.0 * fj.free_params - 2.0 * fj.ecme.trace.final_ll;
        res.joints.push_back(std::move(fj));
      }
      int best = res.joints[0].aic <= res.joints[1].aic ? 0 : 1;
      res.best_model = res.joints[best].ecme.model;
      res.best_ll = res.joints[best].ecme.trace.final_ll;
    }

    // Report + machine-readable models.
    std::ofstream out(fs::path(out_dir) / "output.txt");
    out << "retmix pipeline report\n";
    out << "assets " << N << "  timepoints " << T << "\n\n";
    for (int a = 0; a < N; ++a) write_univariate_section(out, a, res.selection[a], T);
    out << "== cell counts ==\n";
    for (size_t c = 0; c < res.table.counts.size(); ++c)
      out << "cell " << c << "  n " << res.table.counts[c] << "  phat "
          << format_double(res.table.probs[c]) << "\n";
    out << "\n";
    write_structure_section(out, "minimax", res.minimax);
    write_structure_section(out, "min-ssd", res.min_ssd);
    for (const auto& fj : res.joints) write_joint_section(out, fj, T);
    out << "== model comparison (AIC) ==\n";
    out << "multivariate normal baseline  LL " << format_double(res.mvn_baseline_ll)
        << "  AIC " << format_double(res.mvn_baseline_aic) << "\n";
    for (const auto& fj : res.joints)
      out << "mixture (" << fj.start_name << ")  LL "
          << format_double(fj.ecme.trace.final_ll) << "  AIC " << format_double(fj.aic)
          << "\n";
    out << "chosen model LL " << format_double(res.best_ll) << "\n";

    for (const auto& fj : res.joints) {
      std::string name = fj.start_name == "minimax" ? "model_minimax.txt" : "model_minssd.txt";
      save_model(fj.ecme.model, (fs::path(out_dir) / name).string());
    }
    save_model(res.best_model, (fs::path(out_dir) / "model_best.txt").string());
    return res;
  } catch (const std::exception& e) {
    record_issue(e.what());
    throw;
  }
}

}  // namespace retmix
