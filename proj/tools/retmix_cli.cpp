#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "retmix/diagnostics.hpp"
#include "retmix/pipeline.hpp"
#include "retmix/rng.hpp"

namespace fs = std::filesystem;
using namespace retmix;

namespace {

int fail(const std::string& error_class, const std::string& message) {
  std::cerr << "error: " << error_class << ": " << message << "\n";
  return 1;
}

void print_ruin_report(std::ostream& out, const RuinReport& rep) {
  out << "paths " << rep.paths << "\n";
  out << "success_prob " << format_double(rep.success_prob) << "  se "
      << format_double(rep.success_se) << "\n";
  for (size_t t = 0; t < rep.ruin_prob.size(); ++t)
    out << "ruin(" << t + 1 << ") " << format_double(rep.ruin_prob[t]) << "  se "
        << format_double(rep.ruin_se[t]) << "\n";
  for (size_t l = 0; l < rep.longevity_pmf.size(); ++l)
    out << "P(P_L=" << l << ") " << format_double(rep.longevity_pmf[l]) << "\n";
  out << "P(P_L>=" << rep.longevity_pmf.size() << ") " << format_double(rep.longevity_tail)
      << "\n";
  out << "longevity_mean " << format_double(rep.longevity_mean) << "\n";
  out << "longevity_median " << format_double(rep.longevity_median) << "\n";
  out << "longevity_modes";
  for (int m : rep.longevity_modes) out << " " << m;
  out << "\n";
}

ReturnsPanel load_panel_for(const ControlConfig& cfg, const std::string& data_path) {
  return parse_returns(data_path, cfg.n_assets, cfg.n_timepoints);
}

std::vector<Eigen::VectorXd> parse_events(const std::string& path, int n_assets) {
  std::ifstream in(path);
  if (!in) throw ParseError("data", "cannot open events file: " + path);
  std::vector<Eigen::VectorXd> events;
  double v;
  std::vector<double> row;
  while (in >> v) {
    row.push_back(v);
    if (static_cast<int>(row.size()) == n_assets) {
      events.push_back(Eigen::Map<Eigen::VectorXd>(row.data(), n_assets));
      row.clear();
    }
  }
  if (!row.empty())
    throw ParseError("data", "events file has a trailing partial row");
  return events;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-marginal normal-mixture modeling and retirement ruin analysis"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir = ".", model_path, plan_path, events_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  int n_samples = 0;
  long long n_paths = 100000;
  int max_lag = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--threads", threads);
  };

  auto* fit = app.add_subcommand("fit", "Run the full fitting pipeline");
  fit->add_option("--config", config_path)->required();
  fit->add_option("--data", data_path)->required();
  fit->add_option("--out", out_dir);
  add_common(fit);

  auto* sample = app.add_subcommand("sample", "Draw from a saved model");
  sample->add_option("--model", model_path)->required();
  sample->add_option("--out", out_dir);
  sample->add_option("-n,--n", n_samples)->required();
  add_common(sample);

  auto* ruin = app.add_subcommand("ruin", "Ruin analysis of a saved model and plan");
  ruin->add_option("--model", model_path)->required();
  ruin->add_option("--plan", plan_path)->required();
  ruin->add_option("--out", out_dir);
  ruin->add_option("--paths", n_paths);
  add_common(ruin);

  auto* stress = app.add_subcommand("stress", "Refit with seeded events and compare ruin");
  stress->add_option("--config", config_path)->required();
  stress->add_option("--data", data_path)->required();
  stress->add_option("--events", events_path)->required();
  stress->add_option("--plan", plan_path)->required();
  stress->add_option("--out", out_dir);
  stress->add_option("--paths", n_paths);
  add_common(stress);

  auto* diagnose = app.add_subcommand("diagnose", "Serial-correlation diagnostics per asset");
  diagnose->add_option("--config", config_path)->required();
  diagnose->add_option("--data", data_path)->required();
  diagnose->add_option("--out", out_dir);
  diagnose->add_option("--lags", max_lag);
  add_common(diagnose);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    fs::create_directories(out_dir);
    if (*fit) {
      ControlConfig cfg = parse_control(config_path);
      if (seed_set) cfg.seed = seed;
      if (threads > 0) cfg.threads = threads;
      ReturnsPanel panel = load_panel_for(cfg, data_path);
      PipelineResult res = run_pipeline(cfg, panel, out_dir);
      std::cout << "fit complete: model LL " << format_double(res.best_ll) << ", report in "
                << (fs::path(out_dir) / "output.txt").string() << "\n";
    } else if (*sample) {
      JointMixture model = load_model(model_path);
      auto rng = make_stream(seed_set ? seed : 1);
      Eigen::MatrixXd draws = n_samples > 0 ? sample_joint(model, n_samples, rng)
                                            : Eigen::MatrixXd(0, model.num_assets());
      std::string out_path = (fs::path(out_dir) / "samples.tsv").string();
      write_samples(draws, out_path);
      std::cout << "wrote " << n_samples << " draws to " << out_path << "\n";
    } else if (*ruin) {
      JointMixture model = load_model(model_path);
      DecumulationPlan plan = parse_plan(plan_path, model.num_assets());
      RuinReport rep = simulate_ruin(plan, model, static_cast<int>(n_paths),
                                     seed_set ? seed : 1, threads);
      std::string out_path = (fs::path(out_dir) / "ruin.txt").string();
      std::ofstream out(out_path);
      print_ruin_report(out, rep);
      print_ruin_report(std::cout, rep);
    } else if (*stress) {
      ControlConfig cfg = parse_control(config_path);
      if (seed_set) cfg.seed = seed;
      if (threads > 0) cfg.threads = threads;
      ReturnsPanel panel = load_panel_for(cfg, data_path);
      std::vector<Eigen::VectorXd> events = parse_events(events_path, cfg.n_assets);

      PipelineResult base = run_pipeline(cfg, panel, (fs::path(out_dir) / "base").string());
      ControlConfig stressed_cfg = cfg;
      stressed_cfg.n_timepoints += static_cast<int>(events.size());
      PipelineResult stressed =
          run_pipeline(stressed_cfg, seed_black_swans(panel, events),
                       (fs::path(out_dir) / "stressed").string());

      DecumulationPlan plan = parse_plan(plan_path, cfg.n_assets);
      RuinReport before = simulate_ruin(plan, base.best_model, static_cast<int>(n_paths),
                                        cfg.seed, threads);
      RuinReport after = simulate_ruin(plan, stressed.best_model, static_cast<int>(n_paths),
                                       cfg.seed, threads);
      std::ofstream out(fs::path(out_dir) / "stress.txt");
      out << "== before seeding ==\n";
      print_ruin_report(out, before);
      out << "\n== after seeding " << events.size() << " events ==\n";
      print_ruin_report(out, after);
      std::cout << "success before " << format_double(before.success_prob) << ", after "
                << format_double(after.success_prob) << "\n";
    } else if (*diagnose) {
      ControlConfig cfg = parse_control(config_path);
      ReturnsPanel panel = load_panel_for(cfg, data_path);
      int lags = max_lag > 0 ? max_lag : cfg.n_timepoints / 4;
      std::ofstream out(fs::path(out_dir) / "diagnostics.txt");
      for (int a = 0; a < cfg.n_assets; ++a) {
        std::vector<double> col(panel.col(a).data(), panel.col(a).data() + panel.rows());
        auto r = acf(col, lags);
        auto pr = pacf(col, lags);
        double p = serial_correlation_test(col, lags);
        out << "== asset " << a << " ==\n";
        out << "portmanteau_p " << format_double(p) << "\n";
        for (int k = 0; k <= lags; ++k)
          out << "lag " << k << "  acf " << format_double(r[k]) << "  pacf "
              << format_double(pr[k]) << "\n";
        out << "\n";
      }
      std::cout << "diagnostics written for " << cfg.n_assets << " assets\n";
    }
  } catch (const ParseError& e) {
    return fail(e.error_class(), e.what());
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what());
  } catch (const std::domain_error& e) {
    return fail("data", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
