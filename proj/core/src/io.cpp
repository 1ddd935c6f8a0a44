#include "retmix/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace retmix {

namespace {

std::ifstream open_or_throw(const std::string& path, const char* error_class) {
  std::ifstream in(path);
  if (!in) throw ParseError(error_class, std::string("cannot open file: ") + path);
  return in;
}

template <typename T>
T token_as(const std::string& tok, const char* error_class, const std::string& field) {
  std::istringstream ss(tok);
  T v;
  ss >> v;
  if (ss.fail() || !ss.eof())
    throw ParseError(error_class, "invalid value for " + field + ": '" + tok + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ControlConfig parse_control(const std::string& path) {
  std::ifstream in = open_or_throw(path, "config");
  ControlConfig cfg;
  const char* fields[7] = {"n_assets",          "n_timepoints",  "starts_multiplier",
                           "max_components",    "bootstrap_samples", "forward_alpha",
                           "backward_alpha"};
  std::string tok;
  for (int i = 0; i < 7; ++i) {
    if (!(in >> tok))
      throw ParseError("config", std::string("missing control field: ") + fields[i]);
    switch (i) {
      case 0: cfg.n_assets = token_as<int>(tok, "config", fields[i]); break;
      case 1: cfg.n_timepoints = token_as<int>(tok, "config", fields[i]); break;
      case 2: cfg.starts_multiplier = token_as<int>(tok, "config", fields[i]); break;
      case 3: cfg.max_components = token_as<int>(tok, "config", fields[i]); break;
      case 4: cfg.bootstrap_samples = token_as<int>(tok, "config", fields[i]); break;
      case 5: cfg.forward_alpha = token_as<double>(tok, "config", fields[i]); break;
      case 6: cfg.backward_alpha = token_as<double>(tok, "config", fields[i]); break;
    }
  }
  if (cfg.n_assets < 1 || cfg.n_timepoints < 1 || cfg.starts_multiplier < 1 ||
      cfg.max_components < 1 || cfg.bootstrap_samples < 1)
    throw ParseError("config", "control counts must all be >= 1");
  if (!(cfg.forward_alpha > 0.0 && cfg.forward_alpha < 1.0) ||
      !(cfg.backward_alpha > 0.0 && cfg.backward_alpha < 1.0))
    throw ParseError("config", "alphas must lie in (0, 1)");

  // Optional extended section: one key=value per token.
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw ParseError("config", "expected key=value, got '" + tok + "'");
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "seed")
      cfg.seed = token_as<std::uint64_t>(val, "config", key);
    else if (key == "std_ratio_bound")
      cfg.std_ratio_bound = token_as<double>(val, "config", key);
    else if (key == "epsilon")
      cfg.epsilon = token_as<double>(val, "config", key);
    else if (key == "lp_penalty")
      cfg.lp_penalty = token_as<double>(val, "config", key);
    else if (key == "lp_segments")
      cfg.lp_segments = token_as<int>(val, "config", key);
    else if (key == "lm_steps_per_thread")
      cfg.lm_steps_per_thread = token_as<int>(val, "config", key);
    else if (key == "lm_thread_multiplier")
      cfg.lm_thread_multiplier = token_as<int>(val, "config", key);
    else if (key == "lm_task_count")
      cfg.lm_task_count = token_as<int>(val, "config", key);
    else if (key == "lm_beat_pool")
      cfg.lm_beat_pool = token_as<int>(val, "config", key);
    else if (key == "threads")
      cfg.threads = token_as<int>(val, "config", key);
    else
      throw ParseError("config", "unknown control key: " + key);
  }
  return cfg;
}

ReturnsPanel parse_returns(const std::string& path, int n_assets, int T) {
  std::ifstream in = open_or_throw(path, "data");
  ReturnsPanel panel(T, n_assets);
  for (int t = 0; t < T; ++t)
    for (int a = 0; a < n_assets; ++a) {
      std::string tok;
      if (!(in >> tok))
        throw ParseError("data", path + " should have " + std::to_string(T) +
                                     " rows of returns for " + std::to_string(n_assets) +
                                     " assets, but it has fewer");
      panel(t, a) = token_as<double>(tok, "data", "return");
    }
  return panel;
}

void save_model(const JointMixture& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("model", "cannot write file: " + path);
  const int N = model.num_assets();
  out << "retmix-model 1\n";
  out << "assets " << N << "\n";
  for (int a = 0; a < N; ++a) {
    out << "marginal " << a << " components " << model.marginals[a].size() << "\n";
    for (const auto& c : model.marginals[a].components())
      out << "  " << format_double(c.weight) << " " << format_double(c.mean) << " "
          << format_double(c.std) << "\n";
  }
  out << "grid";
  for (int g : model.grid.comps_per_asset()) out << " " << g;
  out << "\n";
  out << "joint components " << model.num_components() << "\n";
  for (const auto& comp : model.components) {
    out << "component cell " << comp.cell_id << " prob " << format_double(comp.prob) << "\n";
    out << "  mean";
    for (int a = 0; a < N; ++a) out << " " << format_double(comp.mean(a));
    out << "\n  cov";
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c) out << " " << format_double(comp.cov(r, c));
    out << "\n";
  }
  out << "end\n";
}

JointMixture load_model(const std::string& path) {
  std::ifstream in = open_or_throw(path, "model");
  auto expect = [&](const std::string& want) {
    std::string tok;
    if (!(in >> tok) || tok != want)
      throw ParseError("model", "expected token '" + want + "' in " + path);
  };
  expect("retmix-model");
  expect("1");
  expect("assets");
  int N;
  if (!(in >> N) || N < 1) throw ParseError("model", "bad asset count");

  JointMixture model;
  std::vector<int> comps(N);
  for (int a = 0; a < N; ++a) {
    expect("marginal");
    int idx, g;
    std::string tok;
    if (!(in >> idx) || idx != a) throw ParseError("model", "marginals out of order");
    expect("components");
    if (!(in >> g) || g < 1) throw ParseError("model", "bad component count");
    comps[a] = g;
    std::vector<MixtureComponent> cs(g);
    for (int i = 0; i < g; ++i)
      if (!(in >> cs[i].weight >> cs[i].mean >> cs[i].std))
        throw ParseError("model", "bad marginal component line");
    model.marginals.emplace_back(std::move(cs));
  }
  expect("grid");
  for (int a = 0; a < N; ++a) {
    int g;
    if (!(in >> g) || g != comps[a]) throw ParseError("model", "grid/marginal mismatch");
  }
  model.grid = CellGrid(comps);
  expect("joint");
  expect("components");
  int G;
  if (!(in >> G) || G < 1) throw ParseError("model", "bad joint component count");
  for (int c = 0; c < G; ++c) {
    expect("component");
    expect("cell");
    JointComponent jc;
    if (!(in >> jc.cell_id)) throw ParseError("model", "bad cell id");
    expect("prob");
    if (!(in >> jc.prob)) throw ParseError("model", "bad probability");
    expect("mean");
    jc.mean.resize(N);
    for (int a = 0; a < N; ++a)
      if (!(in >> jc.mean(a))) throw ParseError("model", "bad mean entry");
    expect("cov");
    jc.cov.resize(N, N);
    for (int r = 0; r < N; ++r)
      for (int cc = 0; cc < N; ++cc)
        if (!(in >> jc.cov(r, cc))) throw ParseError("model", "bad covariance entry");
    model.components.push_back(std::move(jc));
  }
  expect("end");
  try {
    validate_joint(model, 1e-8);
  } catch (const std::exception& e) {
    throw ParseError("model", std::string("model fails validation: ") + e.what());
  }
  return model;
}

DecumulationPlan parse_plan(const std::string& path, int n_assets) {
  std::ifstream in = open_or_throw(path, "plan");
  DecumulationPlan plan;
  bool have_rate = false, have_horizon = false, have_weights = false, have_expenses = false;
  std::string line;
  while (std::getline(in, line)) {
    for (char& ch : line)
      if (ch == '=') ch = ' ';
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key) || key[0] == '#') continue;
    if (key == "withdrawal_rate") {
      if (!(ss >> plan.withdrawal_rate) || plan.withdrawal_rate < 0.0)
        throw ParseError("plan", "bad withdrawal_rate");
      have_rate = true;
    } else if (key == "horizon") {
      std::string kind;
      if (!(ss >> kind)) throw ParseError("plan", "horizon needs 'fixed' or 'pmf'");
      if (kind == "fixed") {
        plan.horizon.fixed = true;
        if (!(ss >> plan.horizon.length) || plan.horizon.length < 1)
          throw ParseError("plan", "bad fixed horizon length");
      } else if (kind == "pmf") {
        plan.horizon.fixed = false;
        double v, sum = 0.0;
        while (ss >> v) {
          if (v < 0.0) throw ParseError("plan", "horizon pmf entries must be >= 0");
          plan.horizon.pmf.push_back(v);
          sum += v;
        }
        if (plan.horizon.pmf.size() < 2)
          throw ParseError("plan", "horizon pmf needs entries for t = 0..T, T >= 1");
        if (std::abs(sum - 1.0) > 1e-12)
          throw ParseError("plan", "horizon pmf must sum to 1");
      } else {
        throw ParseError("plan", "unknown horizon kind: " + kind);
      }
      have_horizon = true;
    } else if (key == "weights") {
      double v;
      while (ss >> v) plan.portfolio.weights.push_back(v);
      have_weights = true;
    } else if (key == "expenses") {
      double v;
      while (ss >> v) plan.portfolio.expenses.push_back(v);
      have_expenses = true;
    } else {
      throw ParseError("plan", "unknown plan key: " + key);
    }
  }
  if (!have_rate) throw ParseError("plan", "missing withdrawal_rate");
  if (!have_horizon) throw ParseError("plan", "missing horizon");
  if (!have_weights) throw ParseError("plan", "missing weights");
  if (!have_expenses) throw ParseError("plan", "missing expenses");
  try {
    plan.portfolio.validate(n_assets);
  } catch (const std::exception& e) {
    throw ParseError("plan", e.what());
  }
  return plan;
}

void write_samples(const Eigen::MatrixXd& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("data", "cannot write file: " + path);
  for (int a = 0; a < samples.cols(); ++a) out << (a ? "\t" : "") << "asset_" << a;
  out << "\n";
  for (int i = 0; i < samples.rows(); ++i) {
    for (int a = 0; a < samples.cols(); ++a)
      out << (a ? "\t" : "") << format_double(samples(i, a));
    out << "\n";
  }
}

}  // namespace retmix
