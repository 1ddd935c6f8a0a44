#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "retmix/ecme.hpp"
#include "retmix/ruin.hpp"

namespace retmix {

/// Parse/IO failure with a machine-parsable class (config, data, model, plan).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string error_class, const std::string& message)
      : std::runtime_error(message), class_(std::move(error_class)) {}
  const std::string& error_class() const { return class_; }

 private:
  std::string class_;
};

struct ControlConfig {
  // The seven positional control fields, in file order.
  int n_assets = 0;
  int n_timepoints = 0;
  int starts_multiplier = 0;  // starts per component multiple
  int max_components = 0;
  int bootstrap_samples = 0;
  double forward_alpha = 0.25;
  double backward_alpha = 0.25;

  // Extended key=value settings with defaults.
  std::uint64_t seed = 20160101;
  double std_ratio_bound = 16.0;
  double epsilon = 1e-15;
  double lp_penalty = 1e6;
  int lp_segments = 500;
  int lm_steps_per_thread = 1000;
  int lm_thread_multiplier = 2;
  int lm_task_count = 0;
  int lm_beat_pool = 80;
  int threads = 0;
};

/// Reads the seven whitespace-separated control values, then optional
/// key=value lines for the extended settings. Unknown keys and malformed
/// tokens raise ParseError("config").
ControlConfig parse_control(const std::string& path);

/// Reads T rows by n_assets columns of whitespace-separated returns.
/// Fewer than T rows raises ParseError("data").
ReturnsPanel parse_returns(const std::string& path, int n_assets, int T);

/// Self-describing text serialization of a joint mixture; floats carry 17
/// significant digits so a written model reloads bit-exactly.
void save_model(const JointMixture& model, const std::string& path);
JointMixture load_model(const std::string& path);

/// Decumulation plan as key-value text: withdrawal_rate, horizon
/// ("fixed <T>" or "pmf <p0> ... <pT>"), weights, expenses.
DecumulationPlan parse_plan(const std::string& path, int n_assets);

/// Writes draws as a delimited file with one asset column per field.
void write_samples(const Eigen::MatrixXd& samples, const std::string& path);

std::string format_double(double v);  // 17 significant digits

}  // namespace retmix
