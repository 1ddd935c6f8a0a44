#pragma once

#include <string>
#include <vector>

#include "retmix/io.hpp"
#include "retmix/selection.hpp"

namespace retmix {

struct FittedJoint {
  std::string start_name;  // "minimax" or "min-ssd"
  EcmeResult ecme;
  double aic = 0.0;
  int free_params = 0;
};

struct PipelineResult {
  std::vector<SelectionTrace> selection;        // per asset
  std::vector<UnivariateMixture> marginals;     // chosen fits
  AssignmentTable table;
  StructureSolution minimax;
  StructureSolution min_ssd;
  std::vector<FittedJoint> joints;              // empty for a single asset
  JointMixture best_model;
  double best_ll = 0.0;
  double mvn_baseline_ll = 0.0;
  double mvn_baseline_aic = 0.0;
};

/// Fits the full model: per-asset component selection, Bayes tabulation, both
/// structure LPs, and an ECME run from each LP start. Writes output.txt plus
/// machine-readable model files under out_dir; failures are also recorded in
/// out_dir/issues/. A single-asset panel skips the joint stage and reports
/// the marginal as the model.
PipelineResult run_pipeline(const ControlConfig& cfg, const ReturnsPanel& panel,
                            const std::string& out_dir);

}  // namespace retmix
