#pragma once

#include <Eigen/Dense>
#include <vector>

#include "retmix/grid.hpp"

namespace retmix {

enum class Relation { LessEq, Equal, GreaterEq };

struct LpConstraint {
  Eigen::VectorXd coeffs;
  Relation rel = Relation::LessEq;
  double rhs = 0.0;
};

struct LinearProgram {
  int num_vars = 0;
  bool maximize = false;
  Eigen::VectorXd objective;
  std::vector<LpConstraint> constraints;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// Dense two-phase tableau simplex over nonnegative variables. Dantzig
/// pricing with a switch to Bland's rule as a cycling guard; the guard's
/// iteration cap surfaces as LpStatus::IterationLimit.
LpSolution solve_lp(const LinearProgram& lp);

struct LPConfig {
  double penalty_M = 1e6;    // objective penalty on cells with zero observations
  int ssd_segments = 500;    // S: piecewise-linear segments per cell
  double zero_tolerance = 1e-9;
};

/// Full-row-rank marginal constraint system restricted to the kept cells.
struct MarginalConstraints {
  Eigen::MatrixXd lhs;  // 0/1 entries; columns follow kept_cells order
  Eigen::VectorXd rhs;
  std::vector<int> kept_cells;
};

struct StructureSolution {
  std::vector<double> probs;      // per grid cell
  std::vector<int> kept_cells;    // cells with prob > zero_tolerance
  double objective = 0.0;         // minimax: Z; min-SSD: piecewise-linear value
};

/// Cell probabilities minimizing the maximum |p_c - phat_c| subject to the
/// marginal equalities, with empty cells penalized through M.
StructureSolution minimax_structure(const AssignmentTable& table,
                                    const std::vector<UnivariateMixture>& marginals,
                                    const LPConfig& cfg);

/// Cell probabilities minimizing the S-segment piecewise-linear surrogate of
/// the sum of squared deviations, same constraints and penalty scheme.
StructureSolution min_ssd_structure(const AssignmentTable& table,
                                    const std::vector<UnivariateMixture>& marginals,
                                    const LPConfig& cfg);

/// Builds the (sum of g_j - N + 1)-row system (first g_j - 1 component rows
/// per asset plus the sum-to-one row) over the kept cells, then drops
/// linearly dependent rows one at a time until the row count equals the rank.
MarginalConstraints reduce_constraints(const CellGrid& grid,
                                       const std::vector<UnivariateMixture>& marginals,
                                       const std::vector<int>& kept_cells);

}  // namespace retmix
