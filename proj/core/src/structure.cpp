#include <Eigen/Dense>
#include <functional>
#include <stdexcept>

#include "retmix/lp.hpp"

namespace retmix {

namespace {

CellGrid grid_from_marginals(const std::vector<UnivariateMixture>& marginals) {
  std::vector<int> comps(marginals.size());
  for (size_t a = 0; a < marginals.size(); ++a) comps[a] = marginals[a].size();
  return CellGrid(std::move(comps));
}

// All marginal equality rows (every component of every asset); together they
// imply the sum-to-one constraint.
void add_marginal_rows(LinearProgram& lp, const CellGrid& grid,
                       const std::vector<UnivariateMixture>& marginals,
                       const std::function<void(Eigen::VectorXd&, int, double)>& add_cell) {
  for (int a = 0; a < grid.num_assets(); ++a) {
    for (int i = 0; i < marginals[a].size(); ++i) {
      LpConstraint row;
      row.coeffs = Eigen::VectorXd::Zero(lp.num_vars);
      for (int c = 0; c < grid.num_cells(); ++c)
        if (grid.indicator(c, a, i)) add_cell(row.coeffs, c, 1.0);
      row.rel = Relation::Equal;
      row.rhs = marginals[a][i].weight;
      lp.constraints.push_back(std::move(row));
    }
  }
}

StructureSolution finish(const CellGrid& grid, const LPConfig& cfg,
                         std::vector<double> probs, double objective) {
  StructureSolution out;
  out.probs = std::move(probs);
  for (int c = 0; c < grid.num_cells(); ++c)
    if (out.probs[c] > cfg.zero_tolerance) out.kept_cells.push_back(c);
  out.objective = objective;
  return out;
}

}  // namespace

StructureSolution minimax_structure(const AssignmentTable& table,
                                    const std::vector<UnivariateMixture>& marginals,
                                    const LPConfig& cfg) {
  CellGrid grid = grid_from_marginals(marginals);
  const int n_cells = grid.num_cells();
  if (static_cast<int>(table.counts.size()) != n_cells)
    throw std::invalid_argument("minimax_structure: table does not match the marginals");

  // Variables: [p_0..p_{C-1} | X_0..X_{C-1} | Z]
  LinearProgram lp;
  lp.num_vars = 2 * n_cells + 1;
  const int zvar = 2 * n_cells;
  lp.objective = Eigen::VectorXd::Zero(lp.num_vars);
  lp.objective(zvar) = 1.0;
  for (int c = 0; c < n_cells; ++c) lp.objective(n_cells + c) = cfg.penalty_M;

  add_marginal_rows(lp, grid, marginals,
                    [](Eigen::VectorXd& row, int c, double v) { row(c) += v; });

  for (int c = 0; c < n_cells; ++c) {
    LpConstraint feas;  // p_c - X_c <= n_c
    feas.coeffs = Eigen::VectorXd::Zero(lp.num_vars);
    feas.coeffs(c) = 1.0;
    feas.coeffs(n_cells + c) = -1.0;
    feas.rel = Relation::LessEq;
    feas.rhs = static_cast<double>(table.counts[c]);
    lp.constraints.push_back(std::move(feas));

    LpConstraint up;  // Z - p_c >= -phat_c
    up.coeffs = Eigen::VectorXd::Zero(lp.num_vars);
    up.coeffs(zvar) = 1.0;
    up.coeffs(c) = -1.0;
    up.rel = Relation::GreaterEq;
    up.rhs = -table.probs[c];
    lp.constraints.push_back(std::move(up));

    LpConstraint dn;  // Z + p_c >= phat_c
    dn.coeffs = Eigen::VectorXd::Zero(lp.num_vars);
    dn.coeffs(zvar) = 1.0;
    dn.coeffs(c) = 1.0;
    dn.rel = Relation::GreaterEq;
    dn.rhs = table.probs[c];
    lp.constraints.push_back(std::move(dn));
  }

  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("minimax_structure: LP did not solve to optimality");
  std::vector<double> probs(n_cells);
  for (int c = 0; c < n_cells; ++c) probs[c] = sol.x(c);
  return finish(grid, cfg, std::move(probs), sol.x(zvar));
}

StructureSolution min_ssd_structure(const AssignmentTable& table,
                                    const std::vector<UnivariateMixture>& marginals,
                                    const LPConfig& cfg) {
  CellGrid grid = grid_from_marginals(marginals);
  const int n_cells = grid.num_cells();
  if (static_cast<int>(table.counts.size()) != n_cells)
    throw std::invalid_argument("min_ssd_structure: table does not match the marginals");
  const int S = cfg.ssd_segments;
  if (S < 2) throw std::invalid_argument("min_ssd_structure: need at least 2 segments");

  // Variables: [alpha_{c,s} for c, s = 0..S | X_0..X_{C-1}];
  // p_c = sum_s alpha_{c,s} * (s / S).
  const int per_cell = S + 1;
  LinearProgram lp;
  lp.num_vars = n_cells * per_cell + n_cells;
  const int xbase = n_cells * per_cell;
  lp.objective = Eigen::VectorXd::Zero(lp.num_vars);
  for (int c = 0; c < n_cells; ++c) {
    for (int s = 0; s <= S; ++s) {
      double node = static_cast<double>(s) / S;
      double d = node - table.probs[c];
      lp.objective(c * per_cell + s) = d * d;
    }
    lp.objective(xbase + c) = cfg.penalty_M;
  }

  auto add_cell = [&](Eigen::VectorXd& row, int c, double v) {
    for (int s = 0; s <= S; ++s) row(c * per_cell + s) += v * (static_cast<double>(s) / S);
  };
  add_marginal_rows(lp, grid, marginals, add_cell);

  for (int c = 0; c < n_cells; ++c) {
    LpConstraint feas;  // p_c - X_c <= n_c
    feas.coeffs = Eigen::VectorXd::Zero(lp.num_vars);
    add_cell(feas.coeffs, c, 1.0);
    feas.coeffs(xbase + c) = -1.0;
    feas.rel = Relation::LessEq;
    feas.rhs = static_cast<double>(table.counts[c]);
    lp.constraints.push_back(std::move(feas));

    LpConstraint cx;  // alphas of each cell form a convex combination
    cx.coeffs = Eigen::VectorXd::Zero(lp.num_vars);
    for (int s = 0; s <= S; ++s) cx.coeffs(c * per_cell + s) = 1.0;
    cx.rel = Relation::Equal;
    cx.rhs = 1.0;
    lp.constraints.push_back(std::move(cx));
  }

  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("min_ssd_structure: LP did not solve to optimality");

  std::vector<double> probs(n_cells, 0.0);
  double surrogate = 0.0;
  for (int c = 0; c < n_cells; ++c) {
    for (int s = 0; s <= S; ++s) {
      double a = sol.x(c * per_cell + s);
      probs[c] += a * (static_cast<double>(s) / S);
      surrogate += a * lp.objective(c * per_cell + s);
    }
  }
  return finish(grid, cfg, std::move(probs), surrogate);
}

MarginalConstraints reduce_constraints(const CellGrid& grid,
                                       const std::vector<UnivariateMixture>& marginals,
                                       const std::vector<int>& kept_cells) {
  if (kept_cells.empty()) throw std::invalid_argument("reduce_constraints: no kept cells");
  const int n_kept = static_cast<int>(kept_cells.size());
  int total_rows = 1;
  for (const auto& m : marginals) total_rows += m.size() - 1;

  Eigen::MatrixXd lhs(total_rows, n_kept);
  Eigen::VectorXd rhs(total_rows);
  int rw = 0;
  for (int a = 0; a < grid.num_assets(); ++a) {
    for (int i = 0; i < marginals[a].size() - 1; ++i) {
      for (int c = 0; c < n_kept; ++c)
        lhs(rw, c) = grid.indicator(kept_cells[c], a, i) ? 1.0 : 0.0;
      rhs(rw++) = marginals[a][i].weight;
    }
  }
  lhs.row(rw).setOnes();
  rhs(rw) = 1.0;

  const int rank = static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(lhs).rank());
  std::vector<bool> keep_row(total_rows, true);
  if (rank < total_rows) {
    // Zero one row at a time: if the rank is unchanged the row was dependent
    // and stays dropped, otherwise restore it.
    Eigen::MatrixXd work = lhs;
    for (int r = 0; r < total_rows; ++r) {
      Eigen::RowVectorXd saved = work.row(r);
      work.row(r).setZero();
      int trank = static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(work).rank());
      if (trank < rank)
        work.row(r) = saved;
      else
        keep_row[r] = false;
    }
  }

  MarginalConstraints out;
  out.kept_cells = kept_cells;
  out.lhs.resize(rank, n_kept);
  out.rhs.resize(rank);
  int k = 0;
  for (int r = 0; r < total_rows; ++r) {
    if (!keep_row[r]) continue;
    out.lhs.row(k) = lhs.row(r);
    out.rhs(k++) = rhs(r);
  }
  if (k != rank) throw std::runtime_error("reduce_constraints: rank reduction failed");
  return out;
}

}  // namespace retmix
