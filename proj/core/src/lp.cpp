#include "retmix/lp.hpp"

#include <cmath>
#include <stdexcept>

namespace retmix {

namespace {
constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr long kMaxPivots = 200000;
constexpr long kBlandAfter = 5000;
}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  const int n = lp.num_vars;
  const int m = static_cast<int>(lp.constraints.size());
  if (lp.objective.size() != n) throw std::invalid_argument("solve_lp: objective size mismatch");

  // Normalize rows to nonnegative rhs, then attach slack/surplus/artificial
  // columns. Column layout: [structural | slack+surplus | artificial | rhs].
  Eigen::MatrixXd A(m, n);
  Eigen::VectorXd b(m);
  std::vector<Relation> rel(m);
  for (int i = 0; i < m; ++i) {
    const auto& c = lp.constraints[i];
    if (c.coeffs.size() != n) throw std::invalid_argument("solve_lp: constraint size mismatch");
    if (c.rhs < 0.0) {
      A.row(i) = -c.coeffs.transpose();
      b(i) = -c.rhs;
      rel[i] = c.rel == Relation::LessEq   ? Relation::GreaterEq
               : c.rel == Relation::GreaterEq ? Relation::LessEq
                                              : Relation::Equal;
    } else {
      A.row(i) = c.coeffs.transpose();
      b(i) = c.rhs;
      rel[i] = c.rel;
    }
  }

  int n_slack = 0, n_art = 0;
  for (int i = 0; i < m; ++i) {
    if (rel[i] != Relation::Equal) ++n_slack;
    if (rel[i] != Relation::LessEq) ++n_art;
  }
  const int total = n + n_slack + n_art;
  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(m, total + 1);
  tab.leftCols(n) = A;
  tab.col(total) = b;

  std::vector<int> basis(m, -1);
  int scol = n, acol = n + n_slack;
  const int art_begin = acol;
  for (int i = 0; i < m; ++i) {
    switch (rel[i]) {
      case Relation::LessEq:
        tab(i, scol) = 1.0;
        basis[i] = scol++;
        break;
      case Relation::GreaterEq:
        tab(i, scol++) = -1.0;
        tab(i, acol) = 1.0;
        basis[i] = acol++;
        break;
      case Relation::Equal:
        tab(i, acol) = 1.0;
        basis[i] = acol++;
        break;
    }
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
  cost.head(n) = lp.maximize ? Eigen::VectorXd(-lp.objective) : lp.objective;

  std::vector<bool> removed_row(m, false);

  auto pivot = [&](int r, int col) {
    tab.row(r) /= tab(r, col);
    for (int i = 0; i < m; ++i) {
      if (i == r || removed_row[i]) continue;
      double f = tab(i, col);
      if (f != 0.0) tab.row(i) -= f * tab.row(r);
    }
    basis[r] = col;
  };

  // Reduced costs are recomputed from the basis each pricing step; at this
  // scale the O(m * n) cost is irrelevant and it avoids drift.
  auto reduced_costs = [&](const Eigen::VectorXd& c, Eigen::VectorXd& out) {
    Eigen::VectorXd cb(m);
    for (int i = 0; i < m; ++i) cb(i) = removed_row[i] ? 0.0 : c(basis[i]);
    out = c;
    for (int i = 0; i < m; ++i)
      if (!removed_row[i] && cb(i) != 0.0) out -= cb(i) * tab.row(i).head(total).transpose();
  };

  auto run_phase = [&](const Eigen::VectorXd& c, bool allow_art) -> LpStatus {
    Eigen::VectorXd rc(total);
    for (long it = 0; it < kMaxPivots; ++it) {
      reduced_costs(c, rc);
      const bool bland = it > kBlandAfter;
      int enter = -1;
      double best = -kCostTol;
      for (int j = 0; j < total; ++j) {
        if (!allow_art && j >= art_begin) continue;
        if (rc(j) < best) {
          enter = j;
          if (bland) break;
          best = rc(j);
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        if (removed_row[i]) continue;
        double a = tab(i, enter);
        if (a > kPivotTol) {
          double ratio = tab(i, total) / a;
          if (leave < 0 || ratio < best_ratio - 1e-12 ||
              (std::abs(ratio - best_ratio) <= 1e-12 && basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(leave, enter);
    }
    return LpStatus::IterationLimit;
  };

  // Phase 1: drive the artificials to zero.
  if (n_art > 0) {
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(total);
    c1.segment(art_begin, n_art).setOnes();
    LpStatus st = run_phase(c1, true);
    if (st == LpStatus::IterationLimit) return {st, Eigen::VectorXd::Zero(n), 0.0};
    double art_sum = 0.0;
    for (int i = 0; i < m; ++i)
      if (!removed_row[i] && basis[i] >= art_begin) art_sum += tab(i, total);
    if (st == LpStatus::Unbounded || art_sum > 1e-7)
      return {LpStatus::Infeasible, Eigen::VectorXd::Zero(n), 0.0};

    // Pivot lingering zero-level artificials out, or drop redundant rows.
    for (int i = 0; i < m; ++i) {
      if (removed_row[i] || basis[i] < art_begin) continue;
      int col = -1;
      for (int j = 0; j < art_begin; ++j)
        if (std::abs(tab(i, j)) > kPivotTol) {
          col = j;
          break;
        }
      if (col >= 0)
        pivot(i, col);
      else
        removed_row[i] = true;
    }
  }

  LpStatus st = run_phase(cost, false);
  LpSolution sol;
  sol.status = st;
  sol.x = Eigen::VectorXd::Zero(n);
  if (st != LpStatus::Optimal) return sol;
  for (int i = 0; i < m; ++i)
    if (!removed_row[i] && basis[i] < n) sol.x(basis[i]) = tab(i, total);
  double obj = lp.objective.dot(sol.x);
  sol.objective = obj;
  return sol;
}

}  // namespace retmix
