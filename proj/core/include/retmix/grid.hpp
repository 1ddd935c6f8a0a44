#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "retmix/stats.hpp"

namespace retmix {

/// Rows are time points, columns are assets; entries are compounding returns.
using ReturnsPanel = Eigen::MatrixXd;

/// Full factorial of per-asset univariate components. Cells are enumerated
/// lexicographically with the last asset cycling fastest, e.g. (2,3,2) yields
/// 12 cells with cell 11 = (1,2,1).
class CellGrid {
 public:
  CellGrid() = default;
  explicit CellGrid(std::vector<int> comps_per_asset);

  int num_assets() const { return static_cast<int>(comps_.size()); }
  int num_cells() const { return num_cells_; }
  const std::vector<int>& comps_per_asset() const { return comps_; }

  /// Component tuple of a cell id (the inverse of cell_of).
  std::vector<int> tuple_of(int cell) const;

  /// Cell id of a component tuple; 1 iff cell c houses component i of asset j.
  int cell_of(std::span<const int> tuple) const;
  bool indicator(int cell, int asset, int component) const;

 private:
  std::vector<int> comps_;
  int num_cells_ = 0;
};

struct AssignmentTable {
  Eigen::MatrixXi per_asset_component;  // T x N Bayes assignments
  std::vector<int> cell_id;             // per time point
  std::vector<int> counts;              // n_c per cell
  std::vector<double> probs;            // n_c / T
};

/// Bayes decision rule: the component with the largest posterior probability,
/// ties to the lowest index. Throws std::domain_error on zero density.
int assign_component(double x, const UnivariateMixture& mix);

CellGrid build_cell_grid(std::vector<int> comps_per_asset);

/// Cell id for a component tuple, or nullopt when any entry is out of range.
std::optional<int> cell_lookup(const CellGrid& grid, std::span<const int> tuple);

/// Per-time-point Bayes assignment of every asset, the induced cell ids, and
/// empirical cell counts/probabilities.
AssignmentTable tabulate(const ReturnsPanel& panel,
                         const std::vector<UnivariateMixture>& marginals);

}  // namespace retmix
