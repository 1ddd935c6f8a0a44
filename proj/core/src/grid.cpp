#include "retmix/grid.hpp"

#include <stdexcept>

#include "retmix/em.hpp"

namespace retmix {

CellGrid::CellGrid(std::vector<int> comps_per_asset) : comps_(std::move(comps_per_asset)) {
  if (comps_.empty()) throw std::invalid_argument("CellGrid: needs at least one asset");
  num_cells_ = 1;
  for (int g : comps_) {
    if (g < 1) throw std::invalid_argument("CellGrid: component counts must be >= 1");
    num_cells_ *= g;
  }
}

std::vector<int> CellGrid::tuple_of(int cell) const {
  if (cell < 0 || cell >= num_cells_) throw std::out_of_range("CellGrid::tuple_of");
  std::vector<int> tuple(comps_.size());
  for (int a = num_assets() - 1; a >= 0; --a) {
    tuple[a] = cell % comps_[a];
    cell /= comps_[a];
  }
  return tuple;
}

int CellGrid::cell_of(std::span<const int> tuple) const {
  if (static_cast<int>(tuple.size()) != num_assets())
    throw std::invalid_argument("CellGrid::cell_of: tuple length mismatch");
  int cell = 0;
  for (int a = 0; a < num_assets(); ++a) {
    if (tuple[a] < 0 || tuple[a] >= comps_[a]) throw std::out_of_range("CellGrid::cell_of");
    cell = cell * comps_[a] + tuple[a];
  }
  return cell;
}

bool CellGrid::indicator(int cell, int asset, int component) const {
  return tuple_of(cell)[asset] == component;
}

int assign_component(double x, const UnivariateMixture& mix) {
  std::vector<double> post = posterior_probs(x, mix);
  int best = 0;
  for (int i = 1; i < static_cast<int>(post.size()); ++i)
    if (post[i] > post[best]) best = i;
  return best;
}

CellGrid build_cell_grid(std::vector<int> comps_per_asset) {
  return CellGrid(std::move(comps_per_asset));
}

std::optional<int> cell_lookup(const CellGrid& grid, std::span<const int> tuple) {
  if (static_cast<int>(tuple.size()) != grid.num_assets()) return std::nullopt;
  for (int a = 0; a < grid.num_assets(); ++a)
    if (tuple[a] < 0 || tuple[a] >= grid.comps_per_asset()[a]) return std::nullopt;
  return grid.cell_of(tuple);
}

AssignmentTable tabulate(const ReturnsPanel& panel,
                         const std::vector<UnivariateMixture>& marginals) {
  const int T = static_cast<int>(panel.rows());
  const int N = static_cast<int>(panel.cols());
  if (N != static_cast<int>(marginals.size()))
    throw std::invalid_argument("tabulate: panel columns must match marginal count");

  std::vector<int> comps(N);
  for (int a = 0; a < N; ++a) comps[a] = marginals[a].size();
  CellGrid grid(comps);

  AssignmentTable table;
  table.per_asset_component.resize(T, N);
  table.cell_id.resize(T);
  table.counts.assign(grid.num_cells(), 0);
  table.probs.assign(grid.num_cells(), 0.0);

  std::vector<int> tuple(N);
  for (int t = 0; t < T; ++t) {
    for (int a = 0; a < N; ++a) {
      tuple[a] = assign_component(panel(t, a), marginals[a]);
      table.per_asset_component(t, a) = tuple[a];
    }
    int cell = grid.cell_of(tuple);
    table.cell_id[t] = cell;
    table.counts[cell] += 1;
  }
  for (int c = 0; c < grid.num_cells(); ++c)
    table.probs[c] = static_cast<double>(table.counts[c]) / T;
  return table;
}

}  // namespace retmix
