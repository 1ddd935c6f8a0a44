#pragma once

// Published parameterizations used as test fixtures: the three fitted
// marginals, the five-component joint model, the per-size information
// criteria table rows, and the empirical cell counts.

#include <array>
#include <vector>

#include "retmix/ecme.hpp"
#include "retmix/stats.hpp"

namespace fixtures {

inline retmix::UnivariateMixture large_cap() {
  return retmix::UnivariateMixture(
      {{1.0, 1.082139318181818, 0.197430382245555}});
}

inline retmix::UnivariateMixture small_cap() {
  return retmix::UnivariateMixture({
      {0.163796557010864, 0.944667188140307, 0.065233151408053},
      {0.707369571461765, 1.165057494177362, 0.366529325768043},
      {0.128833871527371, 1.191903886074301, 0.023596517545339},
  });
}

inline retmix::UnivariateMixture bonds() {
  return retmix::UnivariateMixture({
      {0.947744576049301, 1.011164539967906, 0.069579917666149},
      {0.052255423950700, 1.220436091927283, 0.016983666409906},
  });
}

inline std::vector<retmix::UnivariateMixture> lsb_marginals() {
  return {large_cap(), small_cap(), bonds()};
}

// Empirical cell counts on the (1,3,2) grid in grid order:
// (0,0,0) (0,0,1) (0,1,0) (0,1,1) (0,2,0) (0,2,1).
inline std::vector<int> lsb_cell_counts() { return {14, 0, 57, 3, 12, 2}; }
inline constexpr int kLsbSampleSize = 88;

struct JointRegime {
  std::array<int, 3> tuple;  // (L, S, B) component indices, 0-based
  double prob;
  double rho_ls, rho_lb, rho_sb;
};

// The five-component joint parameterization over the (L, S, B) grid.
inline std::vector<JointRegime> lsb_joint_regimes() {
  return {
      {{0, 0, 0}, 0.163796557010864, 0.718841320548123, 0.162032898398328, 0.156156396700733},
      {{0, 1, 0}, 0.683298902828332, 0.846153215066181, -0.095463348011069, -0.082959075055513},
      {{0, 1, 1}, 0.024070668633433, 0.047531637731748, -0.703796286452937, -0.743051448755313},
      {{0, 2, 0}, 0.100649116210105, 0.577235331054455, 0.555733717419093, 0.698818203652309},
      {{0, 2, 1}, 0.028184755317266, 0.962441058378833, 0.487911866790132, 0.673278286734948},
  };
}

// Joint mixture assembled from the fixtures above: means and variances come
// from the marginals, covariances from the per-regime correlations.
inline retmix::JointMixture lsb_joint_model() {
  auto marginals = lsb_marginals();
  retmix::JointMixture model;
  model.marginals = marginals;
  model.grid = retmix::CellGrid({1, 3, 2});
  for (const JointRegime& reg : lsb_joint_regimes()) {
    retmix::JointComponent jc;
    std::vector<int> tuple(reg.tuple.begin(), reg.tuple.end());
    jc.cell_id = model.grid.cell_of(tuple);
    jc.prob = reg.prob;
    jc.mean.resize(3);
    jc.cov.resize(3, 3);
    double sd[3];
    for (int a = 0; a < 3; ++a) {
      const auto& mc = marginals[a][reg.tuple[a]];
      jc.mean(a) = mc.mean;
      sd[a] = mc.std;
      jc.cov(a, a) = mc.std * mc.std;
    }
    jc.cov(0, 1) = jc.cov(1, 0) = reg.rho_ls * sd[0] * sd[1];
    jc.cov(0, 2) = jc.cov(2, 0) = reg.rho_lb * sd[0] * sd[2];
    jc.cov(1, 2) = jc.cov(2, 1) = reg.rho_sb * sd[1] * sd[2];
    model.components.push_back(std::move(jc));
  }
  return model;
}

struct ICRow {
  double ll;
  int g;
  double aic, aicc, bic;
};

// All fifteen per-size rows of the three univariate fit tables (T = 88).
inline std::vector<ICRow> ic_table_rows() {
  return {
      // large cap
      {17.9019, 1, -31.8038, -31.5181, -26.8491},
      {18.6383, 2, -27.2766, -26.2396, -14.8899},
      {20.1144, 3, -24.2289, -21.9211, -4.4102},
      {25.1860, 4, -28.3721, -24.2120, -1.1214},
      {26.7351, 5, -25.4702, -18.8035, 9.2125},
      // small cap
      {-24.7605, 1, 53.5211, 53.8067, 58.4758},
      {-23.0510, 2, 56.1021, 57.1390, 68.4888},
      {-18.3915, 3, 52.7829, 55.0907, 72.6016},
      {-15.9514, 4, 53.9028, 58.0628, 81.1535},
      {-14.4531, 5, 56.9062, 63.5729, 91.5889},
      // bonds
      {94.9092, 1, -185.8184, -185.5327, -180.8637},
      {99.4731, 2, -188.9463, -187.9092, -176.5596},
      {100.2688, 3, -184.5377, -182.2299, -164.7190},
      {102.2525, 4, -182.5049, -178.3450, -155.2542},
      {104.1529, 5, -180.3057, -173.6391, -145.6230},
  };
}

}  // namespace fixtures
