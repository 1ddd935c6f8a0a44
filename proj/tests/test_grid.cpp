#include <doctest.h>

#include <random>

#include "retmix/em.hpp"
#include "retmix/grid.hpp"
#include "retmix/rng.hpp"

using namespace retmix;

TEST_SUITE("grid") {

TEST_CASE("build_cell_grid enumeration matches the reference layout") {
  CellGrid g = build_cell_grid({2, 3, 2});
  CHECK(g.num_cells() == 12);
  auto t11 = g.tuple_of(11);
  CHECK(t11 == std::vector<int>{1, 2, 1});
  auto t0 = g.tuple_of(0);
  CHECK(t0 == std::vector<int>{0, 0, 0});

  CellGrid single = build_cell_grid({1});
  CHECK(single.num_cells() == 1);
  CHECK(single.tuple_of(0) == std::vector<int>{0});

  // Last asset cycles fastest.
  CellGrid g2 = build_cell_grid({1, 3, 2});
  std::vector<std::vector<int>> expect{{0, 0, 0}, {0, 0, 1}, {0, 1, 0},
                                       {0, 1, 1}, {0, 2, 0}, {0, 2, 1}};
  for (int c = 0; c < 6; ++c) CHECK(g2.tuple_of(c) == expect[c]);
}

TEST_CASE("grid bijection roundtrip on randomized shapes") {
  auto rng = make_stream(88);
  std::uniform_int_distribution<int> nd(1, 4), gd(1, 5);
  for (int trial = 0; trial < 20; ++trial) {
    int n = nd(rng);
    std::vector<int> comps(n);
    for (auto& c : comps) c = gd(rng);
    CellGrid g = build_cell_grid(comps);
    for (int c = 0; c < g.num_cells(); ++c) {
      auto tuple = g.tuple_of(c);
      CHECK(g.cell_of(tuple) == c);
      auto found = cell_lookup(g, tuple);
      REQUIRE(found.has_value());
      CHECK(*found == c);
    }
  }
}

TEST_CASE("cell_lookup rejects out-of-range tuples") {
  CellGrid g = build_cell_grid({2, 3});
  std::vector<int> bad{2, 0};
  CHECK(!cell_lookup(g, bad).has_value());
  std::vector<int> neg{0, -1};
  CHECK(!cell_lookup(g, neg).has_value());
  std::vector<int> wrong_len{0};
  CHECK(!cell_lookup(g, wrong_len).has_value());
}

TEST_CASE("assign_component follows the posterior argmax") {
  UnivariateMixture one({{1.0, 0.4, 1.0}});
  CHECK(assign_component(2.0, one) == 0);

  UnivariateMixture mix({{0.4, -3.0, 0.5}, {0.3, 0.0, 0.5}, {0.3, 3.0, 0.5}});
  CHECK(assign_component(-3.0, mix) == 0);
  CHECK(assign_component(3.0, mix) == 2);
  for (double x : {-4.0, -1.2, 0.3, 1.4, 2.8}) {
    auto post = posterior_probs(x, mix);
    int arg = 0;
    for (int i = 1; i < 3; ++i)
      if (post[i] > post[arg]) arg = i;
    CHECK(assign_component(x, mix) == arg);
  }

  // Exact posterior tie resolves to the lowest index.
  UnivariateMixture sym({{0.5, -1.0, 0.7}, {0.5, 1.0, 0.7}});
  CHECK(assign_component(0.0, sym) == 0);
}

TEST_CASE("tabulate counts and marginal consistency") {
  std::vector<UnivariateMixture> marginals{
      UnivariateMixture({{0.5, 0.0, 0.4}, {0.5, 4.0, 0.4}}),
      UnivariateMixture({{0.5, -2.0, 0.4}, {0.5, 2.0, 0.4}})};

  ReturnsPanel one_row(1, 2);
  one_row << 0.1, 2.2;
  AssignmentTable t1 = tabulate(one_row, marginals);
  int total = 0;
  for (int c : t1.counts) total += c;
  CHECK(total == 1);
  CHECK(t1.counts[t1.cell_id[0]] == 1);

  auto rng = make_stream(19);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int T = 200;
  ReturnsPanel panel(T, 2);
  for (int t = 0; t < T; ++t) {
    panel(t, 0) = (t % 2 ? 0.0 : 4.0) + 0.4 * gauss(rng);
    panel(t, 1) = (t % 3 ? -2.0 : 2.0) + 0.4 * gauss(rng);
  }
  AssignmentTable table = tabulate(panel, marginals);
  int sum = 0;
  double psum = 0.0;
  for (size_t c = 0; c < table.counts.size(); ++c) {
    sum += table.counts[c];
    psum += table.probs[c];
  }
  CHECK(sum == T);
  CHECK(psum == doctest::Approx(1.0).epsilon(1e-12));

  // Summing cell counts over cells that contain component i of asset j must
  // equal the per-asset assignment counts exactly.
  CellGrid grid({2, 2});
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i) {
      int via_cells = 0;
      for (int c = 0; c < grid.num_cells(); ++c)
        if (grid.indicator(c, a, i)) via_cells += table.counts[c];
      int direct = 0;
      for (int t = 0; t < T; ++t)
        if (table.per_asset_component(t, a) == i) ++direct;
      CHECK(via_cells == direct);
    }
}

}  // TEST_SUITE
