#include "pograd/poset.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <set>

using namespace pograd;
using namespace pograd::testing;

namespace {

BoolMatrix edges(int n, std::initializer_list<std::pair<int, int>> list) {
  BoolMatrix g = BoolMatrix::Constant(n, n, false);
  for (auto [a, b] : list) g(a, b) = true;
  return g;
}

// Smallest edge subset of `closure` whose closure equals `closure`, by
// exhaustive search.
BoolMatrix brute_force_minimal_generator(const BoolMatrix& closure) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < closure.rows(); ++i) {
    for (int j = 0; j < closure.cols(); ++j) {
      if (closure(i, j)) e.emplace_back(i, j);
    }
  }
  BoolMatrix best = closure;
  Eigen::Index best_count = closure.count();
  for (unsigned mask = 0; mask < (1u << e.size()); ++mask) {
    BoolMatrix g = BoolMatrix::Constant(closure.rows(), closure.cols(), false);
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (mask & (1u << k)) g(e[k].first, e[k].second) = true;
    }
    if (g.count() < best_count && transitive_closure(g) == closure) {
      best = g;
      best_count = g.count();
    }
  }
  return best;
}

}  // namespace

TEST_CASE("transitive closure examples") {
  const BoolMatrix chain = edges(3, {{0, 1}, {1, 2}});
  CHECK(transitive_closure(chain) == edges(3, {{0, 1}, {1, 2}, {0, 2}}));

  const BoolMatrix empty = BoolMatrix::Constant(4, 4, false);
  CHECK(transitive_closure(empty) == empty);

  const BoolMatrix dc = transitive_closure(diamond_cover());
  CHECK(dc(0, 3));
  CHECK(dc.count() == 5);
}

TEST_CASE("transitive reduction examples") {
  const BoolMatrix chain_closure = edges(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(transitive_reduction(chain_closure) == edges(3, {{0, 1}, {1, 2}}));

  const BoolMatrix antichain = BoolMatrix::Constant(3, 3, false);
  CHECK(transitive_reduction(antichain) == antichain);

  const BoolMatrix dc = transitive_closure(diamond_cover());
  const BoolMatrix reduced = transitive_reduction(dc);
  CHECK(reduced == brute_force_minimal_generator(dc));
  CHECK(reduced.count() == 4);
  CHECK_FALSE(reduced(0, 3));

  CHECK_THROWS_WITH_AS(transitive_reduction(edges(2, {{0, 1}, {1, 0}})),
                       doctest::Contains("not a DAG"), std::invalid_argument);
}

TEST_CASE("max_set examples and errors") {
  const PartialOrder d = diamond();
  const ItemSet rem{1, 2, 3};
  CHECK(max_set(d, rem) == ItemSet{1, 2});
  const ItemSet single{3};
  CHECK(max_set(d, single) == ItemSet{3});
  const PartialOrder anti(5);
  CHECK(max_set(anti, iota_items(5)) == iota_items(5));
  CHECK_THROWS_AS(max_set(d, ItemSet{}), std::invalid_argument);
}

TEST_CASE("is_linear_extension examples and errors") {
  const PartialOrder d = diamond();
  CHECK(is_linear_extension(d, ItemSet{0, 1, 2, 3}));
  CHECK_FALSE(is_linear_extension(d, ItemSet{3, 0, 1, 2}));
  const PartialOrder anti(4);
  for (const auto& p : all_permutations(iota_items(4))) CHECK(is_linear_extension(anti, p));
  CHECK_THROWS_AS(is_linear_extension(d, ItemSet{0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(is_linear_extension(d, ItemSet{0, 7}), std::invalid_argument);
}

TEST_CASE("enumerate_linear_extensions examples and guard") {
  const auto ext = enumerate_linear_extensions(diamond(), iota_items(4));
  CHECK(ext == std::vector<ItemSet>{{0, 1, 2, 3}, {0, 2, 1, 3}});
  CHECK(enumerate_linear_extensions(total_order(3), iota_items(3)).size() == 1);
  CHECK(enumerate_linear_extensions(PartialOrder(3), iota_items(3)).size() == 6);
  CHECK_THROWS_WITH_AS(enumerate_linear_extensions(PartialOrder(11), iota_items(11)),
                       doctest::Contains("oracle limit"), std::length_error);
}

TEST_CASE("break_cycles_and_close examples") {
  SUBCASE("two-cycle drops the lighter edge") {
    WeightedDigraph g{edges(2, {{0, 1}, {1, 0}}), Eigen::MatrixXd::Zero(2, 2)};
    g.weights(0, 1) = 0.6;
    g.weights(1, 0) = 0.2;
    const PartialOrder po = break_cycles_and_close(g);
    CHECK(po.precedes(0, 1));
    CHECK_FALSE(po.precedes(1, 0));
  }
  SUBCASE("acyclic input is only closed") {
    WeightedDigraph g{edges(3, {{0, 1}, {1, 2}}), Eigen::MatrixXd::Zero(3, 3)};
    g.weights(0, 1) = g.weights(1, 2) = 1.0;
    const PartialOrder po = break_cycles_and_close(g);
    CHECK(po.matrix() == transitive_closure(g.adjacency));
  }
  SUBCASE("three-cycle drops its lightest edge") {
    // 0 -> 1 (0.9), 1 -> 2 (0.3), 2 -> 0 (0.5): dropping 1 -> 2 leaves the
    // path 2 -> 0 -> 1, closed to {2->0, 0->1, 2->1}.
    WeightedDigraph g{edges(3, {{0, 1}, {1, 2}, {2, 0}}), Eigen::MatrixXd::Zero(3, 3)};
    g.weights(0, 1) = 0.9;
    g.weights(1, 2) = 0.3;
    g.weights(2, 0) = 0.5;
    const PartialOrder po = break_cycles_and_close(g);
    CHECK(po.matrix() == edges(3, {{2, 0}, {0, 1}, {2, 1}}));
  }
  SUBCASE("invalid weights are rejected") {
    WeightedDigraph g{edges(2, {{0, 1}}), Eigen::MatrixXd::Zero(2, 2)};
    g.weights(1, 0) = 0.5;
    CHECK_THROWS_AS(break_cycles_and_close(g), std::invalid_argument);
  }
}

TEST_CASE("PartialOrder validation") {
  CHECK_THROWS_AS(PartialOrder::from_relation(edges(2, {{0, 0}})), std::invalid_argument);
  CHECK_THROWS_AS(PartialOrder::from_relation(edges(2, {{0, 1}, {1, 0}})), std::invalid_argument);
  CHECK_THROWS_AS(PartialOrder::from_closure(edges(3, {{0, 1}, {1, 2}})), std::invalid_argument);
  CHECK_FALSE(PartialOrder::from_relation(edges(3, {{0, 1}, {1, 2}})).is_closed());
}

TEST_CASE("property: closure is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> size(1, 12);
    const BoolMatrix g = random_digraph(size(rng), 0.2, rng);
    const BoolMatrix c = transitive_closure(g);
    CHECK(transitive_closure(c) == c);
    CHECK(((c.array() || g.array()) == c.array()).all());
  }
}

TEST_CASE("property: reduction and closure are inverse on DAG closures") {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> size(1, 12);
    const BoolMatrix c = transitive_closure(random_dag(size(rng), 0.35, rng));
    CHECK(transitive_closure(transitive_reduction(c)) == c);
  }
}

TEST_CASE("property: frontiers are nonempty") {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 10)(rng);
    const PartialOrder po = random_poset(n, 0.5, rng);
    ItemSet rem;
    std::bernoulli_distribution keep(0.6);
    for (int x = 0; x < n; ++x) {
      if (keep(rng)) rem.push_back(x);
    }
    if (rem.empty()) rem.push_back(0);
    CHECK_FALSE(max_set(po, rem).empty());
  }
}

TEST_CASE("property: enumeration agrees with permutation filtering") {
  Rng rng(14);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 9)(rng);
    const PartialOrder po = random_poset(n, 0.3, rng);
    ItemSet cs;
    for (int x = 0; x < n && cs.size() < 7; ++x) {
      if (std::bernoulli_distribution(0.8)(rng)) cs.push_back(x);
    }
    std::set<ItemSet> expected;
    for (const auto& p : all_permutations(cs)) {
      if (is_linear_extension(po, p)) expected.insert(p);
    }
    const auto got = enumerate_linear_extensions(po, cs);
    CHECK(std::set<ItemSet>(got.begin(), got.end()) == expected);
    CHECK(got.size() == expected.size());
  }
}

TEST_CASE("property: cycle breaking yields a closed DAG") {
  Rng rng(15);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    WeightedDigraph g{random_digraph(n, trial % 2 ? 0.7 : 0.25, rng), Eigen::MatrixXd::Zero(n, n)};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (g.adjacency(i, j)) g.weights(i, j) = unif(rng);
      }
    }
    const PartialOrder po = break_cycles_and_close(g);
    CHECK(is_acyclic(po.matrix()));
    CHECK(is_transitive(po.matrix()));
  }
}
