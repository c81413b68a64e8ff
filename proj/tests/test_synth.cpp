#include "pograd/errors.hpp"
#include "pograd/metrics.hpp"
#include "pograd/synth.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace pograd;
using namespace pograd::testing;

TEST_CASE("config validation") {
  SynthConfig c;
  CHECK_NOTHROW(c.validate());
  c.target_ip_cov = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SynthConfig{};
  c.trace_budget_max = c.trace_budget_min - 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SynthConfig{};
  c.rho_gen = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(SynthConfig::for_items(10, 0.5, 7).test_count() == 2);
  CHECK(SynthConfig::for_items(11, 0.5, 7).test_count() == 3);
}

TEST_CASE("one generator dimension gives a complete order") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SynthConfig c = SynthConfig::for_items(8, 0.5, seed);
    c.d_gen = 1;
    Rng rng(seed);
    const auto [e, po] = generate_ground_truth(c, rng);
    CHECK(po.edge_count() == 8 * 7 / 2);
    CHECK(po == induced_order(e));
  }
}

TEST_CASE("higher rho gives denser truths on average") {
  double lo = 0.0, hi = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng a(seed), b(seed);
    lo += static_cast<double>(generate_ground_truth(SynthConfig::for_items(10, 0.1, seed), a).second.edge_count());
    hi += static_cast<double>(generate_ground_truth(SynthConfig::for_items(10, 0.9, seed), b).second.edge_count());
  }
  CHECK(hi > lo);
}

TEST_CASE("generated truths are valid closures") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto [e, po] = generate_ground_truth(SynthConfig::for_items(7, 0.5, seed), rng);
    CHECK(is_transitive(po.matrix()));
    CHECK(is_acyclic(po.matrix()));
    CHECK(po.is_closed());
  }
}

TEST_CASE("sampling a total order returns its unique extension") {
  Rng rng(2);
  const PartialOrder po = total_order(6);
  const ItemSet only = enumerate_linear_extensions(po, iota_items(6)).front();
  for (int rep = 0; rep < 100; ++rep) CHECK(sample_trace(po, 1.3, rng).order == only);
}

TEST_CASE("diamond at beta zero splits its extensions evenly") {
  Rng rng(5);
  const PartialOrder d = diamond();
  const int n = 10000;
  int first = 0;
  for (int rep = 0; rep < n; ++rep) {
    const Trace t = sample_trace(d, 0.0, rng);
    REQUIRE(is_linear_extension(d, t.order));
    if (t.order[1] == 1) ++first;
  }
  const double freq = static_cast<double>(first) / n;
  CHECK(std::abs(freq - 0.5) <= 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("sampled traces follow the hard step model") {
  // Item 0 above 1 and 2, so at the first step the frontier is {0, 3}; with
  // beta = 1 the weights are 1 + 2 and 1 + 0.
  BoolMatrix rel = BoolMatrix::Constant(4, 4, false);
  rel(0, 1) = rel(0, 2) = true;
  const PartialOrder po = PartialOrder::from_closure(rel);
  Rng rng(17);
  const int n = 20000;
  int zero_first = 0;
  for (int rep = 0; rep < n; ++rep) zero_first += sample_trace(po, 1.0, rng).order.front() == 0;
  const double p = 0.75;
  CHECK(std::abs(static_cast<double>(zero_first) / n - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("both diamond extensions reach full coverage") {
  const PartialOrder d = diamond();
  const std::vector<Trace> pool{Trace::of({0, 1, 2, 3}), Trace::of({0, 1, 2, 3}), Trace::of({0, 2, 1, 3})};
  SynthConfig c;
  c.n_items = 4;
  c.trace_budget_min = 2;
  c.trace_budget_max = 2;
  const Selection s = select_training_traces(pool, d, c);
  CHECK(s.ip_cov == 1.0);
  REQUIRE(s.traces.size() == 2);
  CHECK(s.pool_indices == std::vector<std::size_t>{0, 2});
  CHECK(ip_cov(s.traces, d) == 1.0);
}

TEST_CASE("an undersized pool is an error") {
  const std::vector<Trace> pool{Trace::of({0, 1, 2, 3})};
  SynthConfig c;
  c.n_items = 4;
  c.trace_budget_min = 2;
  c.trace_budget_max = 3;
  CHECK_THROWS_AS(select_training_traces(pool, diamond(), c), DataError);
}

TEST_CASE("achieved coverage is nondecreasing in the budget") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng truth_rng(seed), pool_rng(seed + 1000);
    SynthConfig c = SynthConfig::for_items(10, 0.3, seed);
    const PartialOrder truth = generate_ground_truth(c, truth_rng).second;
    std::vector<Trace> pool;
    for (int k = 0; k < 200; ++k) pool.push_back(sample_trace(truth, 1.0, pool_rng));
    double last = 0.0;
    for (int budget = 1; budget <= 12; ++budget) {
      c.trace_budget_min = c.trace_budget_max = budget;
      const Selection s = select_training_traces(pool, truth, c);
      CHECK(s.ip_cov >= last);
      CHECK(s.ip_cov == ip_cov(s.traces, truth));
      last = s.ip_cov;
    }
  }
}

TEST_CASE("selection never exceeds the budget and reports its coverage") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = generate_dataset(SynthConfig::for_items(10, 0.5, seed));
    const auto train = ds.train();
    CHECK(train.size() >= 10);
    CHECK(train.size() <= 20);
    CHECK(ds.test().size() == 2);
    CHECK(ds.meta["achieved_ip_cov"].get<double>() == ip_cov(train, *ds.ground_truth));
  }
}

TEST_CASE("low-coverage target lands near 0.7 on thirty items") {
  int inside = 0;
  const std::vector<std::uint64_t> seeds{7, 11, 19, 23, 29};
  for (std::uint64_t seed : seeds) {
    const Dataset ds = generate_dataset(SynthConfig::for_items(30, 0.5, seed, 0.7));
    const double c = ip_cov(ds.train(), *ds.ground_truth);
    MESSAGE("seed " << seed << " coverage " << c << " traces " << ds.train().size());
    CHECK(c >= 0.6);
    CHECK(c <= 0.8);
    inside += c >= 0.6 && c <= 0.8;
  }
  CHECK(inside == static_cast<int>(seeds.size()));
}

TEST_CASE("generated datasets are deterministic") {
  const SynthConfig c = SynthConfig::for_items(12, 0.9, 19);
  CHECK(dataset_to_json(generate_dataset(c)).dump() == dataset_to_json(generate_dataset(c)).dump());
  const SynthConfig other = SynthConfig::for_items(12, 0.9, 20);
  CHECK(dataset_to_json(generate_dataset(c)).dump() != dataset_to_json(generate_dataset(other)).dump());
}

TEST_CASE("every emitted trace is a linear extension of the truth") {
  for (int n : {5, 10, 20}) {
    for (std::uint64_t seed : {7u, 11u, 19u}) {
      const Dataset ds = generate_dataset(SynthConfig::for_items(n, 0.9, seed));
      for (const Trace& t : ds.traces) CHECK(is_linear_extension(*ds.ground_truth, t.order));
    }
  }
}
