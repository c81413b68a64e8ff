#include "pograd/synth.hpp"

#include "pograd/errors.hpp"
#include "pograd/metrics.hpp"
#include "pograd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pograd {

SynthConfig SynthConfig::for_items(int n_items, double rho_gen, std::uint64_t seed,
                                   double target_ip_cov) {
  SynthConfig c;
  c.n_items = n_items;
  c.rho_gen = rho_gen;
  c.seed = seed;
  c.trace_budget_min = n_items;
  c.trace_budget_max = 2 * n_items;
  c.target_ip_cov = target_ip_cov;
  return c;
}

int SynthConfig::test_count() const {
  return n_test_traces > 0 ? n_test_traces : (trace_budget_min + 4) / 5;
}

void SynthConfig::validate() const {
  if (n_items < 1) throw ConfigError("synth: n_items must be >= 1");
  if (d_gen < 1) throw ConfigError("synth: d_gen must be >= 1");
  if (!(rho_gen > 0.0 && rho_gen < 1.0)) throw ConfigError("synth: rho_gen must lie in (0,1)");
  if (!(beta_gen >= 0.0)) throw ConfigError("synth: beta_gen must be >= 0");
  if (trace_budget_min < 1 || trace_budget_max < trace_budget_min) {
    throw ConfigError("synth: need 1 <= trace_budget_min <= trace_budget_max");
  }
  if (n_test_traces < 0) throw ConfigError("synth: n_test_traces must be >= 0");
  if (!(target_ip_cov > 0.0 && target_ip_cov <= 1.0)) {
    throw ConfigError("synth: target_ip_cov must lie in (0,1]");
  }
}

std::pair<Embedding, PartialOrder> generate_ground_truth(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelParams p;
  p.z = standard_normal_matrix(cfg.n_items, cfg.d_gen, rng);
  p.rho = cfg.rho_gen;
  Embedding e = to_embedding(p);
  PartialOrder po = induced_order(e);
  return {std::move(e), std::move(po)};
}

Trace sample_trace(const PartialOrder& po, double beta, Rng& rng) {
  ItemSet remaining(static_cast<std::size_t>(po.size()));
  std::iota(remaining.begin(), remaining.end(), 0);
  ItemSet order;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (!remaining.empty()) {
    const ItemSet front = max_set(po, remaining);
    std::vector<double> w(front.size());
    for (std::size_t k = 0; k < front.size(); ++k) {
      w[k] = beta * std::log1p(static_cast<double>(hard_successor_count(po, remaining, front[k])));
    }
    const double hi = *std::max_element(w.begin(), w.end());
    double total = 0.0;
    for (double& v : w) total += (v = std::exp(v - hi));
    double u = unif(rng) * total;
    std::size_t pick = front.size() - 1;
    for (std::size_t k = 0; k < front.size(); ++k) {
      if ((u -= w[k]) < 0.0) {
        pick = k;
        break;
      }
    }
    order.push_back(front[pick]);
    remaining.erase(std::find(remaining.begin(), remaining.end(), front[pick]));
  }
  return Trace::of(std::move(order));
}

Selection select_training_traces(std::span<const Trace> pool, const PartialOrder& truth,
                                 const SynthConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = truth.size();
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (!truth.comparable(a, b)) pairs.emplace_back(a, b);
    }
  }
  // forward[t][k]: pool trace t places pairs[k].first first. Pairs missing
  // from a trace's choice set are marked absent.
  const std::size_t np = pairs.size();
  std::vector<std::vector<signed char>> orient(pool.size(), std::vector<signed char>(np, 0));
  for (std::size_t t = 0; t < pool.size(); ++t) {
    pool[t].validate(n);
    std::vector<int> pos(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < pool[t].order.size(); ++i) pos[pool[t].order[i]] = static_cast<int>(i);
    for (std::size_t k = 0; k < np; ++k) {
      const int pa = pos[pairs[k].first], pb = pos[pairs[k].second];
      if (pa >= 0 && pb >= 0) orient[t][k] = pa < pb ? 1 : -1;
    }
  }

  std::vector<char> seen_fwd(np, 0), seen_bwd(np, 0), used(pool.size(), 0);
  long covered = 0;
  auto coverage = [&](long c) { return np == 0 ? 1.0 : static_cast<double>(c) / static_cast<double>(np); };
  auto gain = [&](std::size_t t) {
    long g = 0;
    for (std::size_t k = 0; k < np; ++k) {
      if (seen_fwd[k] && seen_bwd[k]) continue;
      if ((orient[t][k] == 1 && !seen_fwd[k] && seen_bwd[k]) ||
          (orient[t][k] == -1 && !seen_bwd[k] && seen_fwd[k])) {
        ++g;
      }
    }
    return g;
  };

  Selection sel;
  auto take = [&](std::size_t t) {
    used[t] = 1;
    for (std::size_t k = 0; k < np; ++k) {
      if (orient[t][k] == 1) seen_fwd[k] = 1;
      if (orient[t][k] == -1) seen_bwd[k] = 1;
    }
    covered = 0;
    for (std::size_t k = 0; k < np; ++k) covered += seen_fwd[k] && seen_bwd[k];
    sel.traces.push_back(pool[t]);
    sel.pool_indices.push_back(t);
  };

  const double target = cfg.target_ip_cov;
  const auto budget_max = static_cast<std::size_t>(cfg.trace_budget_max);
  const auto budget_min = static_cast<std::size_t>(cfg.trace_budget_min);
  while (sel.traces.size() < budget_max) {
    const bool below = coverage(covered) < target;
    if (!below && sel.traces.size() >= budget_min) break;
    // Below a partial target, aim each pick at an even share of the
    // remaining deficit so the target is reached near budget_min rather than
    // early and then overshot by the top-up.
    const bool paced = below && target < 1.0 && sel.traces.size() < budget_min;
    const double pace = paced ? (target * static_cast<double>(np) - static_cast<double>(covered)) /
                                    static_cast<double>(budget_min - sel.traces.size())
                              : 0.0;
    std::size_t best = pool.size();
    long best_gain = 0;
    for (std::size_t t = 0; t < pool.size(); ++t) {
      if (used[t]) continue;
      const long g = gain(t);
      bool better = best == pool.size();
      if (!better && paced) {
        better = std::abs(static_cast<double>(g) - pace) < std::abs(static_cast<double>(best_gain) - pace);
      } else if (!better) {
        better = below ? g > best_gain : g < best_gain;
      }
      if (better) {
        best = t;
        best_gain = g;
      }
    }
    if (best == pool.size()) break;
    if (below && coverage(covered + best_gain) > target) {
      // Overshooting: take the trace landing closest to the target instead.
      double closest = std::abs(coverage(covered + best_gain) - target);
      for (std::size_t t = 0; t < pool.size(); ++t) {
        if (used[t]) continue;
        const double dist = std::abs(coverage(covered + gain(t)) - target);
        if (dist < closest) {
          closest = dist;
          best = t;
        }
      }
    }
    take(best);
  }
  if (sel.traces.size() < budget_min) {
    throw DataError("trace pool exhausted after " + std::to_string(sel.traces.size()) +
                    " traces, below the minimum budget of " + std::to_string(budget_min));
  }
  sel.ip_cov = coverage(covered);
  return sel;
}

Dataset generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  Rng truth_rng = substream(cfg.seed, 0);
  const auto [embedding, truth] = generate_ground_truth(cfg, truth_rng);

  Rng pool_rng = substream(cfg.seed, 1);
  std::vector<Trace> pool;
  const int pool_size = 20 * cfg.trace_budget_max;
  for (int k = 0; k < pool_size; ++k) pool.push_back(sample_trace(truth, cfg.beta_gen, pool_rng));
  const Selection sel = select_training_traces(pool, truth, cfg);

  Dataset ds;
  ds.items = Dataset::default_item_names(cfg.n_items);
  for (const Trace& t : sel.traces) ds.add(t, Split::kTrain);
  Rng test_rng = substream(cfg.seed, 2);
  for (int k = 0; k < cfg.test_count(); ++k) ds.add(sample_trace(truth, cfg.beta_gen, test_rng), Split::kTest);
  ds.ground_truth = truth;
  ds.meta["generator"] = {{"n_items", cfg.n_items},
                          {"d_gen", cfg.d_gen},
                          {"rho_gen", cfg.rho_gen},
                          {"beta_gen", cfg.beta_gen},
                          {"trace_budget_min", cfg.trace_budget_min},
                          {"trace_budget_max", cfg.trace_budget_max},
                          {"target_ip_cov", cfg.target_ip_cov},
                          {"seed", cfg.seed}};
  ds.meta["achieved_ip_cov"] = sel.ip_cov;
  ds.meta["embedding"] = [&] {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index x = 0; x < embedding.n_items(); ++x) {
      std::vector<double> r(embedding.row(x).begin(), embedding.row(x).end());
      rows.push_back(r);
    }
    return rows;
  }();
  return ds;
}

}  // namespace pograd
