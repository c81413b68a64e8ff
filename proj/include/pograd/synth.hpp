#ifndef POGRAD_SYNTH_HPP
#define POGRAD_SYNTH_HPP

#include "pograd/dataset.hpp"
#include "pograd/hard_likelihood.hpp"
#include "pograd/rng.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace pograd {

struct SynthConfig {
  int n_items = 10;
  int d_gen = 4;
  double rho_gen = 0.5;
  double beta_gen = 1.0;
  int trace_budget_min = 10;
  int trace_budget_max = 20;
  // 0 selects ceil(trace_budget_min / 5).
  int n_test_traces = 0;
  double target_ip_cov = 1.0;
  std::uint64_t seed = 7;

  // Budgets n..2n, the usual generator settings.
  static SynthConfig for_items(int n_items, double rho_gen, std::uint64_t seed,
                               double target_ip_cov = 1.0);
  int test_count() const;
  void validate() const;  // ConfigError
};

// Standard-normal Z, U = Z L_rho^T, and the closure of the induced order.
std::pair<Embedding, PartialOrder> generate_ground_truth(const SynthConfig& cfg, Rng& rng);

// A full order of all items drawn step by step from the hard frontier model.
Trace sample_trace(const PartialOrder& po, double beta, Rng& rng);

struct Selection {
  std::vector<Trace> traces;
  std::vector<std::size_t> pool_indices;
  double ip_cov = 0.0;
};

// Coverage-driven greedy selection. While coverage is below the target, adds
// the pool trace with the largest coverage gain; for a target below 1 and
// fewer than budget_min traces, the trace whose gain is closest to an even
// share of the remaining deficit instead. A pick that would overshoot the
// target is replaced by the trace whose resulting coverage is closest to it. Once the target is met it tops up to budget_min
// with the smallest-gain traces. Ties go to the earliest pool index; never
// exceeds budget_max. Throws DataError if the pool cannot reach budget_min.
Selection select_training_traces(std::span<const Trace> pool, const PartialOrder& truth,
                                 const SynthConfig& cfg);

// Ground truth, a pool of 20 * budget_max candidates, the selected training
// traces and independently sampled test traces. The achieved coverage and
// generator settings are recorded in meta.
Dataset generate_dataset(const SynthConfig& cfg);

}  // namespace pograd

#endif  // POGRAD_SYNTH_HPP
