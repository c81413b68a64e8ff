#ifndef POGRAD_METRICS_HPP
#define POGRAD_METRICS_HPP

#include "pograd/decode.hpp"
#include "pograd/hard_likelihood.hpp"
#include "pograd/samplers.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>

namespace pograd {

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// An empty estimate scores precision 1; recall 1 only if the truth is empty
// too. F1 is 0 when precision + recall is 0.
PrecisionRecall prf_from_counts(long tp, long fp, long fn);
// Directed edge sets of two closures over the same items.
PrecisionRecall closure_prf(const PartialOrder& est, const PartialOrder& truth);

// Mean absolute off-diagonal difference.
double mae_to_reference(const ClosureProbabilities& a, const ClosureProbabilities& ref);

// Which likelihood scores held-out traces: the hard frontier model on each
// draw's induced order, or the relaxation at the draw's (beta, gamma).
enum class Evaluator { kHard, kRelaxed };

// Per-draw log-probabilities are floored here under the hard evaluator so
// that infeasible traces keep aggregates finite.
inline constexpr double kLogProbFloor = -745.0;

// traces x draws matrix of per-trace log-likelihoods.
Eigen::MatrixXd pointwise_loglik(const DrawSet& draws, std::span<const Trace> traces,
                                 Evaluator evaluator, double tau);

struct PredictiveScores {
  double trace_nll = 0.0;
  double step_nll = 0.0;
  // Traces with zero likelihood under every draw (hard evaluator only).
  int infeasible_traces = 0;
};

// Posterior-predictive trace NLL (averaged per trace) and next-item NLL
// (averaged over every step, the first scored from the empty prefix), with
// the mean over draws taken inside the log.
PredictiveScores predictive_scores(const DrawSet& draws, std::span<const Trace> traces,
                                   Evaluator evaluator, double tau);

struct WaicResult {
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
};

// From a traces x draws log-likelihood matrix; one pointwise term per trace.
// p_waic uses the sample variance and is zero for a single draw.
WaicResult waic_from_pointwise(const Eigen::MatrixXd& loglik);
WaicResult waic(const DrawSet& draws, std::span<const Trace> traces, Evaluator evaluator,
                double tau);

// Share of the truth's incomparable pairs observed in both orders; 1 when
// the truth has no incomparable pair.
double ip_cov(std::span<const Trace> traces, const PartialOrder& truth);

// Fields needing ground truth, a reference posterior, held-out traces or
// draws are empty when those are unavailable.
struct MetricsReport {
  std::optional<PrecisionRecall> prf;
  std::optional<double> mae_to_reference;
  std::optional<double> trace_nll;
  std::optional<double> step_nll;
  int infeasible_traces = 0;
  std::optional<WaicResult> waic;
  std::optional<double> ip_cov;
  double runtime_seconds = 0.0;
};

}  // namespace pograd

#endif  // POGRAD_METRICS_HPP
