#include "pograd/metrics.hpp"

#include "pograd/relaxed_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pograd {

PrecisionRecall prf_from_counts(long tp, long fp, long fn) {
  PrecisionRecall r;
  r.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double s = r.precision + r.recall;
  r.f1 = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

PrecisionRecall closure_prf(const PartialOrder& est, const PartialOrder& truth) {
  if (est.size() != truth.size()) throw std::invalid_argument("closure_prf: item universes differ");
  const auto& e = est.matrix().array();
  const auto& t = truth.matrix().array();
  const long tp = (e && t).count();
  const long fp = (e && !t).count();
  const long fn = (!e && t).count();
  return prf_from_counts(tp, fp, fn);
}

double mae_to_reference(const ClosureProbabilities& a, const ClosureProbabilities& ref) {
  const Eigen::Index n = a.n_items();
  if (n != ref.n_items()) throw std::invalid_argument("mae_to_reference: item counts differ");
  if (n < 2) return 0.0;
  Eigen::MatrixXd diff = (a.p_hat - ref.p_hat).cwiseAbs();
  diff.diagonal().setZero();
  return diff.sum() / static_cast<double>(n * (n - 1));
}

namespace {

// Per-draw step log-probabilities for each trace: result[i] is T_i x S.
std::vector<Eigen::MatrixXd> step_logprobs(const DrawSet& draws, std::span<const Trace> traces,
                                           Evaluator evaluator, double tau) {
  if (draws.empty()) throw std::invalid_argument("predictive scores need at least one draw");
  if (evaluator == Evaluator::kRelaxed && !(tau > 0.0)) {
    throw std::invalid_argument("relaxed evaluator needs tau > 0");
  }
  const Eigen::Index s_count = static_cast<Eigen::Index>(draws.size());
  std::vector<Eigen::MatrixXd> out;
  for (const Trace& t : traces) {
    t.validate(draws.n_items());
    out.emplace_back(static_cast<Eigen::Index>(t.length()), s_count);
  }
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const ModelParams& p = draws.draws[static_cast<std::size_t>(s)].params;
    const Embedding e = to_embedding(p);
    if (evaluator == Evaluator::kHard) {
      const PartialOrder po = induced_order(e);
      for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto lp = hard_trace_step_logprobs(po, traces[i], p.beta);
        for (std::size_t k = 0; k < lp.size(); ++k) {
          out[i](static_cast<Eigen::Index>(k), s) = std::max(lp[k], kLogProbFloor);
        }
      }
    } else {
      const SoftPrecedence sp(e.matrix(), tau, p.gamma);
      for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto lp = relaxed_trace_step_logprobs(sp, traces[i], p.beta);
        for (std::size_t k = 0; k < lp.size(); ++k) out[i](static_cast<Eigen::Index>(k), s) = lp[k];
      }
    }
  }
  return out;
}

// Per-draw trace log-likelihood from its steps, floored like a single step.
Eigen::RowVectorXd trace_totals(const Eigen::MatrixXd& steps, Evaluator evaluator) {
  Eigen::RowVectorXd tot = steps.colwise().sum();
  if (evaluator == Evaluator::kHard) tot = tot.cwiseMax(kLogProbFloor);
  return tot;
}

}  // namespace

Eigen::MatrixXd pointwise_loglik(const DrawSet& draws, std::span<const Trace> traces,
                                 Evaluator evaluator, double tau) {
  const auto steps = step_logprobs(draws, traces, evaluator, tau);
  Eigen::MatrixXd ll(static_cast<Eigen::Index>(traces.size()), static_cast<Eigen::Index>(draws.size()));
  for (std::size_t i = 0; i < steps.size(); ++i) {
    ll.row(static_cast<Eigen::Index>(i)) = trace_totals(steps[i], evaluator);
  }
  return ll;
}

PredictiveScores predictive_scores(const DrawSet& draws, std::span<const Trace> traces,
                                   Evaluator evaluator, double tau) {
  if (traces.empty()) throw std::invalid_argument("predictive scores need at least one trace");
  const auto steps = step_logprobs(draws, traces, evaluator, tau);
  PredictiveScores out;
  double trace_sum = 0.0, step_sum = 0.0;
  long step_count = 0;
  for (const Eigen::MatrixXd& m : steps) {
    const Eigen::RowVectorXd tot = trace_totals(m, evaluator);
    if (evaluator == Evaluator::kHard && (tot.array() <= kLogProbFloor).all()) ++out.infeasible_traces;
    trace_sum -= log_mean_exp(tot.transpose());
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
      step_sum -= log_mean_exp(m.row(k).transpose());
      ++step_count;
    }
  }
  out.trace_nll = trace_sum / static_cast<double>(traces.size());
  out.step_nll = step_count > 0 ? step_sum / static_cast<double>(step_count) : 0.0;
  return out;
}

WaicResult waic_from_pointwise(const Eigen::MatrixXd& loglik) {
  WaicResult r;
  const Eigen::Index s = loglik.cols();
  if (s == 0) throw std::invalid_argument("waic: no draws");
  for (Eigen::Index i = 0; i < loglik.rows(); ++i) {
    const Eigen::VectorXd row = loglik.row(i).transpose();
    r.lppd += log_mean_exp(row);
    if (s > 1) r.p_waic += (row.array() - row.mean()).square().sum() / static_cast<double>(s - 1);
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  return r;
}

WaicResult waic(const DrawSet& draws, std::span<const Trace> traces, Evaluator evaluator,
                double tau) {
  return waic_from_pointwise(pointwise_loglik(draws, traces, evaluator, tau));
}

double ip_cov(std::span<const Trace> traces, const PartialOrder& truth) {
  const Eigen::Index n = truth.size();
  // seen(a, b): a observed before b in some trace.
  BoolMatrix seen = BoolMatrix::Constant(n, n, false);
  for (const Trace& t : traces) {
    t.validate(n);
    for (std::size_t i = 0; i < t.order.size(); ++i) {
      for (std::size_t j = i + 1; j < t.order.size(); ++j) seen(t.order[i], t.order[j]) = true;
    }
  }
  long pairs = 0, covered = 0;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      if (truth.comparable(static_cast<int>(a), static_cast<int>(b))) continue;
      ++pairs;
      covered += seen(a, b) && seen(b, a);
    }
  }
  return pairs == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(pairs);
}

}  // namespace pograd
