#ifndef POGRAD_FRONTIER_HPP
#define POGRAD_FRONTIER_HPP

#include "pograd/hard_likelihood.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace pograd {

// Soft frontier-softmax likelihood over an arbitrary matrix of precedence
// scores P (P(z,x) in [0,1), diagonal ignored). The score of a remaining item
// x is
//   a(x) = sum_{z != x} log(1 - P(z,x)) + beta * log(1 + sum_{z != x} P(x,z))
// and a step normalizes exp(a) over all remaining items. Callers pass
// log(1 - P) separately so it can be formed without cancellation.

// Reference evaluation of one step by direct summation over `remaining`.
double frontier_step_logprob(const Eigen::MatrixXd& prec, const Eigen::MatrixXd& log_complement,
                             std::span<const int> remaining, int chosen, double beta);

// Per-step log-probabilities, maintaining log-frontier weights and successor
// sums incrementally (O(T^2) per trace).
std::vector<double> frontier_step_logprobs(const Eigen::MatrixXd& prec,
                                           const Eigen::MatrixXd& log_complement,
                                           const Trace& trace, double beta);

double frontier_trace_loglik(const Eigen::MatrixXd& prec, const Eigen::MatrixXd& log_complement,
                             const Trace& trace, double beta);

// Gradient accumulator: partial derivatives of a summed log-likelihood with
// respect to P, log(1 - P) (treated as independent inputs) and beta.
struct FrontierGradient {
  Eigen::MatrixXd d_prec;
  Eigen::MatrixXd d_log_complement;
  double d_beta = 0.0;

  explicit FrontierGradient(Eigen::Index n)
      : d_prec(Eigen::MatrixXd::Zero(n, n)), d_log_complement(Eigen::MatrixXd::Zero(n, n)) {}
};

// Adds the trace's gradient to `grad` and returns its log-likelihood. O(T^2).
double accumulate_frontier_gradient(const Eigen::MatrixXd& prec,
                                    const Eigen::MatrixXd& log_complement, const Trace& trace,
                                    double beta, FrontierGradient& grad);

}  // namespace pograd

#endif  // POGRAD_FRONTIER_HPP
