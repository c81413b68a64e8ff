#ifndef POGRAD_RELAXED_LIKELIHOOD_HPP
#define POGRAD_RELAXED_LIKELIHOOD_HPP

#include "pograd/frontier.hpp"
#include "pograd/hard_likelihood.hpp"
#include "pograd/soft_min.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace pograd {

struct RelaxConfig {
  double tau = 0.3;    // soft-min temperature
  double gamma = 1.0;  // sigmoid sharpness
  double beta = 1.0;   // frontier-softmax inverse temperature

  // Throws std::invalid_argument unless tau > 0, gamma > 0, beta >= 0.
  void validate() const;
};

// Stored scores are kept at most this far below one; log(1 - D) is computed
// from the margin directly and is unaffected.
inline constexpr double kPrecedenceCeilingGap = 1e-15;

/// Soft precedence matrix D(z,x) = sigmoid(gamma * M(z,x)) with M the
/// soft-min margin, together with log(1 - D) and the margins themselves.
/// Diagonal entries of D are exactly zero.
class SoftPrecedence {
 public:
  SoftPrecedence() = default;
  SoftPrecedence(const Embedding& e, const RelaxConfig& cfg);
  SoftPrecedence(const Eigen::MatrixXd& u, double tau, double gamma);

  // Wraps an arbitrary score matrix in [0,1) (e.g. a soft reachability
  // matrix). Margins are not available for such matrices.
  static SoftPrecedence from_scores(Eigen::MatrixXd scores);

  Eigen::Index size() const { return d_.rows(); }
  const Eigen::MatrixXd& matrix() const { return d_; }
  const Eigen::MatrixXd& log_complement() const { return log_complement_; }
  const Eigen::MatrixXd& margins() const { return margin_; }
  double operator()(Eigen::Index z, Eigen::Index x) const { return d_(z, x); }

  // Rows and columns restricted to `items`, in the given order.
  SoftPrecedence restricted(std::span<const int> items) const;

 private:
  Eigen::MatrixXd d_;
  Eigen::MatrixXd log_complement_;
  Eigen::MatrixXd margin_;
};

// Smooth margin soft_min_k(u_{z,k} - u_{x,k}). Throws when z == x.
double soft_margin(const Embedding& e, const RelaxConfig& cfg, int z, int x);

SoftPrecedence soft_precedence_matrix(const Embedding& e, const RelaxConfig& cfg);

// prod_{z in remaining, z != x} (1 - D(z,x)), formed in log space.
double soft_frontier_weight(const SoftPrecedence& d, std::span<const int> remaining, int x);

// (s, log(1+s)) with s = sum_{z in remaining, z != x} D(x,z).
std::pair<double, double> soft_successor_utility(const SoftPrecedence& d,
                                                 std::span<const int> remaining, int x);

// Normalizes over every remaining item, so off-frontier items keep a small
// positive probability.
double relaxed_step_prob(const SoftPrecedence& d, std::span<const int> remaining, int chosen,
                         double beta);

std::vector<double> relaxed_trace_step_logprobs(const SoftPrecedence& d, const Trace& trace,
                                                double beta);
double relaxed_trace_loglik(const SoftPrecedence& d, const Trace& trace, double beta);
double relaxed_trace_loglik(const Embedding& e, const RelaxConfig& cfg, const Trace& trace);

struct RelaxedGradient {
  double loglik = 0.0;
  Eigen::MatrixXd d_u;  // n_items x dim
  double d_beta = 0.0;
  double d_gamma = 0.0;
};

// Exact gradient of the summed relaxed log-likelihood of `traces` with
// respect to U, beta and gamma. tau carries no gradient.
RelaxedGradient relaxed_loglik_gradient(const Eigen::MatrixXd& u, const RelaxConfig& cfg,
                                        std::span<const Trace> traces);

RelaxedGradient relaxed_trace_grad(const Embedding& e, const RelaxConfig& cfg,
                                   const Trace& trace);

// Diagnostics for the sharp-limit regime: the smallest |m_U| over distinct
// pairs in `remaining`, and the approximation scale
// tau*log(d) + exp(-gamma*(delta - tau*log(d))).
double separation_margin(const Embedding& e, std::span<const int> remaining);
double approximation_scale(const Embedding& e, double tau, double gamma,
                           std::span<const int> remaining);

}  // namespace pograd

#endif  // POGRAD_RELAXED_LIKELIHOOD_HPP
