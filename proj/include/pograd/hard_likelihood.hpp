#ifndef POGRAD_HARD_LIKELIHOOD_HPP
#define POGRAD_HARD_LIKELIHOOD_HPP

#include "pograd/poset.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace pograd {

// log(0): an observed order with no support under the model. Propagates
// additively.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();
inline bool is_log_zero(double lp) { return lp == kLogZero; }

/// Item embedding: row x is the latent vector u_x of item x.
class Embedding {
 public:
  Embedding() = default;
  // Throws std::invalid_argument for zero columns or non-finite entries.
  explicit Embedding(Eigen::MatrixXd u);

  Eigen::Index n_items() const { return u_.rows(); }
  Eigen::Index dim() const { return u_.cols(); }
  const Eigen::MatrixXd& matrix() const { return u_; }
  auto row(Eigen::Index x) const { return u_.row(x); }

 private:
  Eigen::MatrixXd u_;
};

/// One observed ordering of a choice set.
struct Trace {
  ItemSet choice_set;
  ItemSet order;

  static Trace of(ItemSet order) {
    ItemSet cs = order;
    return Trace{std::move(cs), std::move(order)};
  }
  std::size_t length() const { return order.size(); }
  // Throws std::invalid_argument unless order is a permutation of choice_set
  // inside 0..n_items-1.
  void validate(Eigen::Index n_items) const;
};

// Pairwise margin min_k (u_{z,k} - u_{x,k}) between two rows.
template <typename DerivedZ, typename DerivedX>
typename DerivedZ::Scalar pairwise_margin(const Eigen::MatrixBase<DerivedZ>& uz,
                                          const Eigen::MatrixBase<DerivedX>& ux) {
  return (uz - ux).minCoeff();
}

// Throws std::invalid_argument when z == x.
double hard_margin(const Embedding& e, int z, int x);
bool hard_precedes(const Embedding& e, int z, int x);

// Product order induced by the embedding (strict inequality in every
// coordinate). Transitive by construction.
PartialOrder induced_order(const Embedding& e);
PartialOrder induced_order(const Eigen::MatrixXd& u);

// Number of remaining items that x must precede. Throws when x is not in
// remaining.
int hard_successor_count(const PartialOrder& po, std::span<const int> remaining, int x);

// Frontier-softmax probability of choosing `chosen` next from `remaining`:
// zero off the frontier, softmax of beta*log(1+successors) on it.
double hard_step_prob(const PartialOrder& po, std::span<const int> remaining, int chosen,
                      double beta);

// Per-step log-probabilities of a trace under the hard model, evaluated with
// incrementally maintained successor and predecessor counts. Once a step is
// infeasible every remaining entry is kLogZero.
std::vector<double> hard_trace_step_logprobs(const PartialOrder& po, const Trace& trace,
                                             double beta);

// Sum of the step log-probabilities; kLogZero when the order is not a linear
// extension of the suborder.
double hard_trace_loglik(const PartialOrder& po, const Trace& trace, double beta);

}  // namespace pograd

#endif  // POGRAD_HARD_LIKELIHOOD_HPP
