#ifndef POGRAD_DECODE_HPP
#define POGRAD_DECODE_HPP

#include "pograd/poset.hpp"
#include "pograd/samplers.hpp"

#include <Eigen/Dense>

#include <span>

namespace pograd {

/// Posterior pairwise precedence probabilities: p_hat(i, j) is the share of
/// draws whose induced order has i before j. Diagonal is zero.
struct ClosureProbabilities {
  Eigen::MatrixXd p_hat;

  Eigen::Index n_items() const { return p_hat.rows(); }
  // 0/1 matrix of a single order.
  static ClosureProbabilities from_order(const PartialOrder& po);
  // Throws std::invalid_argument unless square, in [0,1], zero diagonal.
  void validate() const;
};

// Average of the per-draw product-order closures. Throws on empty draws.
ClosureProbabilities closure_probabilities(const DrawSet& draws);
ClosureProbabilities closure_probabilities(std::span<const PartialOrder> orders);

// Edges with p_hat > zeta, weighted by p_hat, with threshold-induced cycles
// broken and the result closed.
PartialOrder decode_closure(const ClosureProbabilities& p, double zeta);

}  // namespace pograd

#endif  // POGRAD_DECODE_HPP
