#include "pograd/decode.hpp"

#include <stdexcept>

namespace pograd {

ClosureProbabilities ClosureProbabilities::from_order(const PartialOrder& po) {
  return {po.matrix().cast<double>()};
}

void ClosureProbabilities::validate() const {
  if (p_hat.rows() != p_hat.cols()) throw std::invalid_argument("closure probabilities: not square");
  if (!p_hat.allFinite() || (p_hat.array() < 0.0).any() || (p_hat.array() > 1.0).any()) {
    throw std::invalid_argument("closure probabilities: entries must lie in [0,1]");
  }
  if (!p_hat.diagonal().isZero(0.0)) {
    throw std::invalid_argument("closure probabilities: diagonal must be zero");
  }
}

ClosureProbabilities closure_probabilities(const DrawSet& draws) {
  if (draws.empty()) throw std::invalid_argument("closure_probabilities: no draws");
  draws.validate();
  const Eigen::Index n = draws.n_items();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  for (const Draw& d : draws.draws) sum += induced_order(to_embedding(d.params)).matrix().cast<double>();
  return {sum / static_cast<double>(draws.size())};
}

ClosureProbabilities closure_probabilities(std::span<const PartialOrder> orders) {
  if (orders.empty()) throw std::invalid_argument("closure_probabilities: no orders");
  const Eigen::Index n = orders.front().size();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  for (const PartialOrder& po : orders) {
    if (po.size() != n) throw std::invalid_argument("closure_probabilities: size mismatch");
    sum += po.matrix().cast<double>();
  }
  return {sum / static_cast<double>(orders.size())};
}

PartialOrder decode_closure(const ClosureProbabilities& p, double zeta) {
  p.validate();
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("decode_closure: zeta must lie in (0,1)");
  WeightedDigraph g;
  g.adjacency = (p.p_hat.array() > zeta).matrix();
  g.weights = g.adjacency.cast<double>().cwiseProduct(p.p_hat);
  return break_cycles_and_close(std::move(g));
}

}  // namespace pograd
