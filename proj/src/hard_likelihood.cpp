#include "pograd/hard_likelihood.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace pograd {

Embedding::Embedding(Eigen::MatrixXd u) : u_(std::move(u)) {
  if (u_.cols() < 1) throw std::invalid_argument("Embedding: dim must be >= 1");
  if (!u_.allFinite()) throw std::invalid_argument("Embedding: non-finite entry");
}

void Trace::validate(Eigen::Index n_items) const {
  if (order.size() != choice_set.size()) {
    throw std::invalid_argument("trace order length differs from choice set size");
  }
  std::vector<char> in_set(static_cast<std::size_t>(n_items), 0);
  for (int x : choice_set) {
    if (x < 0 || x >= n_items) {
      throw std::invalid_argument("trace item " + std::to_string(x) + " out of range");
    }
    if (in_set[x]) {
      throw std::invalid_argument("duplicate item " + std::to_string(x) + " in choice set");
    }
    in_set[x] = 1;
  }
  std::vector<char> seen(static_cast<std::size_t>(n_items), 0);
  for (int x : order) {
    if (x < 0 || x >= n_items) {
      throw std::invalid_argument("trace item " + std::to_string(x) + " out of range");
    }
    if (seen[x]) throw std::invalid_argument("duplicate item " + std::to_string(x) + " in order");
    if (!in_set[x]) {
      throw std::invalid_argument("order item " + std::to_string(x) + " not in choice set");
    }
    seen[x] = 1;
  }
}

namespace {

void check_pair(const Embedding& e, int z, int x) {
  if (z < 0 || x < 0 || z >= e.n_items() || x >= e.n_items()) {
    throw std::invalid_argument("item index out of range");
  }
  if (z == x) throw std::invalid_argument("margin requires distinct items");
}

}  // namespace

double hard_margin(const Embedding& e, int z, int x) {
  check_pair(e, z, x);
  return pairwise_margin(e.row(z), e.row(x));
}

bool hard_precedes(const Embedding& e, int z, int x) { return hard_margin(e, z, x) > 0.0; }

PartialOrder induced_order(const Eigen::MatrixXd& u) {
  const Eigen::Index n = u.rows();
  BoolMatrix rel = BoolMatrix::Constant(n, n, false);
  for (Eigen::Index z = 0; z < n; ++z) {
    for (Eigen::Index x = 0; x < n; ++x) {
      if (z != x) rel(z, x) = (u.row(z) - u.row(x)).minCoeff() > 0.0;
    }
  }
  return PartialOrder::from_relation(std::move(rel));
}

PartialOrder induced_order(const Embedding& e) { return induced_order(e.matrix()); }

int hard_successor_count(const PartialOrder& po, std::span<const int> remaining, int x) {
  if (std::find(remaining.begin(), remaining.end(), x) == remaining.end()) {
    throw std::invalid_argument("hard_successor_count: item not in remaining set");
  }
  int count = 0;
  for (int z : remaining) count += po.precedes(x, z) ? 1 : 0;
  return count;
}

double hard_step_prob(const PartialOrder& po, std::span<const int> remaining, int chosen,
                      double beta) {
  if (std::find(remaining.begin(), remaining.end(), chosen) == remaining.end()) {
    throw std::invalid_argument("hard_step_prob: chosen item not in remaining set");
  }
  const ItemSet frontier = max_set(po, remaining);
  if (std::find(frontier.begin(), frontier.end(), chosen) == frontier.end()) return 0.0;
  // Utilities are beta*log(1+S); subtract the max before exponentiating.
  std::vector<double> util;
  util.reserve(frontier.size());
  double best = -std::numeric_limits<double>::infinity();
  double chosen_util = 0.0;
  for (int a : frontier) {
    const double u = beta * std::log1p(hard_successor_count(po, remaining, a));
    util.push_back(u);
    best = std::max(best, u);
    if (a == chosen) chosen_util = u;
  }
  double denom = 0.0;
  for (double u : util) denom += std::exp(u - best);
  return std::exp(chosen_util - best) / denom;
}

std::vector<double> hard_trace_step_logprobs(const PartialOrder& po, const Trace& trace,
                                             double beta) {
  const auto& y = trace.order;
  const std::size_t m = y.size();
  std::vector<double> out(m, kLogZero);
  // succ[i]: remaining items that y[i] precedes; pred[i]: remaining items
  // preceding y[i]. Index by trace position; positions >= t are remaining.
  std::vector<int> succ(m, 0), pred(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      if (po.precedes(y[i], y[j])) ++succ[i];
      if (po.precedes(y[j], y[i])) ++pred[i];
    }
  }
  for (std::size_t t = 0; t < m; ++t) {
    if (pred[t] > 0) return out;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = t; k < m; ++k) {
      if (pred[k] == 0) best = std::max(best, beta * std::log1p(succ[k]));
    }
    double denom = 0.0;
    for (std::size_t k = t; k < m; ++k) {
      if (pred[k] == 0) denom += std::exp(beta * std::log1p(succ[k]) - best);
    }
    out[t] = beta * std::log1p(succ[t]) - best - std::log(denom);
    for (std::size_t k = t + 1; k < m; ++k) {
      if (po.precedes(y[t], y[k])) --pred[k];
      if (po.precedes(y[k], y[t])) --succ[k];
    }
  }
  return out;
}

double hard_trace_loglik(const PartialOrder& po, const Trace& trace, double beta) {
  double total = 0.0;
  for (double lp : hard_trace_step_logprobs(po, trace, beta)) {
    if (is_log_zero(lp)) return kLogZero;
    total += lp;
  }
  return total;
}

}  // namespace pograd
