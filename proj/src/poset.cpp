#include "pograd/poset.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace pograd {

namespace {

void check_square(const BoolMatrix& g, const char* what) {
  if (g.rows() != g.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
}

void check_items(std::span<const int> items, Eigen::Index n, const char* what) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int x : items) {
    if (x < 0 || x >= n) {
      throw std::invalid_argument(std::string(what) + ": item " + std::to_string(x) +
                                  " outside the universe");
    }
    if (seen[x]) {
      throw std::invalid_argument(std::string(what) + ": duplicate item " +
                                  std::to_string(x));
    }
    seen[x] = 1;
  }
}

}  // namespace

PartialOrder::PartialOrder(Eigen::Index n_items)
    : precedes_(BoolMatrix::Constant(n_items, n_items, false)) {}

PartialOrder PartialOrder::from_relation(BoolMatrix relation) {
  check_square(relation, "PartialOrder");
  const Eigen::Index n = relation.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (relation(i, i)) {
      throw std::invalid_argument("PartialOrder: relation is not irreflexive at item " +
                                  std::to_string(i));
    }
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (relation(i, j) && relation(j, i)) {
        throw std::invalid_argument("PartialOrder: relation is not asymmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  PartialOrder po;
  po.closed_ = is_transitive(relation);
  po.precedes_ = std::move(relation);
  return po;
}

PartialOrder PartialOrder::from_closure(BoolMatrix closure) {
  PartialOrder po = from_relation(std::move(closure));
  if (!po.closed_) {
    throw std::invalid_argument("PartialOrder: relation is not transitive");
  }
  return po;
}

void WeightedDigraph::validate() const {
  if (adjacency.rows() != adjacency.cols() || weights.rows() != adjacency.rows() ||
      weights.cols() != adjacency.cols()) {
    throw std::invalid_argument("WeightedDigraph: shape mismatch");
  }
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
      if (!(weights(i, j) >= 0.0)) {
        throw std::invalid_argument("WeightedDigraph: negative weight");
      }
      if (!adjacency(i, j) && weights(i, j) != 0.0) {
        throw std::invalid_argument("WeightedDigraph: weight on a missing edge");
      }
    }
  }
}

BoolMatrix transitive_closure(const BoolMatrix& g) {
  check_square(g, "transitive_closure");
  BoolMatrix c = g;
  const Eigen::Index n = g.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (c(i, k)) c.row(i) = c.row(i).array() || c.row(k).array();
    }
  }
  return c;
}

bool is_transitive(const BoolMatrix& g) {
  const Eigen::Index n = g.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!g(i, j)) continue;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (g(j, k) && !g(i, k)) return false;
      }
    }
  }
  return true;
}

BoolMatrix transitive_reduction(const BoolMatrix& closure) {
  check_square(closure, "transitive_reduction");
  if (find_cycle(closure)) throw std::invalid_argument("transitive_reduction: not a DAG");
  const Eigen::Index n = closure.rows();
  BoolMatrix r = closure;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!closure(i, j)) continue;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (closure(i, k) && closure(k, j)) {
          r(i, j) = false;
          break;
        }
      }
    }
  }
  return r;
}

std::optional<std::vector<int>> find_cycle(const BoolMatrix& g) {
  check_square(g, "find_cycle");
  const int n = static_cast<int>(g.rows());
  enum : char { kWhite, kGrey, kBlack };
  std::vector<char> colour(n, kWhite);
  std::vector<int> stack;       // current DFS path
  std::vector<int> next_child;  // per path entry, next successor to try

  for (int root = 0; root < n; ++root) {
    if (colour[root] != kWhite) continue;
    stack.assign(1, root);
    next_child.assign(1, 0);
    colour[root] = kGrey;
    while (!stack.empty()) {
      const int v = stack.back();
      int& c = next_child.back();
      while (c < n && !g(v, c)) ++c;
      if (c == n) {
        colour[v] = kBlack;
        stack.pop_back();
        next_child.pop_back();
        continue;
      }
      const int w = c++;
      if (colour[w] == kGrey) {
        auto start = std::find(stack.begin(), stack.end(), w);
        return std::vector<int>(start, stack.end());
      }
      if (colour[w] == kWhite) {
        colour[w] = kGrey;
        stack.push_back(w);
        next_child.push_back(0);
      }
    }
  }
  return std::nullopt;
}

ItemSet max_set(const PartialOrder& po, std::span<const int> remaining) {
  if (remaining.empty()) throw std::invalid_argument("max_set: empty remaining set");
  check_items(remaining, po.size(), "max_set");
  ItemSet frontier;
  for (int x : remaining) {
    bool blocked = false;
    for (int z : remaining) {
      if (po.precedes(z, x)) {
        blocked = true;
        break;
      }
    }
    if (!blocked) frontier.push_back(x);
  }
  return frontier;
}

bool is_linear_extension(const PartialOrder& po, std::span<const int> seq) {
  check_items(seq, po.size(), "is_linear_extension");
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t j = i + 1; j < seq.size(); ++j) {
      if (po.precedes(seq[j], seq[i])) return false;
    }
  }
  return true;
}

namespace {

void extend(const PartialOrder& po, ItemSet& remaining, ItemSet& prefix,
            std::vector<ItemSet>& out) {
  if (remaining.empty()) {
    out.push_back(prefix);
    return;
  }
  const ItemSet frontier = max_set(po, remaining);
  for (int x : frontier) {
    auto it = std::find(remaining.begin(), remaining.end(), x);
    const auto pos = it - remaining.begin();
    remaining.erase(it);
    prefix.push_back(x);
    extend(po, remaining, prefix, out);
    prefix.pop_back();
    remaining.insert(remaining.begin() + pos, x);
  }
}

}  // namespace

std::vector<ItemSet> enumerate_linear_extensions(const PartialOrder& po,
                                                 std::span<const int> choice_set) {
  if (choice_set.size() > static_cast<std::size_t>(kMaxEnumerationItems)) {
    throw std::length_error("enumerate_linear_extensions: oracle limit of " +
                            std::to_string(kMaxEnumerationItems) + " items exceeded");
  }
  check_items(choice_set, po.size(), "enumerate_linear_extensions");
  ItemSet remaining(choice_set.begin(), choice_set.end());
  std::sort(remaining.begin(), remaining.end());
  ItemSet prefix;
  std::vector<ItemSet> out;
  if (remaining.empty()) {
    out.emplace_back();
    return out;
  }
  extend(po, remaining, prefix, out);
  return out;
}

PartialOrder break_cycles_and_close(WeightedDigraph g) {
  g.validate();
  while (auto cycle = find_cycle(g.adjacency)) {
    const auto& c = *cycle;
    std::size_t best = 0;
    double best_w = g.weights(c[0], c[1 % c.size()]);
    for (std::size_t i = 1; i < c.size(); ++i) {
      const double w = g.weights(c[i], c[(i + 1) % c.size()]);
      if (w < best_w) {
        best_w = w;
        best = i;
      }
    }
    const int u = c[best];
    const int v = c[(best + 1) % c.size()];
    g.adjacency(u, v) = false;
    g.weights(u, v) = 0.0;
  }
  return PartialOrder::from_closure(transitive_closure(g.adjacency));
}

}  // namespace pograd
