#ifndef POGRAD_POSET_HPP
#define POGRAD_POSET_HPP

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace pograd {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using ItemSet = std::vector<int>;

// Largest choice set enumerate_linear_extensions accepts.
inline constexpr int kMaxEnumerationItems = 10;

/// Strict partial order over items 0..n-1.
///
/// precedes(z, x) is true iff z must occur before x. The relation is always
/// irreflexive and asymmetric; orders built with from_closure (or returned by
/// the closure-producing algorithms) are also transitive.
class PartialOrder {
 public:
  PartialOrder() = default;
  explicit PartialOrder(Eigen::Index n_items);

  // Validates irreflexivity and asymmetry. Throws std::invalid_argument.
  static PartialOrder from_relation(BoolMatrix relation);
  // Additionally validates transitivity.
  static PartialOrder from_closure(BoolMatrix closure);

  Eigen::Index size() const { return precedes_.rows(); }
  bool precedes(int z, int x) const { return precedes_(z, x); }
  bool comparable(int a, int b) const { return precedes_(a, b) || precedes_(b, a); }
  const BoolMatrix& matrix() const { return precedes_; }
  bool is_closed() const { return closed_; }
  Eigen::Index edge_count() const { return precedes_.count(); }

  friend bool operator==(const PartialOrder& a, const PartialOrder& b) {
    return a.precedes_ == b.precedes_;
  }

 private:
  BoolMatrix precedes_;
  bool closed_ = true;
};

struct WeightedDigraph {
  BoolMatrix adjacency;
  Eigen::MatrixXd weights;

  Eigen::Index size() const { return adjacency.rows(); }
  // weights must be nonnegative and zero wherever adjacency is false.
  void validate() const;
};

// Reachability by one or more edges. Defined for any digraph; a cycle shows
// up as true diagonal entries.
BoolMatrix transitive_closure(const BoolMatrix& g);

bool is_transitive(const BoolMatrix& g);

// Cover relation of a DAG closure. Throws std::invalid_argument ("not a DAG")
// when the input contains a cycle.
BoolMatrix transitive_reduction(const BoolMatrix& closure);

// First cycle met by a depth-first search that visits roots and successors in
// ascending index order. The returned vertices v0..vk satisfy g(v_i, v_{i+1})
// and g(vk, v0).
std::optional<std::vector<int>> find_cycle(const BoolMatrix& g);

inline bool is_acyclic(const BoolMatrix& g) { return !find_cycle(g).has_value(); }

// Maximal elements of the suborder on `remaining`: items with no remaining
// predecessor. Throws on an empty set.
ItemSet max_set(const PartialOrder& po, std::span<const int> remaining);

// Throws std::invalid_argument on duplicate or out-of-range items.
bool is_linear_extension(const PartialOrder& po, std::span<const int> seq);

// All linear extensions of the suborder on choice_set, by depth-first
// frontier expansion (lexicographic in item order). Throws std::length_error
// ("oracle limit") beyond kMaxEnumerationItems.
std::vector<ItemSet> enumerate_linear_extensions(const PartialOrder& po,
                                                 std::span<const int> choice_set);

// Repeatedly deletes the lightest edge of a cycle until the graph is acyclic,
// then returns the transitive closure.
PartialOrder break_cycles_and_close(WeightedDigraph g);

}  // namespace pograd

#endif  // POGRAD_POSET_HPP
