#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <iterator>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feedtype/channel.hpp"
#include "feedtype/parallel.hpp"

namespace feedtype {

// Hard caps on exact enumeration.
inline constexpr std::uint64_t kMaxLeaves = std::uint64_t{1} << 24;
inline constexpr std::uint64_t kMaxTrees = std::uint64_t{1} << 26;

// Number of labeled (non-leaf) nodes of a full |Y|-ary tree of depth n.
std::uint64_t tree_node_count(std::size_t depth, std::size_t output_size);
// |Y|^n, or throws DepthOverflow beyond kMaxLeaves.
std::uint64_t checked_leaf_count(std::size_t depth, std::size_t output_size);

// Labeled full |Y|-ary tree of depth n. Labels are stored breadth-first:
// root at 0, child of v along edge y at v*|Y| + y + 1. The same indexing
// continues past the labeled nodes, so leaf y^n sits at node_count() + its
// lexicographic ordinal.
class StrategyTree {
 public:
  StrategyTree(std::size_t depth, std::size_t input_size, std::size_t output_size,
               std::vector<Symbol> labels);

  static StrategyTree constant(std::size_t depth, std::size_t input_size, std::size_t output_size,
                               Symbol label);

  std::size_t depth() const noexcept { return depth_; }
  std::size_t input_size() const noexcept { return input_size_; }
  std::size_t output_size() const noexcept { return output_size_; }
  std::size_t node_count() const noexcept { return labels_.size(); }
  std::uint64_t leaf_count() const;

  std::span<const Symbol> labels() const noexcept { return labels_; }
  Symbol label(std::size_t node) const { return labels_.at(node); }

  std::size_t child(std::size_t node, Symbol y) const noexcept {
    return node * output_size_ + y + 1;
  }
  std::size_t parent(std::size_t node) const noexcept { return (node - 1) / output_size_; }
  // Depth of a node (root = 0); valid for leaves too.
  std::size_t node_depth(std::size_t node) const noexcept;
  // First index at the given depth.
  std::size_t level_start(std::size_t depth) const noexcept;

  // Node reached from the root along `path` (|path| <= depth).
  std::size_t node_at(std::span<const Symbol> path) const;
  // Label x_k(y^{k-1}) for a path of length k-1 < depth.
  Symbol label_at(std::span<const Symbol> path) const { return labels_[node_at(path)]; }

  friend bool operator==(const StrategyTree&, const StrategyTree&) = default;

 private:
  std::size_t depth_;
  std::size_t input_size_;
  std::size_t output_size_;
  std::vector<Symbol> labels_;
};

// Text form: "tree n |X| |Y|" then the breadth-first labels on one line.
std::string serialize_tree(const StrategyTree& tree);
StrategyTree parse_tree(std::istream& in);

std::vector<Symbol> leaf_path(std::uint64_t ordinal, std::size_t depth, std::size_t output_size);

// h_k(y^{k-1}); k is 1-based and past.size() == k-1.
using StrategyFn = std::function<Symbol(std::size_t k, std::span<const Symbol> past)>;

StrategyTree tree_from_strategy(const StrategyFn& h, std::size_t depth, std::size_t input_size,
                                std::size_t output_size);
StrategyFn strategy_from_tree(StrategyTree tree);

// The pair (a, b), threshold mu and channel defining the score
// s_i = sum_l 1{x_l = a} (1{y_l = b} - P(b|a)).
class ScoreParams {
 public:
  ScoreParams(Symbol a, Symbol b, double mu, Dmc dmc);

  Symbol a() const noexcept { return a_; }
  Symbol b() const noexcept { return b_; }
  double mu() const noexcept { return mu_; }
  const Dmc& dmc() const noexcept { return dmc_; }
  double p_ba() const noexcept { return p_ba_; }

  // Score increment for one step with input x and output y.
  double increment(Symbol x, Symbol y) const noexcept {
    if (x != a_) return 0.0;
    return y == b_ ? 1.0 - p_ba_ : -p_ba_;
  }
  double threshold(std::size_t n) const noexcept { return static_cast<double>(n) * mu_; }

 private:
  Symbol a_;
  Symbol b_;
  double mu_;
  Dmc dmc_;
  double p_ba_;
};

double score(const StrategyTree& tree, std::span<const Symbol> ys, const ScoreParams& p);
// Scores of all leaves, indexed by lexicographic ordinal.
std::vector<double> leaf_scores(const StrategyTree& tree, const ScoreParams& p);
// Probability of every leaf under the tree's inputs and the channel.
std::vector<double> leaf_masses(const StrategyTree& tree, const Dmc& dmc);

// Leaves with |s_n| > n*mu, as lexicographic ordinals.
std::vector<std::uint64_t> success_set(const StrategyTree& tree, const ScoreParams& p);
double success_probability(const StrategyTree& tree, const ScoreParams& p);

// The threshold strategy: feed a while |s| <= n*mu, otherwise the smallest
// symbol other than a.
StrategyTree optimal_tree(std::size_t depth, const ScoreParams& p);
Symbol smallest_other(Symbol a) noexcept;

// Reusable scratch for evaluating many trees of one shape.
class TreeEvaluator {
 public:
  TreeEvaluator(std::size_t depth, const ScoreParams& p);

  double success_probability(std::span<const Symbol> labels);
  // Recomputes only descendants of nodes >= first_changed, reusing the rest.
  double success_probability_from(std::span<const Symbol> labels, std::size_t first_changed);

 private:
  void propagate(std::span<const Symbol> labels, std::size_t from);
  double sum_success() const;

  const ScoreParams* params_;
  std::size_t depth_;
  std::size_t node_count_;
  std::size_t output_size_;
  double threshold_;
  std::vector<double> score_;
  std::vector<double> mass_;
  std::vector<double> channel_;  // P(y|x) row-major
};

// All |X|^{node_count} labelings in lexicographic label order (label 0 most
// significant).
class TreeEnumerator {
 public:
  TreeEnumerator(std::size_t depth, std::size_t input_size, std::size_t output_size);

  std::uint64_t size() const noexcept { return count_; }
  std::size_t node_count() const noexcept { return node_count_; }
  StrategyTree tree_at(std::uint64_t index) const;
  void labels_at(std::uint64_t index, std::span<Symbol> out) const;
  // Odometer step; returns the most significant changed position, or
  // nullopt on wraparound.
  static std::optional<std::size_t> advance(std::span<Symbol> labels, std::size_t input_size);

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = StrategyTree;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const TreeEnumerator* owner, std::uint64_t index);
    const StrategyTree& operator*() const { return *current_; }
    const StrategyTree* operator->() const { return &*current_; }
    iterator& operator++();
    void operator++(int) { ++*this; }
    friend bool operator==(const iterator& l, const iterator& r) { return l.index_ == r.index_; }

   private:
    const TreeEnumerator* owner_ = nullptr;
    std::uint64_t index_ = 0;
    std::optional<StrategyTree> current_;
  };

  iterator begin() const { return iterator(this, 0); }
  iterator end() const { return iterator(this, count_); }

 private:
  std::size_t depth_;
  std::size_t input_size_;
  std::size_t output_size_;
  std::size_t node_count_;
  std::uint64_t count_;
};

TreeEnumerator enumerate_trees(std::size_t depth, std::size_t input_size, std::size_t output_size);

struct MaxSuccess {
  StrategyTree tree;
  double value;
  std::uint64_t index;  // position in enumeration order
};

// argmax over all trees of success_probability; ties go to the first tree in
// enumeration order. Parallel over contiguous index blocks.
MaxSuccess exhaustive_max_success(std::size_t depth, const ScoreParams& p,
                                  const ExecPolicy& policy = {});

namespace serial {
// Reference: evaluates every tree from scratch in order.
MaxSuccess exhaustive_max_success(std::size_t depth, const ScoreParams& p);
}  // namespace serial

// ---------------------------------------------------------------------------
// Tree surgery used to show well-ordered trees suffice.

// A node v labeled a' != a with at least one child labeled a.
class SurgerySite {
 public:
  // Throws InvalidSite unless (tree, node) is a site for symbol a.
  SurgerySite(StrategyTree tree, std::size_t node, Symbol a);

  const StrategyTree& tree() const noexcept { return tree_; }
  std::size_t node() const noexcept { return node_; }
  std::size_t depth() const noexcept { return depth_; }
  Symbol a() const noexcept { return a_; }
  Symbol site_label() const noexcept { return tree_.label(node_); }
  // True when additionally every ancestor of the node is labeled a.
  bool all_ancestors_a() const;

 private:
  StrategyTree tree_;
  std::size_t node_;
  std::size_t depth_;
  Symbol a_;
};

bool is_site(const StrategyTree& tree, std::size_t node, Symbol a);
std::vector<std::size_t> surgery_sites(const StrategyTree& tree, Symbol a);

// Labels of the subtree rooted at `node`, re-indexed breadth-first.
std::vector<Symbol> subtree_labels(const StrategyTree& tree, std::size_t node);

// Gives every leaf of a depth-d subtree the label `frontier` and |Y| fresh
// leaf children; returns the depth-(d+1) tree. d = 0 means a bare leaf.
StrategyTree augment_frontier(std::span<const Symbol> labels, std::size_t depth,
                              std::size_t input_size, std::size_t output_size, Symbol frontier);

StrategyTree augmented_subtree(const SurgerySite& site, Symbol y);
StrategyTree replacement_realization(const SurgerySite& site, Symbol y);
double expected_replacement_success(const SurgerySite& site, const ScoreParams& p);

bool is_well_ordered(const StrategyTree& tree, Symbol a);

struct WellOrderStep {
  StrategyTree tree;
  std::size_t site_node;
  Symbol chosen_y;
  double before;
  double after;
};

// One surgery at the breadth-first-first site, keeping the best realization
// (ties to the smallest y). Throws AlreadyWellOrdered if no site exists.
WellOrderStep well_order_step_detailed(const StrategyTree& tree, const ScoreParams& p);
StrategyTree well_order_step(const StrategyTree& tree, const ScoreParams& p);

// ---------------------------------------------------------------------------
// Step-by-step strategies for closed-loop simulation.

class OnlineStrategy {
 public:
  virtual ~OnlineStrategy() = default;
  virtual void reset() = 0;
  virtual Symbol next_input() = 0;
  virtual void observe(Symbol y) = 0;
  virtual std::unique_ptr<OnlineStrategy> clone() const = 0;
};

std::unique_ptr<OnlineStrategy> make_tree_strategy(StrategyTree tree);
std::unique_ptr<OnlineStrategy> make_function_strategy(StrategyFn h);
std::unique_ptr<OnlineStrategy> make_constant_strategy(Symbol x);
// h* evaluated incrementally for blocklength n; matches optimal_tree.
std::unique_ptr<OnlineStrategy> make_threshold_strategy(std::size_t n, const ScoreParams& p);

}  // namespace feedtype
