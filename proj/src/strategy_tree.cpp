#include "feedtype/strategy_tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "feedtype/error.hpp"

namespace feedtype {

namespace {

std::uint64_t int_pow(std::uint64_t base, std::size_t exp, std::uint64_t cap, bool& overflow) {
  std::uint64_t r = 1;
  overflow = false;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > cap / base) {
      overflow = true;
      return cap;
    }
    r *= base;
  }
  return r;
}

std::uint64_t level_size(std::size_t depth, std::size_t output_size) {
  bool overflow = false;
  return int_pow(output_size, depth, ~std::uint64_t{0}, overflow);
}

}  // namespace

std::uint64_t checked_leaf_count(std::size_t depth, std::size_t output_size) {
  bool overflow = false;
  const std::uint64_t leaves = int_pow(output_size, depth, kMaxLeaves, overflow);
  if (overflow || leaves > kMaxLeaves) {
    throw Error(ErrorCode::DepthOverflow,
                fmt::format("|Y|^n = {}^{} exceeds the 2^24 leaf cap", output_size, depth));
  }
  return leaves;
}

std::uint64_t tree_node_count(std::size_t depth, std::size_t output_size) {
  const std::uint64_t leaves = checked_leaf_count(depth, output_size);
  if (output_size == 1) return depth;
  return (leaves - 1) / (output_size - 1);
}

// ---------------------------------------------------------------------------

StrategyTree::StrategyTree(std::size_t depth, std::size_t input_size, std::size_t output_size,
                           std::vector<Symbol> labels)
    : depth_(depth), input_size_(input_size), output_size_(output_size), labels_(std::move(labels)) {
  if (depth_ == 0) throw Error(ErrorCode::InvalidArgument, "strategy tree depth must be >= 1");
  if (input_size_ == 0 || output_size_ == 0) throw Error(ErrorCode::EmptyInput, "empty alphabet");
  const std::uint64_t nodes = tree_node_count(depth_, output_size_);
  if (labels_.size() != nodes) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("tree of depth {} over |Y|={} needs {} labels, got {}", depth_, output_size_,
                            nodes, labels_.size()));
  }
  for (std::size_t v = 0; v < labels_.size(); ++v) {
    if (labels_[v] >= input_size_) {
      throw Error(ErrorCode::LabelOutOfAlphabet,
                  fmt::format("label {} at node {} outside |X|={}", labels_[v], v, input_size_));
    }
  }
}

StrategyTree StrategyTree::constant(std::size_t depth, std::size_t input_size, std::size_t output_size,
                                    Symbol label) {
  return StrategyTree(depth, input_size, output_size,
                      std::vector<Symbol>(tree_node_count(depth, output_size), label));
}

std::uint64_t StrategyTree::leaf_count() const { return level_size(depth_, output_size_); }

std::size_t StrategyTree::level_start(std::size_t depth) const noexcept {
  if (output_size_ == 1) return depth;
  return static_cast<std::size_t>((level_size(depth, output_size_) - 1) / (output_size_ - 1));
}

std::size_t StrategyTree::node_depth(std::size_t node) const noexcept {
  std::size_t d = 0;
  while (level_start(d + 1) <= node) ++d;
  return d;
}

std::size_t StrategyTree::node_at(std::span<const Symbol> path) const {
  if (path.size() > depth_) {
    throw Error(ErrorCode::PathTooLong, fmt::format("path of length {} in a depth-{} tree", path.size(), depth_));
  }
  std::size_t v = 0;
  for (Symbol y : path) {
    if (y >= output_size_) throw Error(ErrorCode::SymbolOutOfRange, fmt::format("output {} outside |Y|", y));
    v = child(v, y);
  }
  return v;
}

std::string serialize_tree(const StrategyTree& tree) {
  std::string out = fmt::format("tree {} {} {}\n", tree.depth(), tree.input_size(), tree.output_size());
  out += fmt::format("{}\n", fmt::join(tree.labels(), " "));
  return out;
}

StrategyTree parse_tree(std::istream& in) {
  std::string word;
  std::size_t n = 0, x = 0, y = 0;
  if (!(in >> word) || word != "tree" || !(in >> n >> x >> y)) {
    throw Error(ErrorCode::InvalidArgument, "expected header 'tree n |X| |Y|'");
  }
  std::vector<Symbol> labels;
  long long v = 0;
  while (in >> v) {
    if (v < 0) throw Error(ErrorCode::LabelOutOfAlphabet, "negative label");
    labels.push_back(static_cast<Symbol>(v));
  }
  return StrategyTree(n, x, y, std::move(labels));
}

std::vector<Symbol> leaf_path(std::uint64_t ordinal, std::size_t depth, std::size_t output_size) {
  std::vector<Symbol> path(depth);
  for (std::size_t i = depth; i-- > 0;) {
    path[i] = static_cast<Symbol>(ordinal % output_size);
    ordinal /= output_size;
  }
  return path;
}

StrategyTree tree_from_strategy(const StrategyFn& h, std::size_t depth, std::size_t input_size,
                                std::size_t output_size) {
  const std::uint64_t nodes = tree_node_count(depth, output_size);
  std::vector<Symbol> labels(nodes);
  std::vector<std::vector<Symbol>> paths(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    const Symbol x = h(paths[v].size() + 1, paths[v]);
    if (x >= input_size) {
      throw Error(ErrorCode::LabelOutOfAlphabet,
                  fmt::format("strategy returned {} at step {} (|X|={})", x, paths[v].size() + 1, input_size));
    }
    labels[v] = x;
    for (Symbol y = 0; y < output_size; ++y) {
      const std::size_t c = v * output_size + y + 1;
      if (c < nodes) {
        paths[c] = paths[v];
        paths[c].push_back(y);
      }
    }
    paths[v].clear();
    paths[v].shrink_to_fit();
  }
  return StrategyTree(depth, input_size, output_size, std::move(labels));
}

StrategyFn strategy_from_tree(StrategyTree tree) {
  return [t = std::move(tree)](std::size_t k, std::span<const Symbol> past) {
    if (k != past.size() + 1 || k > t.depth()) {
      throw Error(ErrorCode::PathTooLong, fmt::format("step {} outside depth {}", k, t.depth()));
    }
    return t.label_at(past);
  };
}

// ---------------------------------------------------------------------------

ScoreParams::ScoreParams(Symbol a, Symbol b, double mu, Dmc dmc)
    : a_(a), b_(b), mu_(mu), dmc_(std::move(dmc)), p_ba_(0.0) {
  if (!(mu_ > 0.0)) throw ValueError(ErrorCode::NonpositiveMu, fmt::format("mu = {}", mu_), mu_);
  if (!dmc_.input().contains(a_) || !dmc_.output().contains(b_)) {
    throw Error(ErrorCode::SymbolOutOfRange, fmt::format("(a={}, b={}) outside channel alphabets", a_, b_));
  }
  p_ba_ = dmc_.prob(b_, a_);
}

double score(const StrategyTree& tree, std::span<const Symbol> ys, const ScoreParams& p) {
  if (ys.size() > tree.depth()) {
    throw Error(ErrorCode::PathTooLong, fmt::format("path of length {} in a depth-{} tree", ys.size(), tree.depth()));
  }
  double s = 0.0;
  std::size_t v = 0;
  for (Symbol y : ys) {
    if (y >= tree.output_size()) throw Error(ErrorCode::SymbolOutOfRange, "output outside |Y|");
    s += p.increment(tree.label(v), y);
    v = tree.child(v, y);
  }
  return s;
}

namespace {

void check_shape(const StrategyTree& tree, const Dmc& dmc) {
  if (tree.input_size() != dmc.input().size() || tree.output_size() != dmc.output().size()) {
    throw Error(ErrorCode::LengthMismatch, "tree alphabets differ from channel alphabets");
  }
}

}  // namespace

std::vector<double> leaf_scores(const StrategyTree& tree, const ScoreParams& p) {
  check_shape(tree, p.dmc());
  const std::uint64_t leaves = checked_leaf_count(tree.depth(), tree.output_size());
  const std::size_t nodes = tree.node_count();
  std::vector<double> s(nodes + leaves, 0.0);
  for (std::size_t v = 0; v < nodes; ++v) {
    for (Symbol y = 0; y < tree.output_size(); ++y) {
      s[tree.child(v, y)] = s[v] + p.increment(tree.label(v), y);
    }
  }
  return {s.begin() + static_cast<std::ptrdiff_t>(nodes), s.end()};
}

std::vector<double> leaf_masses(const StrategyTree& tree, const Dmc& dmc) {
  check_shape(tree, dmc);
  const std::uint64_t leaves = checked_leaf_count(tree.depth(), tree.output_size());
  const std::size_t nodes = tree.node_count();
  std::vector<double> m(nodes + leaves, 0.0);
  m[0] = 1.0;
  for (std::size_t v = 0; v < nodes; ++v) {
    const Pmf& row = dmc.row(tree.label(v));
    for (Symbol y = 0; y < tree.output_size(); ++y) m[tree.child(v, y)] = m[v] * row[y];
  }
  return {m.begin() + static_cast<std::ptrdiff_t>(nodes), m.end()};
}

std::vector<std::uint64_t> success_set(const StrategyTree& tree, const ScoreParams& p) {
  const std::vector<double> s = leaf_scores(tree, p);
  const double thr = p.threshold(tree.depth());
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < s.size(); ++i) {
    if (std::abs(s[i]) > thr) out.push_back(i);
  }
  return out;
}

double success_probability(const StrategyTree& tree, const ScoreParams& p) {
  check_shape(tree, p.dmc());
  const std::uint64_t leaves = checked_leaf_count(tree.depth(), tree.output_size());
  const double thr = p.threshold(tree.depth());
  const std::size_t n = tree.depth();
  const std::size_t ny = tree.output_size();
  double total = 0.0;
  double success = 0.0;
  std::vector<Symbol> path(n, 0);
  for (std::uint64_t leaf = 0; leaf < leaves; ++leaf) {
    double s = 0.0;
    double mass = 1.0;
    std::size_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Symbol x = tree.label(v);
      s += p.increment(x, path[i]);
      mass *= p.dmc().prob(path[i], x);
      v = tree.child(v, path[i]);
    }
    total += mass;
    if (std::abs(s) > thr) success += mass;
    // next path in lexicographic order
    for (std::size_t i = n; i-- > 0;) {
      if (++path[i] < ny) break;
      path[i] = 0;
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValueError(ErrorCode::InvalidArgument,
                     fmt::format("leaf probabilities sum to {:.17g}", total), total);
  }
  return success;
}

Symbol smallest_other(Symbol a) noexcept { return a == 0 ? 1 : 0; }

StrategyTree optimal_tree(std::size_t depth, const ScoreParams& p) {
  const std::size_t nx = p.dmc().input().size();
  const std::size_t ny = p.dmc().output().size();
  if (nx < 2) throw Error(ErrorCode::SingletonInputAlphabet, "h* needs a symbol other than a");
  const std::uint64_t nodes = tree_node_count(depth, ny);
  const double thr = p.threshold(depth);
  const Symbol other = smallest_other(p.a());
  std::vector<Symbol> labels(nodes);
  std::vector<double> s(nodes, 0.0);
  for (std::size_t v = 0; v < nodes; ++v) {
    labels[v] = std::abs(s[v]) <= thr ? p.a() : other;
    for (Symbol y = 0; y < ny; ++y) {
      const std::size_t c = v * ny + y + 1;
      if (c < nodes) s[c] = s[v] + p.increment(labels[v], y);
    }
  }
  return StrategyTree(depth, nx, ny, std::move(labels));
}

// ---------------------------------------------------------------------------

TreeEvaluator::TreeEvaluator(std::size_t depth, const ScoreParams& p)
    : params_(&p),
      depth_(depth),
      node_count_(tree_node_count(depth, p.dmc().output().size())),
      output_size_(p.dmc().output().size()),
      threshold_(p.threshold(depth)) {
  const std::size_t total = node_count_ + checked_leaf_count(depth, output_size_);
  score_.assign(total, 0.0);
  mass_.assign(total, 0.0);
  mass_[0] = 1.0;
  const std::size_t nx = p.dmc().input().size();
  channel_.resize(nx * output_size_);
  for (Symbol x = 0; x < nx; ++x) {
    for (Symbol y = 0; y < output_size_; ++y) channel_[x * output_size_ + y] = p.dmc().prob(y, x);
  }
}

void TreeEvaluator::propagate(std::span<const Symbol> labels, std::size_t from) {
  const Symbol a = params_->a();
  for (std::size_t v = from; v < node_count_; ++v) {
    const Symbol x = labels[v];
    const double* row = &channel_[x * output_size_];
    const std::size_t base = v * output_size_ + 1;
    if (x == a) {
      for (Symbol y = 0; y < output_size_; ++y) {
        score_[base + y] = score_[v] + params_->increment(x, y);
        mass_[base + y] = mass_[v] * row[y];
      }
    } else {
      for (Symbol y = 0; y < output_size_; ++y) {
        score_[base + y] = score_[v];
        mass_[base + y] = mass_[v] * row[y];
      }
    }
  }
}

double TreeEvaluator::sum_success() const {
  double success = 0.0;
  for (std::size_t i = node_count_; i < score_.size(); ++i) {
    if (std::abs(score_[i]) > threshold_) success += mass_[i];
  }
  return success;
}

double TreeEvaluator::success_probability(std::span<const Symbol> labels) {
  propagate(labels, 0);
  return sum_success();
}

double TreeEvaluator::success_probability_from(std::span<const Symbol> labels, std::size_t first_changed) {
  propagate(labels, first_changed);
  return sum_success();
}

// ---------------------------------------------------------------------------

TreeEnumerator::TreeEnumerator(std::size_t depth, std::size_t input_size, std::size_t output_size)
    : depth_(depth),
      input_size_(input_size),
      output_size_(output_size),
      node_count_(tree_node_count(depth, output_size)),
      count_(0) {
  if (input_size == 0) throw Error(ErrorCode::EmptyInput, "empty input alphabet");
  bool overflow = false;
  count_ = int_pow(input_size, node_count_, kMaxTrees, overflow);
  if (overflow || count_ > kMaxTrees) {
    throw Error(ErrorCode::EnumerationTooLarge,
                fmt::format("{}^{} trees exceed the 2^26 cap", input_size, node_count_));
  }
}

void TreeEnumerator::labels_at(std::uint64_t index, std::span<Symbol> out) const {
  for (std::size_t i = node_count_; i-- > 0;) {
    out[i] = static_cast<Symbol>(index % input_size_);
    index /= input_size_;
  }
}

StrategyTree TreeEnumerator::tree_at(std::uint64_t index) const {
  if (index >= count_) throw Error(ErrorCode::InvalidArgument, "tree index out of range");
  std::vector<Symbol> labels(node_count_);
  labels_at(index, labels);
  return StrategyTree(depth_, input_size_, output_size_, std::move(labels));
}

std::optional<std::size_t> TreeEnumerator::advance(std::span<Symbol> labels, std::size_t input_size) {
  for (std::size_t i = labels.size(); i-- > 0;) {
    if (++labels[i] < input_size) return i;
    labels[i] = 0;
  }
  return std::nullopt;
}

TreeEnumerator::iterator::iterator(const TreeEnumerator* owner, std::uint64_t index)
    : owner_(owner), index_(index) {
  if (index_ < owner_->count_) current_ = owner_->tree_at(index_);
}

TreeEnumerator::iterator& TreeEnumerator::iterator::operator++() {
  ++index_;
  if (index_ < owner_->count_) {
    current_ = owner_->tree_at(index_);
  } else {
    current_.reset();
  }
  return *this;
}

TreeEnumerator enumerate_trees(std::size_t depth, std::size_t input_size, std::size_t output_size) {
  return TreeEnumerator(depth, input_size, output_size);
}

MaxSuccess exhaustive_max_success(std::size_t depth, const ScoreParams& p, const ExecPolicy& policy) {
  const std::size_t nx = p.dmc().input().size();
  const TreeEnumerator trees(depth, nx, p.dmc().output().size());
  const std::uint64_t count = trees.size();
  const int workers = policy.resolved();
  const std::uint64_t blocks = std::min<std::uint64_t>(count, static_cast<std::uint64_t>(workers) * 8);
  std::vector<double> block_value(blocks, -1.0);
  std::vector<std::uint64_t> block_index(blocks, 0);
  const auto nblocks = static_cast<std::int64_t>(blocks);

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    const auto b = static_cast<std::uint64_t>(blk);
    const std::uint64_t begin = count * b / blocks;
    const std::uint64_t end = count * (b + 1) / blocks;
    TreeEvaluator eval(depth, p);
    std::vector<Symbol> labels(trees.node_count());
    trees.labels_at(begin, labels);
    double best = eval.success_probability(labels);
    std::uint64_t best_index = begin;
    for (std::uint64_t idx = begin + 1; idx < end; ++idx) {
      const std::size_t changed = *TreeEnumerator::advance(labels, nx);
      const double v = eval.success_probability_from(labels, changed);
      if (v > best) {
        best = v;
        best_index = idx;
      }
    }
    block_value[b] = best;
    block_index[b] = best_index;
  }

  std::uint64_t winner = 0;
  for (std::uint64_t b = 1; b < blocks; ++b) {
    if (block_value[b] > block_value[winner]) winner = b;
  }
  return {trees.tree_at(block_index[winner]), block_value[winner], block_index[winner]};
}

namespace serial {

MaxSuccess exhaustive_max_success(std::size_t depth, const ScoreParams& p) {
  const TreeEnumerator trees(depth, p.dmc().input().size(), p.dmc().output().size());
  std::optional<MaxSuccess> best;
  std::uint64_t index = 0;
  for (const StrategyTree& t : trees) {
    const double v = success_probability(t, p);
    if (!best || v > best->value) best = MaxSuccess{t, v, index};
    ++index;
  }
  return *best;
}

}  // namespace serial

// ---------------------------------------------------------------------------

bool is_site(const StrategyTree& tree, std::size_t node, Symbol a) {
  if (node >= tree.node_count() || tree.label(node) == a) return false;
  for (Symbol y = 0; y < tree.output_size(); ++y) {
    const std::size_t c = tree.child(node, y);
    if (c < tree.node_count() && tree.label(c) == a) return true;
  }
  return false;
}

std::vector<std::size_t> surgery_sites(const StrategyTree& tree, Symbol a) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < tree.node_count(); ++v) {
    if (is_site(tree, v, a)) out.push_back(v);
  }
  return out;
}

SurgerySite::SurgerySite(StrategyTree tree, std::size_t node, Symbol a)
    : tree_(std::move(tree)), node_(node), depth_(0), a_(a) {
  if (!is_site(tree_, node_, a_)) {
    throw Error(ErrorCode::InvalidSite,
                fmt::format("node {} is not labeled != {} with a child labeled {}", node_, a_, a_));
  }
  depth_ = tree_.node_depth(node_);
}

bool SurgerySite::all_ancestors_a() const {
  std::size_t v = node_;
  while (v != 0) {
    v = tree_.parent(v);
    if (tree_.label(v) != a_) return false;
  }
  return true;
}

std::vector<Symbol> subtree_labels(const StrategyTree& tree, std::size_t node) {
  if (node >= tree.node_count()) throw Error(ErrorCode::InvalidArgument, "subtree root must be a labeled node");
  const std::size_t d = tree.node_depth(node);
  const std::size_t pos = node - tree.level_start(d);
  std::vector<Symbol> out;
  std::uint64_t width = 1;
  for (std::size_t r = 0; d + r < tree.depth(); ++r) {
    const std::size_t first = tree.level_start(d + r) + static_cast<std::size_t>(pos * width);
    for (std::uint64_t j = 0; j < width; ++j) out.push_back(tree.label(first + j));
    width *= tree.output_size();
  }
  return out;
}

StrategyTree augment_frontier(std::span<const Symbol> labels, std::size_t depth, std::size_t input_size,
                              std::size_t output_size, Symbol frontier) {
  const std::uint64_t expected = depth == 0 ? 0 : tree_node_count(depth, output_size);
  if (labels.size() != expected) throw Error(ErrorCode::LengthMismatch, "subtree label count differs from depth");
  std::vector<Symbol> out(labels.begin(), labels.end());
  out.resize(out.size() + checked_leaf_count(depth, output_size), frontier);
  return StrategyTree(depth + 1, input_size, output_size, std::move(out));
}

StrategyTree augmented_subtree(const SurgerySite& site, Symbol y) {
  const StrategyTree& t = site.tree();
  if (y >= t.output_size()) throw Error(ErrorCode::SymbolOutOfRange, "edge symbol outside |Y|");
  // ℓ <= n-2 for a site, so the child is labeled and B_y has depth n-ℓ-1 >= 1.
  const std::size_t child = t.child(site.node(), y);
  const std::vector<Symbol> b = subtree_labels(t, child);
  return augment_frontier(b, t.depth() - site.depth() - 1, t.input_size(), t.output_size(), site.site_label());
}

StrategyTree replacement_realization(const SurgerySite& site, Symbol y) {
  const StrategyTree& t = site.tree();
  const StrategyTree aug = augmented_subtree(site, y);
  std::vector<Symbol> labels(t.labels().begin(), t.labels().end());
  const std::size_t d = site.depth();
  const std::size_t pos = site.node() - t.level_start(d);
  std::size_t k = 0;
  std::uint64_t width = 1;
  for (std::size_t r = 0; d + r < t.depth(); ++r) {
    const std::size_t first = t.level_start(d + r) + static_cast<std::size_t>(pos * width);
    for (std::uint64_t j = 0; j < width; ++j) labels[first + j] = aug.label(k++);
    width *= t.output_size();
  }
  return StrategyTree(t.depth(), t.input_size(), t.output_size(), std::move(labels));
}

double expected_replacement_success(const SurgerySite& site, const ScoreParams& p) {
  if (site.a() != p.a()) throw Error(ErrorCode::InvalidSite, "site built for a different symbol a");
  const Pmf& row = p.dmc().row(site.site_label());
  double expected = 0.0;
  for (Symbol y = 0; y < site.tree().output_size(); ++y) {
    expected += row[y] * success_probability(replacement_realization(site, y), p);
  }
  return expected;
}

bool is_well_ordered(const StrategyTree& tree, Symbol a) {
  // below_other[v]: some proper ancestor of v is labeled != a
  std::vector<bool> below_other(tree.node_count(), false);
  for (std::size_t v = 1; v < tree.node_count(); ++v) {
    const std::size_t u = tree.parent(v);
    below_other[v] = below_other[u] || tree.label(u) != a;
    if (below_other[v] && tree.label(v) == a) return false;
  }
  return true;
}

WellOrderStep well_order_step_detailed(const StrategyTree& tree, const ScoreParams& p) {
  const std::vector<std::size_t> sites = surgery_sites(tree, p.a());
  if (sites.empty()) throw Error(ErrorCode::AlreadyWellOrdered, "no surgery site left");
  const SurgerySite site(tree, sites.front(), p.a());
  const double before = success_probability(tree, p);
  std::optional<StrategyTree> best;
  double best_value = -1.0;
  Symbol best_y = 0;
  for (Symbol y = 0; y < tree.output_size(); ++y) {
    StrategyTree candidate = replacement_realization(site, y);
    const double v = success_probability(candidate, p);
    if (v > best_value) {
      best_value = v;
      best_y = y;
      best = std::move(candidate);
    }
  }
  if (best_value < before - 1e-12) {
    throw ValueError(ErrorCode::BoundViolated,
                     fmt::format("surgery lowered success probability {:.17g} -> {:.17g}", before, best_value),
                     best_value - before);
  }
  return {std::move(*best), site.node(), best_y, before, best_value};
}

StrategyTree well_order_step(const StrategyTree& tree, const ScoreParams& p) {
  return well_order_step_detailed(tree, p).tree;
}

// ---------------------------------------------------------------------------

namespace {

class TreeStrategy final : public OnlineStrategy {
 public:
  explicit TreeStrategy(StrategyTree tree) : tree_(std::move(tree)) {}
  void reset() override { node_ = 0; }
  Symbol next_input() override {
    if (node_ >= tree_.node_count()) throw Error(ErrorCode::PathTooLong, "strategy tree exhausted");
    return tree_.label(node_);
  }
  void observe(Symbol y) override { node_ = tree_.child(node_, y); }
  std::unique_ptr<OnlineStrategy> clone() const override { return std::make_unique<TreeStrategy>(*this); }

 private:
  StrategyTree tree_;
  std::size_t node_ = 0;
};

class FunctionStrategy final : public OnlineStrategy {
 public:
  explicit FunctionStrategy(StrategyFn h) : h_(std::move(h)) {}
  void reset() override { past_.clear(); }
  Symbol next_input() override { return h_(past_.size() + 1, past_); }
  void observe(Symbol y) override { past_.push_back(y); }
  std::unique_ptr<OnlineStrategy> clone() const override { return std::make_unique<FunctionStrategy>(*this); }

 private:
  StrategyFn h_;
  std::vector<Symbol> past_;
};

class ConstantStrategy final : public OnlineStrategy {
 public:
  explicit ConstantStrategy(Symbol x) : x_(x) {}
  void reset() override {}
  Symbol next_input() override { return x_; }
  void observe(Symbol) override {}
  std::unique_ptr<OnlineStrategy> clone() const override { return std::make_unique<ConstantStrategy>(*this); }

 private:
  Symbol x_;
};

class ThresholdStrategy final : public OnlineStrategy {
 public:
  ThresholdStrategy(std::size_t n, const ScoreParams& p)
      : a_(p.a()), other_(smallest_other(p.a())), threshold_(p.threshold(n)), gain_(1.0 - p.p_ba()),
        loss_(-p.p_ba()), b_(p.b()) {}
  void reset() override {
    score_ = 0.0;
    current_ = a_;
  }
  Symbol next_input() override {
    current_ = std::abs(score_) <= threshold_ ? a_ : other_;
    return current_;
  }
  void observe(Symbol y) override {
    if (current_ == a_) score_ = score_ + (y == b_ ? gain_ : loss_);
  }
  std::unique_ptr<OnlineStrategy> clone() const override { return std::make_unique<ThresholdStrategy>(*this); }

 private:
  Symbol a_;
  Symbol other_;
  double threshold_;
  double gain_;
  double loss_;
  Symbol b_;
  double score_ = 0.0;
  Symbol current_ = 0;
};

}  // namespace

std::unique_ptr<OnlineStrategy> make_tree_strategy(StrategyTree tree) {
  return std::make_unique<TreeStrategy>(std::move(tree));
}

std::unique_ptr<OnlineStrategy> make_function_strategy(StrategyFn h) {
  return std::make_unique<FunctionStrategy>(std::move(h));
}

std::unique_ptr<OnlineStrategy> make_constant_strategy(Symbol x) { return std::make_unique<ConstantStrategy>(x); }

std::unique_ptr<OnlineStrategy> make_threshold_strategy(std::size_t n, const ScoreParams& p) {
  if (p.dmc().input().size() < 2) throw Error(ErrorCode::SingletonInputAlphabet, "h* needs a symbol other than a");
  return std::make_unique<ThresholdStrategy>(n, p);
}

}  // namespace feedtype
