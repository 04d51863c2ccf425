#include "sentinel/hoeffding_tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sentinel {

double hoeffding_bound(double range, double delta, double n) {
  if (!(n >= 1.0)) throw std::invalid_argument("hoeffding_bound: n must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("hoeffding_bound: delta in (0,1]");
  if (!(range > 0.0)) throw std::invalid_argument("hoeffding_bound: range must be > 0");
  return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * n));
}

double entropy_bits(const ClassCounts& counts) {
  double n = counts[0] + counts[1];
  if (n <= 0.0 || counts[0] <= 0.0 || counts[1] <= 0.0) return 0.0;
  double p0 = counts[0] / n;
  double p1 = counts[1] / n;
  return -(p0 * std::log2(p0) + p1 * std::log2(p1));
}

double info_gain(const ClassCounts& totals, const ClassCounts& present) {
  double n = totals[0] + totals[1];
  if (n <= 0.0) return 0.0;
  ClassCounts absent{totals[0] - present[0], totals[1] - present[1]};
  double n_present = present[0] + present[1];
  double n_absent = absent[0] + absent[1];
  double conditional = (n_present / n) * entropy_bits(present) + (n_absent / n) * entropy_bits(absent);
  return entropy_bits(totals) - conditional;
}

bool candidate_better(const SplitCandidate& a, const SplitCandidate& b) {
  if (a.attr == kNoAttribute) return false;
  if (b.attr == kNoAttribute) return true;
  if (a.gain != b.gain) return a.gain > b.gain;
  return a.attr < b.attr;
}

void merge_candidate(SplitCandidate& best, SplitCandidate& second, const SplitCandidate& c) {
  if (candidate_better(c, best)) {
    second = best;
    best = c;
  } else if (candidate_better(c, second)) {
    second = c;
  }
}

bool split_decision(const SplitCandidate& best, const SplitCandidate& second, double n,
                    const HoeffdingParams& params) {
  if (best.attr == kNoAttribute || !(best.gain > 0.0)) return false;
  double eps = hoeffding_bound(1.0, params.split_delta, n);
  double second_gain = second.attr == kNoAttribute ? 0.0 : std::max(second.gain, 0.0);
  return (best.gain - second_gain > eps) || (eps < params.tie_tau);
}

// ---------------------------------------------------------------------------
// TreeModel
// ---------------------------------------------------------------------------

TreeModel::TreeModel() {
  Node root;
  root.leaf_id = next_leaf_id_++;
  nodes_.push_back(root);
  leaf_index_.emplace(root.leaf_id, 0);
}

std::int32_t TreeModel::sort_to_leaf(const SparseInstance& instance) const {
  std::int32_t i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].leaf) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    i = n.child[instance.has_attribute(n.split_attr) ? 1 : 0];
  }
  return i;
}

Sentiment TreeModel::majority(std::int32_t node) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.counts[0] <= 0.0 && n.counts[1] <= 0.0) return n.fallback;
  return n.counts[class_index(Sentiment::Positive)] > n.counts[class_index(Sentiment::Negative)]
             ? Sentiment::Positive
             : Sentiment::Negative;
}

Sentiment TreeModel::predict(const SparseInstance& instance) const {
  return majority(sort_to_leaf(instance));
}

std::pair<std::int32_t, std::int32_t> TreeModel::split(std::int32_t leaf, std::uint32_t attr) {
  Node& n = nodes_[static_cast<std::size_t>(leaf)];
  if (!n.leaf) throw std::logic_error("tree: split of an internal node");
  Sentiment fallback = majority(leaf);
  leaf_index_.erase(n.leaf_id);

  std::int32_t absent = static_cast<std::int32_t>(nodes_.size());
  std::int32_t present = absent + 1;
  Node child;
  child.fallback = fallback;
  for (int side = 0; side < 2; ++side) {
    child.leaf_id = next_leaf_id_++;
    nodes_.push_back(child);
    leaf_index_.emplace(child.leaf_id, absent + side);
  }
  Node& parent = nodes_[static_cast<std::size_t>(leaf)];  // nodes_ may have reallocated
  parent.leaf = false;
  parent.split_attr = attr;
  parent.child[0] = absent;
  parent.child[1] = present;
  return {absent, present};
}

std::int32_t TreeModel::leaf_by_id(std::uint64_t leaf_id) const {
  auto it = leaf_index_.find(leaf_id);
  if (it == leaf_index_.end()) return -1;
  return it->second;
}

std::size_t TreeModel::leaf_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes_) n += node.leaf ? 1 : 0;
  return n;
}

std::size_t TreeModel::depth() const {
  // Depth of the deepest leaf; iterative to keep recursion out of hot audits.
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.leaf) {
      best = std::max(best, d);
    } else {
      stack.push_back({n.child[0], d + 1});
      stack.push_back({n.child[1], d + 1});
    }
  }
  return best;
}

namespace {
void render(const TreeModel& m, std::int32_t i, std::ostringstream& os) {
  const TreeModel::Node& n = m.node(i);
  if (n.leaf) {
    os << "[" << static_cast<long long>(n.counts[0]) << "|" << static_cast<long long>(n.counts[1])
       << "]";
    return;
  }
  os << "(a" << n.split_attr << " ";
  render(m, n.child[0], os);
  os << " ";
  render(m, n.child[1], os);
  os << ")";
}
}  // namespace

std::string TreeModel::structure_string() const {
  std::ostringstream os;
  render(*this, 0, os);
  return os.str();
}

ModelSummary TreeModel::summary(std::string learner) const {
  ModelSummary s;
  s.learner = std::move(learner);
  s.nodes = node_count();
  s.leaves = leaf_count();
  s.depth = depth();
  for (const auto& n : nodes_) {
    if (!n.leaf) continue;
    s.class_mass[0] += n.counts[0];
    s.class_mass[1] += n.counts[1];
  }
  return s;
}

// ---------------------------------------------------------------------------
// HoeffdingTree
// ---------------------------------------------------------------------------

HoeffdingTree::HoeffdingTree(HoeffdingParams params) : params_(params) {}

void HoeffdingTree::train(const SparseInstance& instance) {
  if (!instance.label) throw std::invalid_argument("hoeffding tree: training instance has no label");
  std::int32_t leaf = model_.sort_to_leaf(instance);
  TreeModel::Node& n = model_.node(leaf);
  std::size_t c = class_index(*instance.label);
  n.counts[c] += 1.0;
  n.seen_since_attempt += 1.0;
  auto& stats = presence_[leaf];
  for (const auto& [attr, w] : instance.features) {
    if (w > 0.0) stats[attr][c] += 1.0;
  }
  bool impure = n.counts[0] > 0.0 && n.counts[1] > 0.0;
  if (n.seen_since_attempt >= static_cast<double>(params_.grace) && impure) attempt_split(leaf);
}

void HoeffdingTree::attempt_split(std::int32_t leaf) {
  TreeModel::Node& n = model_.node(leaf);
  n.seen_since_attempt = 0.0;

  SplitCandidate best, second;
  auto it = presence_.find(leaf);
  if (it != presence_.end()) {
    std::vector<std::uint32_t> attrs;
    attrs.reserve(it->second.size());
    for (const auto& [attr, _] : it->second) attrs.push_back(attr);
    std::sort(attrs.begin(), attrs.end());
    for (std::uint32_t attr : attrs) {
      merge_candidate(best, second, SplitCandidate{attr, info_gain(n.counts, it->second.at(attr))});
    }
  }
  double leaf_n = n.counts[0] + n.counts[1];
  if (!split_decision(best, second, leaf_n, params_)) return;

  model_.split(leaf, best.attr);
  presence_.erase(leaf);
}

Sentiment HoeffdingTree::predict(const SparseInstance& instance) const {
  return model_.predict(instance);
}

const std::unordered_map<std::uint32_t, ClassCounts>* HoeffdingTree::leaf_presence(
    std::int32_t node) const {
  auto it = presence_.find(node);
  if (it == presence_.end()) return nullptr;
  return &it->second;
}

std::uint64_t HoeffdingTree::state_entries() const {
  std::uint64_t n = model_.node_count();
  for (const auto& [_, stats] : presence_) n += stats.size();
  return n;
}

}  // namespace sentinel
