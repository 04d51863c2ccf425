#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentinel/content_event.hpp"
#include "sentinel/types.hpp"

namespace sentinel {

/// Hoeffding confidence radius: eps = sqrt(range^2 ln(1/delta) / (2n)).
/// For binary classification with information gain, range = 1.
double hoeffding_bound(double range, double delta, double n);

/// Entropy in bits of a two-class count vector; zero on empty or pure.
double entropy_bits(const ClassCounts& counts);

/// Information gain of a presence/absence split: totals are the leaf class
/// counts, present the class counts among instances carrying the attribute
/// (weight > 0). Absence mass is derived as totals - present.
double info_gain(const ClassCounts& totals, const ClassCounts& present);

/// Total order on candidates: higher gain first, then lower attribute id.
/// The empty candidate (kNoAttribute) loses to every real one.
bool candidate_better(const SplitCandidate& a, const SplitCandidate& b);

/// Folds c into a running (best, second) pair. Merging per-shard pairs this
/// way yields the same pair as one pass over the union of candidates.
void merge_candidate(SplitCandidate& best, SplitCandidate& second, const SplitCandidate& c);

struct HoeffdingParams {
  double split_delta = 1e-7;
  double tie_tau = 0.05;
  std::uint64_t grace = 200;
};

/// The split rule shared by the sequential tree and the distributed
/// aggregator, so both resolve an attempt identically: split when the gain
/// gap beats the Hoeffding bound or the bound has shrunk below the tie
/// threshold. A missing second candidate counts as zero merit, and a best
/// candidate with no positive gain never splits.
bool split_decision(const SplitCandidate& best, const SplitCandidate& second, double n,
                    const HoeffdingParams& params);

/// Decision-tree structure plus per-leaf class counts. Internal nodes test
/// attribute presence (weight > 0): child 0 = absent, child 1 = present.
/// Fresh leaves start empty and fall back to the majority their parent had
/// at split time.
class TreeModel {
 public:
  struct Node {
    bool leaf = true;
    std::uint32_t split_attr = 0;
    std::int32_t child[2] = {-1, -1};
    ClassCounts counts{0.0, 0.0};
    Sentiment fallback = Sentiment::Negative;
    std::uint64_t leaf_id = 0;
    double seen_since_attempt = 0.0;
  };

  TreeModel();

  std::int32_t sort_to_leaf(const SparseInstance& instance) const;
  Sentiment majority(std::int32_t node) const;
  Sentiment predict(const SparseInstance& instance) const;

  /// Turns a leaf into an internal node testing `attr`; returns the two
  /// fresh child leaves (absent, present).
  std::pair<std::int32_t, std::int32_t> split(std::int32_t leaf, std::uint32_t attr);

  Node& node(std::int32_t i) { return nodes_[static_cast<std::size_t>(i)]; }
  const Node& node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::int32_t leaf_by_id(std::uint64_t leaf_id) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  std::size_t depth() const;

  /// Canonical preorder rendering of splits and leaf class counts; equal
  /// strings mean structurally identical trees.
  std::string structure_string() const;
  ModelSummary summary(std::string learner) const;

 private:
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, std::int32_t> leaf_index_;
  std::uint64_t next_leaf_id_ = 1;
};

/// Sequential VFDT-style Hoeffding tree for sparse binary-presence
/// attributes. Leaves keep sufficient statistics only; no instance is ever
/// retained, so state grows with the node count and observed attribute set,
/// never with stream length.
class HoeffdingTree {
 public:
  explicit HoeffdingTree(HoeffdingParams params = {});

  void train(const SparseInstance& instance);  // throws if unlabeled
  Sentiment predict(const SparseInstance& instance) const;

  const TreeModel& model() const { return model_; }
  const HoeffdingParams& params() const { return params_; }
  ModelSummary summary() const { return model_.summary("ht"); }

  /// Per-leaf presence statistics for one attribute (tests/conservation).
  const std::unordered_map<std::uint32_t, ClassCounts>* leaf_presence(std::int32_t node) const;

  std::uint64_t state_entries() const;

 private:
  void attempt_split(std::int32_t leaf);

  TreeModel model_;
  std::unordered_map<std::int32_t, std::unordered_map<std::uint32_t, ClassCounts>> presence_;
  HoeffdingParams params_;
};

}  // namespace sentinel
