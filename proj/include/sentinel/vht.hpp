#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "sentinel/content_event.hpp"
#include "sentinel/hoeffding_tree.hpp"
#include "sentinel/topology.hpp"
#include "sentinel/types.hpp"

namespace sentinel {

struct VhtParams {
  HoeffdingParams tree;
  std::uint32_t local_parallelism = 1;
  /// Pending split attempts expire after this many aggregator-processed
  /// events without resolution; nullopt = wait forever.
  std::optional<std::uint64_t> timeout_events = 2000;
};

/// Model-aggregator side of the Vertical Hoeffding Tree: owns the tree
/// structure and per-leaf class counts (so prediction is purely local),
/// plus the list of leaves with an outstanding split attempt. Per-attribute
/// sufficient statistics live in the local-statistic shards.
class ModelAggregatorState {
 public:
  explicit ModelAggregatorState(VhtParams params);

  struct InstanceOutcome {
    Sentiment predicted = Sentiment::Negative;
    std::vector<AttributePayload> attribute_events;
    std::optional<ComputePayload> compute;
  };

  /// Prequential step: predicts from the current tree, then (for training
  /// instances) updates the leaf and hands back one attribute event per
  /// feature, plus a compute request when the leaf's grace period elapsed
  /// with an impure class distribution and no attempt already pending.
  InstanceOutcome aggregate_instance(const SparseInstance& instance, bool train);

  struct Decision {
    bool attempt_closed = false;
    bool split = false;
    std::uint64_t leaf = 0;
    std::uint32_t split_attr = kNoAttribute;
  };

  /// Merges one shard's candidates into the pending attempt; decides once
  /// all shards responded. Results for unknown leaves or stale attempt ids
  /// are counted and ignored.
  Decision receive_local_result(const LocalResultPayload& result);

  /// Resolves an expired attempt with the candidates received so far.
  Decision handle_timeout(std::uint64_t leaf, std::uint64_t now_events);

  /// Leaves whose attempt deadline passed at `now_events`.
  std::vector<std::uint64_t> expired_attempts(std::uint64_t now_events) const;

  void note_event() { ++events_seen_; }
  std::uint64_t events_seen() const { return events_seen_; }

  const TreeModel& tree() const { return tree_; }
  const VhtParams& params() const { return params_; }
  ModelSummary summary() const { return tree_.summary("vht"); }
  std::size_t pending_attempts() const { return pending_.size(); }
  std::uint64_t stale_results() const { return stale_results_; }

 private:
  struct Pending {
    std::uint64_t attempt = 0;
    ClassCounts totals{0.0, 0.0};  // frozen at attempt time
    SplitCandidate best;
    SplitCandidate second;
    std::uint32_t responses = 0;
    std::uint64_t deadline = 0;  // events_seen_ horizon; max() = never
  };

  Decision finalize(std::uint64_t leaf, Pending& p);

  VhtParams params_;
  TreeModel tree_;
  std::unordered_map<std::uint64_t, Pending> pending_;  // leaf id -> attempt
  std::uint64_t next_attempt_ = 1;
  std::uint64_t events_seen_ = 0;
  std::uint64_t stale_results_ = 0;
};

/// One shard of per-(leaf, attribute) sufficient statistics. Key grouping
/// on the attribute id guarantees each attribute's counts live in exactly
/// one shard for the whole run.
class LocalStatState {
 public:
  void local_update(const AttributePayload& ev);

  /// Best and second-best locally held attributes of the leaf by
  /// information gain; shards holding nothing for the leaf return empty
  /// candidates so the aggregator's responder count always reaches the
  /// shard parallelism.
  LocalResultPayload local_compute(const ComputePayload& ev, std::uint32_t responder) const;

  void drop_leaf(std::uint64_t leaf);

  // presence/absence cells per (leaf, attr, class); [1] = present.
  using Cell = std::array<ClassCounts, 2>;
  const std::map<std::uint32_t, Cell>* leaf_stats(std::uint64_t leaf) const;
  std::size_t leaf_count() const { return stats_.size(); }
  std::uint64_t state_entries() const;
  std::vector<std::uint32_t> held_attributes() const;

 private:
  std::unordered_map<std::uint64_t, std::map<std::uint32_t, Cell>> stats_;
};

// ---------------------------------------------------------------------------
// Engine handlers
// ---------------------------------------------------------------------------

inline constexpr std::string_view kAttributeStream = "attribute";
inline constexpr std::string_view kControlStream = "control";
inline constexpr std::string_view kLocalResultStream = "local-result";
inline constexpr std::string_view kPredictionStream = "predictions";

/// Bolt wrapper around ModelAggregatorState: consumes instance events,
/// emits attribute/control events toward the shards and a prediction per
/// instance, and feeds local results and timeouts back into the state.
class VhtAggregatorBolt : public BoltHandler {
 public:
  explicit VhtAggregatorBolt(VhtParams params) : state_(params) {}

  void on_event(const ContentEvent& ev, Emitter& out) override;

  const ModelAggregatorState& state() const { return state_; }
  std::uint64_t instances_seen() const { return instances_; }

 private:
  void emit_decision(const ModelAggregatorState::Decision& d, Emitter& out);

  ModelAggregatorState state_;
  std::uint64_t instances_ = 0;
};

class LocalStatBolt : public BoltHandler {
 public:
  explicit LocalStatBolt(std::uint32_t index) : index_(index) {}

  void on_event(const ContentEvent& ev, Emitter& out) override;

  const LocalStatState& state() const { return state_; }

 private:
  std::uint32_t index_;
  LocalStatState state_;
};

}  // namespace sentinel
