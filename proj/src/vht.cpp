#include "sentinel/vht.hpp"

#include <limits>
#include <stdexcept>

namespace sentinel {

namespace {
constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();
}

ModelAggregatorState::ModelAggregatorState(VhtParams params) : params_(params) {
  if (params_.local_parallelism < 1)
    throw std::invalid_argument("vht: local parallelism must be >= 1");
}

ModelAggregatorState::InstanceOutcome ModelAggregatorState::aggregate_instance(
    const SparseInstance& instance, bool train) {
  InstanceOutcome out;
  out.predicted = tree_.predict(instance);
  if (!train) return out;
  if (!instance.label) throw std::invalid_argument("vht: training instance has no label");

  std::int32_t leaf = tree_.sort_to_leaf(instance);
  TreeModel::Node& n = tree_.node(leaf);
  std::size_t c = class_index(*instance.label);
  n.counts[c] += 1.0;
  n.seen_since_attempt += 1.0;

  out.attribute_events.reserve(instance.features.size());
  for (const auto& [attr, w] : instance.features) {
    out.attribute_events.push_back(
        AttributePayload{n.leaf_id, attr, w > 0.0, *instance.label, 1.0});
  }

  bool impure = n.counts[0] > 0.0 && n.counts[1] > 0.0;
  bool pending = pending_.count(n.leaf_id) > 0;
  if (n.seen_since_attempt >= static_cast<double>(params_.tree.grace) && impure && !pending) {
    n.seen_since_attempt = 0.0;
    Pending p;
    p.attempt = next_attempt_++;
    p.totals = n.counts;
    p.deadline =
        params_.timeout_events ? events_seen_ + *params_.timeout_events : kNever;
    pending_.emplace(n.leaf_id, p);
    out.compute = ComputePayload{n.leaf_id, p.attempt, p.totals};
  }
  return out;
}

ModelAggregatorState::Decision ModelAggregatorState::receive_local_result(
    const LocalResultPayload& result) {
  auto it = pending_.find(result.leaf);
  if (it == pending_.end() || it->second.attempt != result.attempt) {
    ++stale_results_;
    return {};
  }
  Pending& p = it->second;
  merge_candidate(p.best, p.second, result.best);
  merge_candidate(p.best, p.second, result.second);
  p.responses += 1;
  if (p.responses < params_.local_parallelism) return {};
  return finalize(result.leaf, p);
}

ModelAggregatorState::Decision ModelAggregatorState::handle_timeout(std::uint64_t leaf,
                                                                    std::uint64_t now_events) {
  auto it = pending_.find(leaf);
  if (it == pending_.end()) return {};
  if (it->second.deadline >= now_events) return {};
  return finalize(leaf, it->second);
}

std::vector<std::uint64_t> ModelAggregatorState::expired_attempts(std::uint64_t now_events) const {
  std::vector<std::uint64_t> out;
  for (const auto& [leaf, p] : pending_) {
    if (p.deadline < now_events) out.push_back(leaf);
  }
  return out;
}

ModelAggregatorState::Decision ModelAggregatorState::finalize(std::uint64_t leaf, Pending& p) {
  Decision d;
  d.attempt_closed = true;
  d.leaf = leaf;
  double n = p.totals[0] + p.totals[1];
  if (split_decision(p.best, p.second, n, params_.tree)) {
    std::int32_t node = tree_.leaf_by_id(leaf);
    if (node >= 0) {
      tree_.split(node, p.best.attr);
      d.split = true;
      d.split_attr = p.best.attr;
    }
  }
  pending_.erase(leaf);
  return d;
}

void LocalStatState::local_update(const AttributePayload& ev) {
  stats_[ev.leaf][ev.attr][ev.present ? 1 : 0][class_index(ev.label)] += ev.weight;
}

LocalResultPayload LocalStatState::local_compute(const ComputePayload& ev,
                                                 std::uint32_t responder) const {
  LocalResultPayload out;
  out.leaf = ev.leaf;
  out.attempt = ev.attempt;
  out.responder = responder;
  auto it = stats_.find(ev.leaf);
  if (it == stats_.end()) return out;  // empty-result marker
  // std::map keeps attributes in ascending id order, matching the
  // enumeration order of the sequential tree's attempt.
  for (const auto& [attr, cell] : it->second) {
    SplitCandidate c{attr, info_gain(ev.class_totals, cell[1])};
    merge_candidate(out.best, out.second, c);
  }
  return out;
}

void LocalStatState::drop_leaf(std::uint64_t leaf) { stats_.erase(leaf); }

const std::map<std::uint32_t, LocalStatState::Cell>* LocalStatState::leaf_stats(
    std::uint64_t leaf) const {
  auto it = stats_.find(leaf);
  if (it == stats_.end()) return nullptr;
  return &it->second;
}

std::uint64_t LocalStatState::state_entries() const {
  std::uint64_t n = 0;
  for (const auto& [_, attrs] : stats_) n += attrs.size();
  return n;
}

std::vector<std::uint32_t> LocalStatState::held_attributes() const {
  std::vector<std::uint32_t> out;
  for (const auto& [_, attrs] : stats_) {
    for (const auto& [attr, __] : attrs) out.push_back(attr);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Engine handlers
// ---------------------------------------------------------------------------

void VhtAggregatorBolt::on_event(const ContentEvent& ev, Emitter& out) {
  state_.note_event();

  if (const auto* inst = ev.get_if<InstancePayload>()) {
    ++instances_;
    auto outcome = state_.aggregate_instance(inst->instance, inst->train);
    PredictionPayload pred;
    pred.predicted = outcome.predicted;
    pred.actual = inst->instance.label;
    pred.trained = inst->train;
    pred.model = state_.summary();
    out.emit(kPredictionStream, ContentEvent{pred, std::nullopt});
    for (auto& ae : outcome.attribute_events) {
      out.emit(kAttributeStream, ContentEvent{ae, key_bytes(ae.attr)});
    }
    if (outcome.compute) {
      out.emit(kControlStream, ContentEvent{*outcome.compute, std::nullopt});
    }
  } else if (const auto* res = ev.get_if<LocalResultPayload>()) {
    emit_decision(state_.receive_local_result(*res), out);
  }

  for (std::uint64_t leaf : state_.expired_attempts(state_.events_seen())) {
    emit_decision(state_.handle_timeout(leaf, state_.events_seen()), out);
  }
}

void VhtAggregatorBolt::emit_decision(const ModelAggregatorState::Decision& d, Emitter& out) {
  if (!d.attempt_closed || !d.split) return;
  // Shards drop the split leaf's statistics; its children start empty.
  ControlPayload drop{ControlPayload::Kind::DropLeafStats, d.leaf, false};
  out.emit(kControlStream, ContentEvent{drop, std::nullopt});
}

void LocalStatBolt::on_event(const ContentEvent& ev, Emitter& out) {
  if (const auto* attr = ev.get_if<AttributePayload>()) {
    state_.local_update(*attr);
  } else if (const auto* comp = ev.get_if<ComputePayload>()) {
    LocalResultPayload res = state_.local_compute(*comp, index_);
    out.emit(kLocalResultStream, ContentEvent{res, key_bytes(res.leaf)});
  } else if (const auto* ctl = ev.get_if<ControlPayload>()) {
    if (ctl->kind == ControlPayload::Kind::DropLeafStats) state_.drop_leaf(ctl->leaf);
  }
}

}  // namespace sentinel
