#include <doctest.h>

#include <stdexcept>
#include <map>
#include <set>
#include <vector>

#include "sentinel/vht.hpp"
#include "test_support.hpp"

using namespace sentinel;
using namespace sentinel::testing;

namespace {

SparseInstance inst(std::vector<std::pair<std::uint32_t, double>> features, Sentiment label) {
  SparseInstance i;
  i.features = std::move(features);
  i.label = label;
  return i;
}

VhtParams params_with(std::uint32_t parallelism, std::uint64_t grace = 200,
                      std::optional<std::uint64_t> timeout = std::nullopt) {
  VhtParams p;
  p.local_parallelism = parallelism;
  p.tree.grace = grace;
  p.timeout_events = timeout;
  return p;
}

}  // namespace

TEST_CASE("aggregator: untrained state predicts the default and ships one event per feature") {
  ModelAggregatorState agg(params_with(2));
  auto outcome = agg.aggregate_instance(inst({{3, 1.0}, {9, 0.0}, {12, 2.5}}, Sentiment::Positive),
                                        true);
  CHECK(outcome.predicted == Sentiment::Negative);
  REQUIRE(outcome.attribute_events.size() == 3);
  CHECK(outcome.attribute_events[0].attr == 3);
  CHECK(outcome.attribute_events[0].present);
  CHECK_FALSE(outcome.attribute_events[1].present);  // zero weight travels as absent
  CHECK(outcome.attribute_events[2].label == Sentiment::Positive);
  CHECK(outcome.attribute_events[0].leaf == outcome.attribute_events[2].leaf);
  CHECK_FALSE(outcome.compute.has_value());
}

TEST_CASE("aggregator: evaluation-only instances produce no statistics traffic") {
  ModelAggregatorState agg(params_with(2));
  auto outcome = agg.aggregate_instance(inst({{1, 1.0}}, Sentiment::Positive), false);
  CHECK(outcome.attribute_events.empty());
  CHECK_FALSE(outcome.compute.has_value());
}

TEST_CASE("aggregator: attribute routing is a stable function of the attribute id") {
  std::uint64_t cursor = 0;
  ContentEvent ev;
  ev.payload = AttributePayload{};
  ev.key = key_bytes(7);
  auto first = route(ev, Grouping::key("attribute"), 4, cursor);
  auto second = route(ev, Grouping::key("attribute"), 4, cursor);
  REQUIRE(first.size() == 1);
  CHECK(first == second);
  CHECK(first[0] == stable_hash64(key_bytes(7)) % 4);
}

TEST_CASE("aggregator: grace period on an impure leaf emits exactly one compute request") {
  ModelAggregatorState agg(params_with(3, 4));
  std::optional<ComputePayload> compute;
  for (int i = 0; i < 4; ++i) {
    auto outcome = agg.aggregate_instance(
        inst({{1, 1.0}}, i % 2 == 0 ? Sentiment::Positive : Sentiment::Negative), true);
    if (outcome.compute) {
      CHECK_FALSE(compute.has_value());
      compute = outcome.compute;
    }
  }
  REQUIRE(compute.has_value());
  CHECK(compute->attempt == 1);
  CHECK(compute->class_totals[0] + compute->class_totals[1] == 4.0);
  CHECK(agg.pending_attempts() == 1);

  // While the attempt is pending the leaf does not open another one.
  for (int i = 0; i < 8; ++i) {
    auto outcome = agg.aggregate_instance(
        inst({{1, 1.0}}, i % 2 == 0 ? Sentiment::Positive : Sentiment::Negative), true);
    CHECK_FALSE(outcome.compute.has_value());
  }
  CHECK(agg.pending_attempts() == 1);
}

TEST_CASE("local state: updates are additive and isolated per leaf") {
  LocalStatState local;
  AttributePayload ev{1, 5, true, Sentiment::Positive, 1.0};
  local.local_update(ev);
  const auto* stats = local.leaf_stats(1);
  REQUIRE(stats != nullptr);
  CHECK(stats->at(5)[1][class_index(Sentiment::Positive)] == 1.0);

  local.local_update(ev);
  local.local_update(ev);
  CHECK(local.leaf_stats(1)->at(5)[1][class_index(Sentiment::Positive)] == 3.0);

  AttributePayload other{2, 5, false, Sentiment::Negative, 1.0};
  local.local_update(other);
  CHECK(local.leaf_stats(1)->at(5)[1][class_index(Sentiment::Positive)] == 3.0);
  CHECK(local.leaf_stats(2)->at(5)[0][class_index(Sentiment::Negative)] == 1.0);
}

TEST_CASE("local compute: shard with nothing for the leaf sends the empty marker") {
  LocalStatState local;
  auto res = local.local_compute(ComputePayload{9, 1, {10.0, 10.0}}, 2);
  CHECK(res.leaf == 9);
  CHECK(res.attempt == 1);
  CHECK(res.responder == 2);
  CHECK(res.best.attr == kNoAttribute);
  CHECK(res.second.attr == kNoAttribute);
}

TEST_CASE("local compute: a single held attribute is best, second stays empty") {
  LocalStatState local;
  local.local_update(AttributePayload{1, 4, true, Sentiment::Positive, 1.0});
  auto res = local.local_compute(ComputePayload{1, 1, {1.0, 1.0}}, 0);
  CHECK(res.best.attr == 4);
  CHECK(res.second.attr == kNoAttribute);
}

TEST_CASE("local compute: a perfectly separating attribute reports one full bit") {
  LocalStatState local;
  for (int i = 0; i < 30; ++i)
    local.local_update(AttributePayload{1, 4, true, Sentiment::Positive, 1.0});
  auto res = local.local_compute(ComputePayload{1, 3, {30.0, 30.0}}, 0);
  CHECK(res.best.attr == 4);
  CHECK(res.best.gain == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate parallelism one matches the sequential attempt") {
  // Same statistics through the sequential tree and through the
  // aggregate/compute/result message cycle must split identically.
  HoeffdingParams hp;
  hp.grace = 100;

  auto stream = [](int n) {
    std::vector<SparseInstance> out;
    DeterministicRng rng(77);
    for (int i = 0; i < n; ++i) {
      bool positive = rng.bernoulli(0.5);
      std::vector<std::pair<std::uint32_t, double>> f;
      f.emplace_back(static_cast<std::uint32_t>(rng.below(5)), 1.0);
      if (positive && f[0].first != 8) f.emplace_back(8, 1.0);
      out.push_back(inst(std::move(f), positive ? Sentiment::Positive : Sentiment::Negative));
    }
    return out;
  }(400);

  HoeffdingTree sequential(hp);
  for (const auto& i : stream) sequential.train(i);

  VhtParams vp;
  vp.tree = hp;
  vp.local_parallelism = 1;
  ModelAggregatorState agg(vp);
  LocalStatState local;
  for (const auto& i : stream) {
    auto outcome = agg.aggregate_instance(i, true);
    for (const auto& ev : outcome.attribute_events) local.local_update(ev);
    if (outcome.compute) {
      auto res = local.local_compute(*outcome.compute, 0);
      auto decision = agg.receive_local_result(res);
      if (decision.split) local.drop_leaf(decision.leaf);
    }
  }
  CHECK(agg.tree().structure_string() == sequential.model().structure_string());
}

TEST_CASE("merging disjoint shard results equals one pass over the union") {
  DeterministicRng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    ClassCounts totals{40.0, 40.0};
    // Random per-attribute presence profiles split over 4 shards by id hash.
    std::map<std::uint32_t, ClassCounts> presence;
    for (std::uint32_t a = 0; a < 24; ++a) {
      presence[a] = ClassCounts{static_cast<double>(rng.below(41)),
                                static_cast<double>(rng.below(41))};
    }

    LocalStatState shards[4];
    for (const auto& [attr, cell] : presence) {
      std::uint32_t shard = static_cast<std::uint32_t>(stable_hash64(key_bytes(attr)) % 4);
      for (int c = 0; c < 2; ++c) {
        for (int k = 0; k < static_cast<int>(cell[static_cast<std::size_t>(c)]); ++k) {
          shards[shard].local_update(AttributePayload{1, attr, true,
                                                      static_cast<Sentiment>(c), 1.0});
        }
      }
    }

    ComputePayload compute{1, 1, totals};
    SplitCandidate best, second;
    for (int s = 0; s < 4; ++s) {
      auto res = shards[s].local_compute(compute, static_cast<std::uint32_t>(s));
      merge_candidate(best, second, res.best);
      merge_candidate(best, second, res.second);
    }

    SplitCandidate oracle_best, oracle_second;
    for (const auto& [attr, cell] : presence) {
      merge_candidate(oracle_best, oracle_second, SplitCandidate{attr, info_gain(totals, cell)});
    }
    CHECK(best.attr == oracle_best.attr);
    CHECK(best.gain == oracle_best.gain);
    CHECK(second.attr == oracle_second.attr);
    CHECK(second.gain == oracle_second.gain);
  }
}

TEST_CASE("stale attempt ids are discarded without touching the tree") {
  ModelAggregatorState agg(params_with(2, 4));
  for (int i = 0; i < 4; ++i) {
    agg.aggregate_instance(inst({{1, 1.0}}, i % 2 == 0 ? Sentiment::Positive : Sentiment::Negative),
                           true);
  }
  REQUIRE(agg.pending_attempts() == 1);
  std::string before = agg.tree().structure_string();

  LocalResultPayload stale;
  stale.leaf = 1;
  stale.attempt = 99;  // wrong attempt id
  stale.best = SplitCandidate{4, 1.0};
  auto d1 = agg.receive_local_result(stale);
  CHECK_FALSE(d1.attempt_closed);

  LocalResultPayload unknown;
  unknown.leaf = 424242;  // no such leaf
  unknown.attempt = 1;
  auto d2 = agg.receive_local_result(unknown);
  CHECK_FALSE(d2.attempt_closed);

  CHECK(agg.stale_results() == 2);
  CHECK(agg.tree().structure_string() == before);
  CHECK(agg.pending_attempts() == 1);
}

TEST_CASE("timeout with zero responders closes the attempt without splitting") {
  ModelAggregatorState agg(params_with(2, 4, 10));
  for (int i = 0; i < 4; ++i) {
    agg.aggregate_instance(inst({{1, 1.0}}, i % 2 == 0 ? Sentiment::Positive : Sentiment::Negative),
                           true);
  }
  REQUIRE(agg.pending_attempts() == 1);
  for (int i = 0; i < 20; ++i) agg.note_event();
  auto expired = agg.expired_attempts(agg.events_seen());
  REQUIRE(expired.size() == 1);
  auto decision = agg.handle_timeout(expired[0], agg.events_seen());
  CHECK(decision.attempt_closed);
  CHECK_FALSE(decision.split);
  CHECK(agg.pending_attempts() == 0);

  // The leaf resumes accumulating and can attempt again later.
  for (int i = 0; i < 4; ++i) {
    auto outcome = agg.aggregate_instance(
        inst({{1, 1.0}}, i % 2 == 0 ? Sentiment::Positive : Sentiment::Negative), true);
    if (i == 3) CHECK(outcome.compute.has_value());
  }
}

TEST_CASE("timeouts disabled: attempts never expire") {
  ModelAggregatorState agg(params_with(2, 4, std::nullopt));
  for (int i = 0; i < 4; ++i) {
    agg.aggregate_instance(inst({{1, 1.0}}, i % 2 == 0 ? Sentiment::Positive : Sentiment::Negative),
                           true);
  }
  REQUIRE(agg.pending_attempts() == 1);
  for (int i = 0; i < 100000; ++i) agg.note_event();
  CHECK(agg.expired_attempts(agg.events_seen()).empty());
}

TEST_CASE("timeout after the winner responded splits like the full-response case") {
  auto build = [] {
    ModelAggregatorState agg(params_with(2, 200, 50));
    DeterministicRng rng(9);
    for (int i = 0; i < 200; ++i) {
      bool positive = rng.bernoulli(0.5);
      std::vector<std::pair<std::uint32_t, double>> f;
      f.emplace_back(static_cast<std::uint32_t>(rng.below(4)), 1.0);
      if (positive && f[0].first != 9) f.emplace_back(9, 1.0);
      std::sort(f.begin(), f.end());
      agg.aggregate_instance(inst(std::move(f),
                                  positive ? Sentiment::Positive : Sentiment::Negative),
                             true);
    }
    return agg;
  };

  // Winner shard holds the separating attribute 9 with a near-1-bit gain.
  LocalResultPayload winner;
  winner.leaf = 1;
  winner.attempt = 1;
  winner.responder = 0;
  winner.best = SplitCandidate{9, 0.95};
  winner.second = SplitCandidate{2, 0.01};

  LocalResultPayload loser;
  loser.leaf = 1;
  loser.attempt = 1;
  loser.responder = 1;
  loser.best = SplitCandidate{1, 0.02};
  loser.second = SplitCandidate{3, 0.005};

  ModelAggregatorState full = build();
  REQUIRE(full.pending_attempts() == 1);
  CHECK_FALSE(full.receive_local_result(winner).attempt_closed);
  auto full_decision = full.receive_local_result(loser);
  REQUIRE(full_decision.attempt_closed);
  REQUIRE(full_decision.split);

  ModelAggregatorState straggler = build();
  CHECK_FALSE(straggler.receive_local_result(winner).attempt_closed);
  for (int i = 0; i < 100; ++i) straggler.note_event();
  auto expired = straggler.expired_attempts(straggler.events_seen());
  REQUIRE(expired.size() == 1);
  auto timeout_decision = straggler.handle_timeout(expired[0], straggler.events_seen());
  REQUIRE(timeout_decision.attempt_closed);
  CHECK(timeout_decision.split == full_decision.split);
  CHECK(timeout_decision.split_attr == full_decision.split_attr);

  // A result arriving after the timeout decision is stale and ignored.
  auto late = straggler.receive_local_result(loser);
  CHECK_FALSE(late.attempt_closed);
  CHECK(straggler.stale_results() == 1);
}

TEST_CASE("engine-driven vertical tree equals the sequential tree") {
  auto instances = make_labeled_instances(2500, 4242, 300, 250, 150);
  auto [seq_predictions, seq_structure] = run_sequential_ht(instances);

  for (std::uint32_t p : {1u, 2u}) {
    CAPTURE(p);
    auto vht = run_vht_deterministic(instances, p);
    CHECK(vht.predictions == seq_predictions);
    CHECK(vht.structure == seq_structure);
  }
}

TEST_CASE("equivalence survives a mid-stream concept flip") {
  // The drift forces post-change splits while older attempts resolve, the
  // ugliest interleaving for the message protocol.
  auto instances = make_labeled_instances(3000, 555, 200, 150, 100, 1500);
  auto [seq_predictions, seq_structure] = run_sequential_ht(instances);
  auto vht = run_vht_deterministic(instances, 3);
  CHECK(vht.predictions == seq_predictions);
  CHECK(vht.structure == seq_structure);
}

TEST_CASE("statistics are conserved across shards at quiescence") {
  auto instances = make_labeled_instances(1500, 99, 200, 150, 100);
  HoeffdingParams hp;
  HoeffdingTree sequential(hp);
  for (const auto& i : instances) sequential.train(i);

  auto vht = run_vht_deterministic(instances, 3, hp);
  REQUIRE(vht.structure == sequential.model().structure_string());

  // Walk both trees in lockstep; for every live leaf, the shard-summed
  // presence counts must equal the sequential leaf statistics.
  const TreeModel& vt = vht.aggregator->tree();
  const TreeModel& st = sequential.model();
  std::vector<std::pair<std::int32_t, std::int32_t>> stack{{0, 0}};
  std::size_t leaves_checked = 0;
  while (!stack.empty()) {
    auto [vi, si] = stack.back();
    stack.pop_back();
    const auto& vn = vt.node(vi);
    const auto& sn = st.node(si);
    REQUIRE(vn.leaf == sn.leaf);
    if (!vn.leaf) {
      stack.push_back({vn.child[0], sn.child[0]});
      stack.push_back({vn.child[1], sn.child[1]});
      continue;
    }
    ++leaves_checked;
    const auto* seq_stats = sequential.leaf_presence(si);
    std::map<std::uint32_t, ClassCounts> shard_sum;
    for (const auto* local : vht.locals) {
      if (const auto* stats = local->leaf_stats(vn.leaf_id)) {
        for (const auto& [attr, cell] : *stats) {
          shard_sum[attr][0] += cell[1][0];
          shard_sum[attr][1] += cell[1][1];
        }
      }
    }
    if (seq_stats == nullptr) {
      for (const auto& [attr, counts] : shard_sum) CHECK(counts[0] + counts[1] == 0.0);
      continue;
    }
    std::map<std::uint32_t, ClassCounts> seq_sorted(seq_stats->begin(), seq_stats->end());
    // Shards may hold zero-weight (absent) cells the sequential tree never
    // stores, so compare presence mass attribute by attribute.
    for (const auto& [attr, counts] : shard_sum) {
      ClassCounts expected{0.0, 0.0};
      if (auto it = seq_sorted.find(attr); it != seq_sorted.end()) expected = it->second;
      CHECK(counts[0] == expected[0]);
      CHECK(counts[1] == expected[1]);
    }
    for (const auto& [attr, expected] : seq_sorted) {
      REQUIRE(shard_sum.count(attr) == 1);
      CHECK(shard_sum[attr][0] == expected[0]);
      CHECK(shard_sum[attr][1] == expected[1]);
    }
  }
  CHECK(leaves_checked == st.leaf_count());
}

TEST_CASE("each attribute lives on exactly one shard for the whole run") {
  auto instances = make_labeled_instances(1200, 7, 200, 150, 100);
  auto vht = run_vht_deterministic(instances, 4);

  std::map<std::uint32_t, std::set<std::size_t>> attr_shards;
  for (std::size_t s = 0; s < vht.locals.size(); ++s) {
    for (std::uint32_t attr : vht.locals[s]->held_attributes()) {
      attr_shards[attr].insert(s);
    }
  }
  REQUIRE(!attr_shards.empty());
  for (const auto& [attr, shards] : attr_shards) {
    std::uint32_t which = attr;
    CAPTURE(which);
    CHECK(shards.size() == 1);
    CHECK(*shards.begin() == stable_hash64(key_bytes(attr)) % 4);
  }
}

TEST_CASE("predictions stay available while a split attempt is pending") {
  ModelAggregatorState agg(params_with(4, 4));
  int predictions = 0;
  for (int i = 0; i < 40; ++i) {
    auto outcome = agg.aggregate_instance(
        inst({{1, 1.0}}, i % 2 == 0 ? Sentiment::Positive : Sentiment::Negative), true);
    ++predictions;
    (void)outcome.predicted;
  }
  CHECK(predictions == 40);
  CHECK(agg.pending_attempts() == 1);  // still open: no shard ever responded
}
