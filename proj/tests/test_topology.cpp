#include <doctest.h>

#include <stdexcept>
#include <algorithm>
#include <map>
#include <set>

#include "sentinel/topology.hpp"
#include "test_support.hpp"

using namespace sentinel;
using namespace sentinel::testing;

namespace {

ContentEvent bytes_event(std::string data, std::optional<std::string> key = std::nullopt) {
  ContentEvent ev;
  ev.payload = BytesPayload{std::move(data)};
  ev.key = std::move(key);
  return ev;
}

PiSpec spout_of(std::string name, std::uint64_t count, std::vector<std::string> streams,
                bool keyed = false, std::uint32_t parallelism = 1) {
  PiSpec p;
  p.name = std::move(name);
  p.kind = PiKind::Spout;
  p.parallelism = parallelism;
  p.make_spout = [count, streams, keyed](std::uint32_t) {
    return std::make_unique<NumberSpout>(count, streams, keyed);
  };
  return p;
}

PiSpec bolt_of(std::string name, std::vector<std::string> out_streams,
               std::uint32_t parallelism = 1, std::uint64_t sleep_us = 0) {
  PiSpec p;
  p.name = std::move(name);
  p.kind = PiKind::Bolt;
  p.parallelism = parallelism;
  if (out_streams.empty()) {
    p.make_bolt = [](std::uint32_t) { return std::make_unique<SinkBolt>(); };
  } else {
    p.make_bolt = [out_streams, sleep_us](std::uint32_t) {
      return std::make_unique<ForwardBolt>(out_streams, sleep_us);
    };
  }
  return p;
}

struct TraceRow {
  std::string stream, src, dst;
  std::uint32_t src_idx, dst_idx;
  std::uint64_t seq;
};

RunOptions tracing_options(std::vector<TraceRow>& rows, ExecutionMode mode) {
  RunOptions opts;
  opts.mode = mode;
  opts.tracer = [&rows](const DeliveryTrace& t) {
    rows.push_back(TraceRow{std::string(t.stream), std::string(t.src_pi), std::string(t.dst_pi),
                            t.src_index, t.dst_index, t.seq});
  };
  return opts;
}

}  // namespace

TEST_CASE("route: shuffle cycles round-robin") {
  std::uint64_t cursor = 0;
  std::vector<std::uint32_t> got;
  for (int i = 0; i < 6; ++i) {
    auto dsts = route(bytes_event("x"), Grouping::shuffle(), 3, cursor);
    REQUIRE(dsts.size() == 1);
    got.push_back(dsts[0]);
  }
  CHECK(got == std::vector<std::uint32_t>{0, 1, 2, 0, 1, 2});
}

TEST_CASE("route: all broadcasts to every instance") {
  std::uint64_t cursor = 0;
  auto dsts = route(bytes_event("x"), Grouping::all(), 3, cursor);
  CHECK(dsts == std::vector<std::uint32_t>{0, 1, 2});
}

TEST_CASE("route: key grouping is a pure function of key bytes") {
  std::uint64_t cursor = 0;
  auto a = route(bytes_event("x", key_bytes(42)), Grouping::key("k"), 4, cursor);
  auto b = route(bytes_event("y", key_bytes(42)), Grouping::key("k"), 4, cursor);
  REQUIRE(a.size() == 1);
  CHECK(a == b);
  CHECK(a[0] == stable_hash64(key_bytes(42)) % 4);
}

TEST_CASE("route: key grouping without a key is a routing error") {
  std::uint64_t cursor = 0;
  CHECK_THROWS_AS(route(bytes_event("x"), Grouping::key("k"), 4, cursor), TopologyError);
}

TEST_CASE("route: zero parallelism rejected") {
  std::uint64_t cursor = 0;
  CHECK_THROWS_AS(route(bytes_event("x"), Grouping::shuffle(), 0, cursor), std::invalid_argument);
}

TEST_CASE("build: minimal spout-to-bolt chain is valid") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", 1, {"s"}));
  spec.pis.push_back(bolt_of("out", {}));
  spec.streams.push_back({"in", "out", Grouping::shuffle(), "s"});
  CHECK_NOTHROW(build_topology(std::move(spec)));
}

TEST_CASE("build: duplicate PI name reported with the name") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("dup", 1, {"s"}));
  spec.pis.push_back(bolt_of("dup", {}));
  spec.streams.push_back({"dup", "dup", Grouping::shuffle(), "s"});
  CHECK_THROWS_WITH_AS(build_topology(std::move(spec)), doctest::Contains("dup"), TopologyError);
}

TEST_CASE("build: dangling stream endpoint reported") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", 1, {"s"}));
  spec.streams.push_back({"in", "ghost", Grouping::shuffle(), "s"});
  CHECK_THROWS_WITH_AS(build_topology(std::move(spec)), doctest::Contains("ghost"), TopologyError);
}

TEST_CASE("build: bolt cycle detected and named") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", 1, {"s"}));
  spec.pis.push_back(bolt_of("b1", {"t"}));
  spec.pis.push_back(bolt_of("b2", {"u"}));
  spec.streams.push_back({"in", "b1", Grouping::shuffle(), "s"});
  spec.streams.push_back({"b1", "b2", Grouping::shuffle(), "t"});
  spec.streams.push_back({"b2", "b1", Grouping::shuffle(), "u"});
  CHECK_THROWS_WITH_AS(build_topology(std::move(spec)), doctest::Contains("cycle"), TopologyError);
}

TEST_CASE("build: key grouping requires an extractor") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", 1, {"s"}));
  spec.pis.push_back(bolt_of("out", {}));
  spec.streams.push_back({"in", "out", Grouping{GroupingKind::Key, ""}, "s"});
  CHECK_THROWS_AS(build_topology(std::move(spec)), TopologyError);
}

TEST_CASE("build: spouts cannot be stream destinations") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", 1, {"s"}));
  spec.pis.push_back(bolt_of("mid", {"t"}));
  spec.streams.push_back({"in", "mid", Grouping::shuffle(), "s"});
  spec.streams.push_back({"mid", "in", Grouping::shuffle(), "t"});
  CHECK_THROWS_AS(build_topology(std::move(spec)), TopologyError);
}

TEST_CASE("build: full five-node wiring with a feedback stream is valid") {
  // source spout -> pipeline bolt -> aggregator bolt -> local-stat bolts,
  // with local results feeding back and an evaluator tail.
  TopologySpec spec;
  spec.pis.push_back(spout_of("source", 1, {"docs"}));
  spec.pis.push_back(bolt_of("pipeline", {"instances"}));
  spec.pis.push_back(bolt_of("model-aggregator", {"attribute", "control", "predictions"}));
  spec.pis.push_back(bolt_of("local-stats", {"local-result"}, 4));
  spec.pis.push_back(bolt_of("evaluator", {}));
  spec.streams.push_back({"source", "pipeline", Grouping::shuffle(), "docs"});
  spec.streams.push_back({"pipeline", "model-aggregator", Grouping::shuffle(), "instances"});
  spec.streams.push_back(
      {"model-aggregator", "local-stats", Grouping::key("attribute"), "attribute"});
  spec.streams.push_back({"model-aggregator", "local-stats", Grouping::all(), "control"});
  spec.streams.push_back({"model-aggregator", "evaluator", Grouping::shuffle(), "predictions"});
  StreamSpec fb{"local-stats", "model-aggregator", Grouping::key("leaf"), "local-result"};
  fb.feedback = true;
  spec.streams.push_back(std::move(fb));

  Topology topo = build_topology(std::move(spec));
  std::string dump = topo.describe();
  CHECK(dump.find("source spout 1\n") != std::string::npos);
  CHECK(dump.find("local-stats bolt 4\n") != std::string::npos);
  CHECK(dump.find("source -> pipeline [shuffle]\n") != std::string::npos);
  CHECK(dump.find("model-aggregator -> local-stats [key:attribute]\n") != std::string::npos);
  CHECK(dump.find("model-aggregator -> local-stats [all]\n") != std::string::npos);
}

TEST_CASE("run: empty input stream reports zero traffic") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", 0, {"s"}));
  spec.pis.push_back(bolt_of("out", {}));
  spec.streams.push_back({"in", "out", Grouping::shuffle(), "s"});
  Topology topo = build_topology(std::move(spec));
  RunReport r = topo.run();
  CHECK(r.events_emitted == 0);
  CHECK(r.events_delivered == 0);
  CHECK(r.events_dropped_at_spout == 0);
}

namespace {
TopologySpec diamond_spec(std::uint64_t n) {
  // in -> a -> c; in -> b -> c; mixed groupings.
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", n, {"s", "t"}, true));
  spec.pis.push_back(bolt_of("a", {"u"}, 2));
  spec.pis.push_back(bolt_of("b", {"v"}, 3));
  spec.pis.push_back(bolt_of("c", {}, 2));
  spec.streams.push_back({"in", "a", Grouping::shuffle(), "s"});
  spec.streams.push_back({"in", "b", Grouping::key("k"), "t"});
  spec.streams.push_back({"a", "c", Grouping::all(), "u"});
  spec.streams.push_back({"b", "c", Grouping::shuffle(), "v"});
  return spec;
}
}  // namespace

TEST_CASE("run: deterministic mode is reproducible event for event") {
  std::vector<TraceRow> first, second;
  {
    Topology topo = build_topology(diamond_spec(50));
    topo.run(tracing_options(first, ExecutionMode::Deterministic));
  }
  {
    Topology topo = build_topology(diamond_spec(50));
    topo.run(tracing_options(second, ExecutionMode::Deterministic));
  }
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CAPTURE(i);
    CHECK(first[i].stream == second[i].stream);
    CHECK(first[i].src == second[i].src);
    CHECK(first[i].dst == second[i].dst);
    CHECK(first[i].src_idx == second[i].src_idx);
    CHECK(first[i].dst_idx == second[i].dst_idx);
    CHECK(first[i].seq == second[i].seq);
  }
}

TEST_CASE("run: reports agree across deterministic repeats (wall time aside)") {
  Topology t1 = build_topology(diamond_spec(200));
  Topology t2 = build_topology(diamond_spec(200));
  RunReport a = t1.run();
  RunReport b = t2.run();
  CHECK(a.events_emitted == b.events_emitted);
  CHECK(a.events_delivered == b.events_delivered);
  CHECK(a.events_dropped_at_spout == b.events_dropped_at_spout);
}

TEST_CASE("run: per-channel FIFO holds in both modes") {
  for (auto mode : {ExecutionMode::Deterministic, ExecutionMode::Concurrent}) {
    CAPTURE(mode == ExecutionMode::Deterministic);
    std::vector<TraceRow> rows;
    Topology topo = build_topology(diamond_spec(300));
    topo.run(tracing_options(rows, mode));
    std::map<std::tuple<std::string, std::string, std::uint32_t, std::uint32_t>, std::uint64_t>
        last_seq;
    for (const auto& r : rows) {
      auto key = std::make_tuple(r.stream, r.src, r.src_idx, r.dst_idx);
      auto it = last_seq.find(key);
      if (it != last_seq.end()) CHECK(r.seq > it->second);
      last_seq[key] = r.seq;
    }
    CHECK(last_seq.size() > 4);
  }
}

TEST_CASE("run: shuffle spreads events evenly (counts differ by at most 1)") {
  std::vector<TraceRow> rows;
  Topology topo = build_topology(diamond_spec(100));
  topo.run(tracing_options(rows, ExecutionMode::Deterministic));
  std::map<std::uint32_t, std::uint64_t> per_dst;
  for (const auto& r : rows) {
    if (r.stream == "s") ++per_dst[r.dst_idx];
  }
  REQUIRE(per_dst.size() == 2);
  std::uint64_t lo = std::min(per_dst[0], per_dst[1]);
  std::uint64_t hi = std::max(per_dst[0], per_dst[1]);
  CHECK(hi - lo <= 1);
}

TEST_CASE("run: key grouping sends equal keys to one stable instance") {
  std::vector<TraceRow> rows;
  Topology topo = build_topology(diamond_spec(140));
  topo.run(tracing_options(rows, ExecutionMode::Deterministic));
  // Spout keys cycle mod 7 and seq numbers the emissions, so the event with
  // sequence s carried key (s-1) mod 7; per key the destination is unique.
  std::map<std::uint64_t, std::set<std::uint32_t>> key_dsts;
  for (const auto& r : rows) {
    if (r.stream != "t") continue;
    key_dsts[(r.seq - 1) % 7].insert(r.dst_idx);
  }
  for (const auto& [key, dsts] : key_dsts) {
    std::uint64_t which = key;
    CAPTURE(which);
    CHECK(dsts.size() == 1);
  }
}

TEST_CASE("run: bounded queues drop only at the spout intake") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", 400, {"s"}));
  spec.pis.push_back(bolt_of("slow", {"t"}, 1, 300));
  spec.pis.push_back(bolt_of("sink", {}));
  spec.streams.push_back({"in", "slow", Grouping::shuffle(), "s"});
  spec.streams.push_back({"slow", "sink", Grouping::shuffle(), "t"});
  Topology topo = build_topology(std::move(spec));
  RunOptions opts;
  opts.mode = ExecutionMode::Concurrent;
  opts.queue_capacity = 4;
  RunReport r = topo.run(opts);

  const auto* slow = dynamic_cast<const ForwardBolt*>(topo.bolt_handler("slow", 0));
  const auto* sink = dynamic_cast<const SinkBolt*>(topo.bolt_handler("sink", 0));
  CHECK(r.events_emitted == 400);
  CHECK(r.events_dropped_at_spout > 0);
  CHECK(r.events_delivered + r.events_dropped_at_spout == r.events_emitted);
  // Everything admitted past the intake is delivered losslessly downstream.
  CHECK(slow->received() == r.events_delivered);
  CHECK(sink->received() == slow->forwarded());
}

TEST_CASE("run: unbounded queues never drop") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", 500, {"s"}));
  spec.pis.push_back(bolt_of("sink", {}));
  spec.streams.push_back({"in", "sink", Grouping::shuffle(), "s"});
  Topology topo = build_topology(std::move(spec));
  RunOptions opts;
  opts.mode = ExecutionMode::Concurrent;
  opts.queue_capacity = std::nullopt;
  RunReport r = topo.run(opts);
  CHECK(r.events_dropped_at_spout == 0);
  CHECK(r.events_delivered == 500);
}

namespace {
class ExplodingBolt : public BoltHandler {
 public:
  void on_event(const ContentEvent&, Emitter&) override {
    if (++seen_ == 5) throw std::runtime_error("boom");
  }

 private:
  int seen_ = 0;
};
}  // namespace

TEST_CASE("run: handler failure aborts and names the PI") {
  for (auto mode : {ExecutionMode::Deterministic, ExecutionMode::Concurrent}) {
    TopologySpec spec;
    spec.pis.push_back(spout_of("in", 50, {"s"}));
    PiSpec bad;
    bad.name = "fragile";
    bad.kind = PiKind::Bolt;
    bad.make_bolt = [](std::uint32_t) { return std::make_unique<ExplodingBolt>(); };
    spec.pis.push_back(std::move(bad));
    spec.streams.push_back({"in", "fragile", Grouping::shuffle(), "s"});
    Topology topo = build_topology(std::move(spec));
    RunOptions opts;
    opts.mode = mode;
    CHECK_THROWS_WITH_AS(topo.run(opts), doctest::Contains("fragile"), TopologyError);
  }
}

TEST_CASE("run: a topology is single-shot") {
  Topology topo = build_topology(diamond_spec(5));
  topo.run();
  CHECK_THROWS_AS(topo.run(), TopologyError);
}

namespace {
class WrongStreamBolt : public BoltHandler {
 public:
  void on_event(const ContentEvent& ev, Emitter& out) override {
    ContentEvent copy = ev;
    out.emit("no-such-stream", std::move(copy));
  }
};
}  // namespace

TEST_CASE("run: emitting on an undeclared stream aborts with the PI named") {
  TopologySpec spec;
  spec.pis.push_back(spout_of("in", 3, {"s"}));
  PiSpec bad;
  bad.name = "loose-wire";
  bad.kind = PiKind::Bolt;
  bad.make_bolt = [](std::uint32_t) { return std::make_unique<WrongStreamBolt>(); };
  spec.pis.push_back(std::move(bad));
  spec.streams.push_back({"in", "loose-wire", Grouping::shuffle(), "s"});
  Topology topo = build_topology(std::move(spec));
  CHECK_THROWS_WITH_AS(topo.run(), doctest::Contains("loose-wire"), TopologyError);
}

TEST_CASE("run: randomized layered topologies keep FIFO and conserve events") {
  // Small random DAGs: one spout, 1-2 forwarding layers, one sink layer.
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    CAPTURE(seed);
    DeterministicRng rng(seed);
    std::uint32_t layers = 1 + static_cast<std::uint32_t>(rng.below(2));
    TopologySpec spec;
    spec.pis.push_back(spout_of("in", 120, {"l0"}, true));
    std::vector<std::string> names;
    for (std::uint32_t l = 0; l < layers; ++l) {
      std::string name = "mid" + std::to_string(l);
      std::uint32_t par = 1 + static_cast<std::uint32_t>(rng.below(3));
      spec.pis.push_back(bolt_of(name, {"l" + std::to_string(l + 1)}, par));
      names.push_back(name);
    }
    spec.pis.push_back(bolt_of("sink", {}, 1 + static_cast<std::uint32_t>(rng.below(2))));
    auto grouping_for = [&rng]() {
      switch (rng.below(3)) {
        case 0: return Grouping::shuffle();
        case 1: return Grouping::all();
        default: return Grouping::key("k");
      }
    };
    std::string prev = "in";
    for (std::uint32_t l = 0; l < layers; ++l) {
      spec.streams.push_back({prev, names[l], grouping_for(), "l" + std::to_string(l)});
      prev = names[l];
    }
    spec.streams.push_back({prev, "sink", grouping_for(), "l" + std::to_string(layers)});

    std::vector<TraceRow> rows;
    Topology topo = build_topology(std::move(spec));
    RunReport r = topo.run(tracing_options(rows, ExecutionMode::Deterministic));
    CHECK(r.events_delivered == 120);

    std::map<std::tuple<std::string, std::string, std::uint32_t, std::uint32_t>, std::uint64_t>
        last_seq;
    for (const auto& row : rows) {
      auto key = std::make_tuple(row.stream, row.src, row.src_idx, row.dst_idx);
      auto it = last_seq.find(key);
      if (it != last_seq.end()) CHECK(row.seq > it->second);
      last_seq[key] = row.seq;
    }
  }
}
