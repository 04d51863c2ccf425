#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/content_event.hpp"

namespace sentinel {

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PiKind : std::uint8_t { Spout, Bolt };
enum class GroupingKind : std::uint8_t { Shuffle, All, Key };

struct Grouping {
  GroupingKind kind = GroupingKind::Shuffle;
  std::string key_field;  // Key only: names the event field carrying the key

  static Grouping shuffle() { return {GroupingKind::Shuffle, {}}; }
  static Grouping all() { return {GroupingKind::All, {}}; }
  static Grouping key(std::string field) { return {GroupingKind::Key, std::move(field)}; }
};

class Emitter {
 public:
  virtual void emit(std::string_view stream, ContentEvent ev) = 0;

 protected:
  ~Emitter() = default;
};

/// Per-instance processing logic. One handler object is created per runtime
/// instance and owns all of that instance's state; the runtime never shares
/// a handler between workers.
class BoltHandler {
 public:
  virtual ~BoltHandler() = default;
  virtual void on_event(const ContentEvent& ev, Emitter& out) = 0;
  /// Called once when every upstream non-feedback channel has flushed,
  /// before the flush is forwarded downstream.
  virtual void on_flush(Emitter& /*out*/) {}
};

/// Pull-model source. `next` is invoked repeatedly; returning false signals
/// end-of-stream. A call may emit zero or more events.
class SpoutHandler {
 public:
  virtual ~SpoutHandler() = default;
  virtual bool next(Emitter& out) = 0;
};

struct PiSpec {
  std::string name;
  PiKind kind = PiKind::Bolt;
  std::uint32_t parallelism = 1;
  std::function<std::unique_ptr<SpoutHandler>(std::uint32_t)> make_spout;
  std::function<std::unique_ptr<BoltHandler>(std::uint32_t)> make_bolt;
};

struct StreamSpec {
  std::string src;
  std::string dst;
  Grouping grouping;
  std::string label;
  // Feedback streams may close a cycle in the PI graph. They are exempt
  // from the acyclicity check and from queue capacity, and their flush is
  // awaited only for termination, never for flush forwarding.
  bool feedback = false;
};

struct TopologySpec {
  std::vector<PiSpec> pis;
  std::vector<StreamSpec> streams;
};

struct RunReport {
  std::uint64_t events_emitted = 0;
  std::uint64_t events_delivered = 0;
  std::uint64_t events_dropped_at_spout = 0;
  double wall_time_seconds = 0.0;
};

struct DeliveryTrace {
  std::string_view stream;
  std::string_view src_pi;
  std::uint32_t src_index = 0;
  std::string_view dst_pi;
  std::uint32_t dst_index = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Bytes;
  std::optional<std::string_view> key;
};

std::string format_trace(const DeliveryTrace& t);

enum class ExecutionMode : std::uint8_t { Deterministic, Concurrent };

struct RunOptions {
  ExecutionMode mode = ExecutionMode::Deterministic;
  /// Events per instance inbox; nullopt = unbounded. Applies to spout intake
  /// in both modes and to bolt-to-bolt backpressure in concurrent mode.
  std::optional<std::size_t> queue_capacity = 1024;
  std::function<void(const DeliveryTrace&)> tracer;
};

/// Stable non-cryptographic 64-bit hash (FNV-1a) used for key grouping;
/// identical across runs and platforms.
std::uint64_t stable_hash64(std::string_view bytes);

/// Destination instance indices for one event under one grouping.
/// Shuffle consumes the cursor; all broadcasts; key hashes the event key.
std::vector<std::uint32_t> route(const ContentEvent& ev, const Grouping& grouping,
                                 std::uint32_t parallelism, std::uint64_t& round_robin_cursor);

class Topology {
 public:
  RunReport run(const RunOptions& opts = {});

  /// One line per PI (`name kind parallelism`) and per stream
  /// (`src -> dst [grouping]`).
  std::string describe() const;

  BoltHandler* bolt_handler(std::string_view pi, std::uint32_t index) const;
  SpoutHandler* spout_handler(std::string_view pi, std::uint32_t index) const;
  const TopologySpec& spec() const { return *spec_; }

  Topology(Topology&&) noexcept;
  Topology& operator=(Topology&&) noexcept;
  ~Topology();

 private:
  friend Topology build_topology(TopologySpec spec);
  struct Impl;
  explicit Topology(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
  const TopologySpec* spec_ = nullptr;
};

/// Validates the spec (unique PI names, existing endpoints, acyclic
/// non-feedback graph, key groupings carry an extractor, spouts are not
/// stream destinations) and expands each PI into `parallelism` instances
/// with independent handler state. Throws TopologyError naming the
/// offending PI or stream on violation.
Topology build_topology(TopologySpec spec);

}  // namespace sentinel
