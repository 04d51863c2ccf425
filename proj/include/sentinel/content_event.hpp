#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sentinel/types.hpp"

namespace sentinel {

enum class EventKind : std::uint8_t {
  Document,
  Instance,
  Attribute,
  Compute,
  LocalResult,
  Prediction,
  SketchSnapshot,
  Bytes,
  Control,
};

const char* to_string(EventKind k);

struct DocumentPayload {
  Document doc;
  std::optional<Sentiment> gold;
  bool test_phase = false;
};

struct InstancePayload {
  SparseInstance instance;  // label = the observed class, when any
  bool train = false;
};

/// One sparse feature of one training instance, addressed to whichever
/// local-statistic worker owns the attribute.
struct AttributePayload {
  std::uint64_t leaf = 0;
  std::uint32_t attr = 0;
  bool present = false;  // weight > 0
  Sentiment label = Sentiment::Negative;
  double weight = 1.0;
};

struct ComputePayload {
  std::uint64_t leaf = 0;
  std::uint64_t attempt = 0;
  // Leaf class totals at attempt time; locals derive absence mass from
  // these instead of receiving one event per absent attribute.
  ClassCounts class_totals{0.0, 0.0};
};

/// A (attribute id, split merit) pair. `attr == kNoAttribute` marks the
/// empty candidate, which every real candidate beats.
struct SplitCandidate {
  std::uint32_t attr = 0xffffffffu;
  double gain = -1e300;
};

inline constexpr std::uint32_t kNoAttribute = 0xffffffffu;

struct LocalResultPayload {
  std::uint64_t leaf = 0;
  std::uint64_t attempt = 0;
  SplitCandidate best;
  SplitCandidate second;
  std::uint32_t responder = 0;
};

struct PredictionPayload {
  Sentiment predicted = Sentiment::Negative;
  std::optional<Sentiment> actual;
  bool trained = false;
  ModelSummary model;
};

struct SketchSnapshotPayload {
  std::vector<SketchEntry> top;
  std::uint64_t stream_length = 0;
};

/// Opaque tuple for generic plumbing and tests.
struct BytesPayload {
  std::string data;
};

struct ControlPayload {
  enum class Kind : std::uint8_t { Flush, DropLeafStats } kind = Kind::Flush;
  std::uint64_t leaf = 0;
  bool feedback_channel = false;  // Flush only: channel class of the sender
};

using EventPayload =
    std::variant<DocumentPayload, InstancePayload, AttributePayload, ComputePayload,
                 LocalResultPayload, PredictionPayload, SketchSnapshotPayload, BytesPayload,
                 ControlPayload>;

/// The self-contained message routed between processing items. The routing
/// key is an opaque byte string; `seq` is stamped by the runtime and is
/// strictly increasing per (source instance, stream).
struct ContentEvent {
  EventPayload payload;
  std::optional<std::string> key;
  std::uint64_t seq = 0;

  EventKind kind() const;

  template <typename T>
  const T& as() const {
    return std::get<T>(payload);
  }
  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&payload);
  }
};

/// Fixed-width little-endian key bytes for numeric routing keys.
std::string key_bytes(std::uint64_t v);

}  // namespace sentinel
