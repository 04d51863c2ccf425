#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sentinel {

// Binary sentiment classes. "negative" sorts before "positive" by class
// name; that order is the tie-break used everywhere an argmax can tie.
enum class Sentiment : std::uint8_t { Negative = 0, Positive = 1 };

inline constexpr std::size_t kNumClasses = 2;

using ClassCounts = std::array<double, kNumClasses>;

const char* to_string(Sentiment s);
std::optional<Sentiment> sentiment_from_string(std::string_view s);

inline std::size_t class_index(Sentiment s) { return static_cast<std::size_t>(s); }

struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> lang;
  std::optional<std::int64_t> timestamp_ms;
};

/// Sparse attribute vector with strictly increasing attribute ids and
/// finite non-negative weights. The optional label is the class the
/// instance was observed with (self-labeled or gold).
struct SparseInstance {
  std::vector<std::pair<std::uint32_t, double>> features;
  std::optional<Sentiment> label;

  double weight_for(std::uint32_t attr) const;
  bool has_attribute(std::uint32_t attr) const { return weight_for(attr) > 0.0; }
  bool well_formed() const;
};

struct SketchEntry {
  std::string item;
  std::uint64_t count = 0;
  std::uint64_t error = 0;
};

/// Compact description of a learner, small enough to travel with every
/// prediction event and to embed in a synopsis.
struct ModelSummary {
  std::string learner;
  std::uint64_t nodes = 0;
  std::uint64_t leaves = 0;
  std::uint64_t depth = 0;
  ClassCounts class_mass{0.0, 0.0};
};

}  // namespace sentinel
