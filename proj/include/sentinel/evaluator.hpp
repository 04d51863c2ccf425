#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/types.hpp"

namespace sentinel {

using ConfusionMatrix = std::array<std::array<std::uint64_t, 2>, 2>;  // [actual][predicted]

/// Accuracy p0 = trace / total. Throws std::domain_error on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

/// Kappa = (p0 - pc) / (1 - pc) with pc the chance agreement of the
/// marginals. When pc == 1 (a degenerate single-class window) the statistic
/// is undefined and reported as such, never coerced to 0.
std::optional<double> kappa_statistic(const ConfusionMatrix& cm);

struct Metrics {
  std::uint64_t instances_in_window = 0;
  std::optional<double> accuracy;
  std::optional<double> kappa;
  double throughput_ips = 0.0;  // cumulative instances/second, caller-supplied
};

/// Prequential sliding-window scorer: a ring of the last w (predicted,
/// actual) pairs plus the window confusion matrix.
class SlidingWindowEvaluator {
 public:
  explicit SlidingWindowEvaluator(std::size_t window);

  struct Outcome {
    Metrics metrics;
    bool correct = false;  // the bit fed to the drift detector
  };

  Outcome record(Sentiment predicted, Sentiment actual);

  Metrics metrics() const;
  void reset();

  std::uint64_t total_recorded() const { return total_; }
  std::size_t window_size() const { return window_; }
  const ConfusionMatrix& confusion() const { return cm_; }
  std::array<std::uint64_t, 2> window_actual() const;
  std::array<std::uint64_t, 2> window_predicted() const;

 private:
  std::size_t window_;
  std::deque<std::pair<std::uint8_t, std::uint8_t>> ring_;  // (predicted, actual)
  ConfusionMatrix cm_{};
  std::uint64_t total_ = 0;
};

/// Immutable bounded-size snapshot answering "what is happening now":
/// window metrics, class distributions, sketch hot-list, model summary.
/// Size depends on the window and sketch parameters, never on how much
/// stream has passed.
struct Synopsis {
  std::int64_t timestamp_ms = 0;
  std::uint64_t instances_recorded = 0;
  std::uint64_t window_size = 0;
  Metrics metrics;
  std::array<std::uint64_t, 2> window_actual{0, 0};
  std::array<std::uint64_t, 2> window_predicted{0, 0};
  std::vector<SketchEntry> top_tokens;
  ModelSummary model;
  std::uint64_t drift_detections = 0;

  /// Flat `key value` text block.
  std::string serialize() const;
  /// Parses a serialized synopsis; throws std::runtime_error naming the
  /// offending line on corrupt input.
  static Synopsis parse(std::istream& in);

  /// Human-readable report: metrics, class distribution, top tokens.
  std::string format() const;
};

Synopsis snapshot(const SlidingWindowEvaluator& ev, std::vector<SketchEntry> top_tokens,
                  ModelSummary model, std::uint64_t drift_detections = 0,
                  std::int64_t timestamp_ms = -1);

}  // namespace sentinel
