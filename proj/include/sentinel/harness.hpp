#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/adwin.hpp"
#include "sentinel/evaluator.hpp"
#include "sentinel/hoeffding_tree.hpp"
#include "sentinel/naive_bayes.hpp"
#include "sentinel/space_saving.hpp"
#include "sentinel/synthetic.hpp"
#include "sentinel/text_pipeline.hpp"
#include "sentinel/topology.hpp"
#include "sentinel/vht.hpp"

namespace sentinel {

enum class LearnerKind : std::uint8_t { Mnb, Ht, Vht };

std::optional<LearnerKind> learner_from_string(std::string_view s);
const char* to_string(LearnerKind k);

struct RunConfig {
  // Input: exactly one of input_path / synthetic must be set. An optional
  // test path is replayed after the training stream with training disabled.
  std::string input_path;
  std::string test_input_path;
  std::optional<SyntheticSpec> synthetic;

  LearnerKind learner = LearnerKind::Vht;
  std::uint32_t parallelism = 2;  // vht local-statistic shards
  std::uint64_t window = 10000;
  std::size_t sketch_capacity = 2000;
  std::size_t feature_top_k = 1000;
  HoeffdingParams tree;
  double alpha = 1.0;
  double adwin_delta = 0.01;
  bool deterministic = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> timeout_events = 2000;
  std::optional<std::size_t> queue_capacity = 1024;

  std::string metrics_csv = "metrics.csv";
  std::string curve_csv = "curve.csv";
  std::string synopsis_out = "synopsis.txt";
  std::uint64_t snapshot_every = 0;  // 0 = final synopsis only
  std::uint64_t curve_interval = 1000;

  void validate() const;  // throws std::invalid_argument
};

struct SourceRecord {
  Document doc;
  std::optional<Sentiment> gold;
  bool test_phase = false;
};

class DocumentSource {
 public:
  virtual ~DocumentSource() = default;
  virtual std::optional<SourceRecord> next() = 0;
  virtual std::uint64_t produced() const = 0;
  virtual std::uint64_t malformed() const { return 0; }
};

/// Line-delimited file replay. A line starting with '{' is a structured
/// JSON record (`text` required; `lang`, `id`, `created_at`, `label`
/// optional); any other non-empty line is a raw text document with a
/// synthetic id. Malformed lines are counted and skipped; if they end up
/// outnumbering the good ones the source aborts the run at end-of-file.
class FileSource : public DocumentSource {
 public:
  FileSource(const std::string& path, bool test_phase);  // throws if unreadable

  std::optional<SourceRecord> next() override;
  std::uint64_t produced() const override { return produced_; }
  std::uint64_t malformed() const override { return malformed_; }

 private:
  std::string path_;
  std::unique_ptr<std::istream> in_;
  bool test_phase_;
  std::uint64_t produced_ = 0;
  std::uint64_t malformed_ = 0;
  std::uint64_t line_no_ = 0;
  bool finished_ = false;
};

class SyntheticSource : public DocumentSource {
 public:
  SyntheticSource(SyntheticSpec spec, std::uint64_t seed) : stream_(spec, seed) {}

  std::optional<SourceRecord> next() override;
  std::uint64_t produced() const override { return stream_.produced(); }

 private:
  SyntheticStream stream_;
};

/// Convenience for tests: all records of one file.
std::vector<SourceRecord> ingest_all(const std::string& path);

// ---------------------------------------------------------------------------
// Topology handlers
// ---------------------------------------------------------------------------

inline constexpr std::string_view kDocStream = "docs";
inline constexpr std::string_view kInstanceStream = "instances";
inline constexpr std::string_view kSketchStream = "sketch";

class SourceSpout : public SpoutHandler {
 public:
  explicit SourceSpout(std::vector<std::unique_ptr<DocumentSource>> sources)
      : sources_(std::move(sources)) {}

  bool next(Emitter& out) override;
  std::uint64_t produced() const;
  std::uint64_t malformed() const;

 private:
  std::vector<std::unique_ptr<DocumentSource>> sources_;
  std::size_t current_ = 0;
};

/// The data-pipeline node: language filter, mention/URL reduction, emoticon
/// self-labeling, tokenization, incremental tf-idf, sketch-gated feature
/// selection. Documents that end up with neither an emoticon label nor a
/// gold label still update the vocabulary and sketch but produce no
/// instance; test-phase documents never produce training instances.
class PipelineBolt : public BoltHandler {
 public:
  PipelineBolt(std::size_t sketch_capacity, std::size_t top_k, std::uint64_t snapshot_every);

  void on_event(const ContentEvent& ev, Emitter& out) override;
  void on_flush(Emitter& out) override;

  const Vocabulary& vocabulary() const { return vocab_; }
  const SpaceSavingSketch& sketch() const { return sketch_; }
  std::uint64_t admitted() const { return admitted_; }
  std::uint64_t rejected_language() const { return rejected_language_; }
  std::uint64_t dropped_unlabeled() const { return dropped_unlabeled_; }
  std::uint64_t dropped_empty() const { return dropped_empty_; }

 private:
  void emit_sketch_snapshot(Emitter& out);

  Vocabulary vocab_;
  SpaceSavingSketch sketch_;
  std::size_t top_k_;
  std::uint64_t snapshot_every_;
  std::uint64_t admitted_ = 0;
  std::uint64_t rejected_language_ = 0;
  std::uint64_t dropped_unlabeled_ = 0;
  std::uint64_t dropped_empty_ = 0;
};

/// Sequential learner node (Multinomial Naive Bayes or Hoeffding tree):
/// predicts first, emits the prediction, then trains. An untrained or
/// abstaining model predicts the default class.
class SequentialLearnerBolt : public BoltHandler {
 public:
  SequentialLearnerBolt(LearnerKind kind, const HoeffdingParams& tree_params, double alpha);

  void on_event(const ContentEvent& ev, Emitter& out) override;

  const HoeffdingTree* tree() const { return tree_.get(); }
  const NaiveBayesModel* bayes() const { return bayes_.get(); }
  std::uint64_t state_entries() const;
  ModelSummary summary() const;

 private:
  LearnerKind kind_;
  std::unique_ptr<HoeffdingTree> tree_;
  std::unique_ptr<NaiveBayesModel> bayes_;
};

/// Prequential scoring node: sliding-window accuracy and kappa, correctness
/// stream into ADWIN (a detection resets the window and is logged), CSV
/// rows per completed window, learning-curve samples, periodic and final
/// synopsis files.
class EvaluatorBolt : public BoltHandler {
 public:
  struct Options {
    std::uint64_t window = 10000;
    double adwin_delta = 0.01;
    bool deterministic = false;
    std::string metrics_csv;
    std::string curve_csv;
    std::string synopsis_out;
    std::uint64_t snapshot_every = 0;
    std::uint64_t curve_interval = 1000;
  };

  explicit EvaluatorBolt(const Options& opts);

  void on_event(const ContentEvent& ev, Emitter& out) override;
  void on_flush(Emitter& out) override;

  const SlidingWindowEvaluator& evaluator() const { return window_; }
  const AdaptiveWindow& detector() const { return adwin_; }
  const std::vector<std::uint64_t>& drift_points() const { return drift_points_; }
  Synopsis current_synopsis() const;
  const Metrics& last_metrics() const { return last_metrics_; }
  std::uint64_t recorded() const { return window_.total_recorded(); }
  std::uint64_t state_entries() const;

 private:
  void write_metrics_row();
  void write_curve_point();
  double throughput_now() const;

  Options opts_;
  SlidingWindowEvaluator window_;
  AdaptiveWindow adwin_;
  std::vector<std::uint64_t> drift_points_;
  std::vector<SketchEntry> latest_topk_;
  ModelSummary latest_model_;
  Metrics last_metrics_;
  std::string metrics_rows_;
  std::string curve_rows_;
  std::uint64_t metrics_rows_written_ = 0;
  std::uint64_t last_curve_at_ = 0;
  std::chrono::steady_clock::time_point started_;
  bool timing_started_ = false;
};

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

struct ExperimentResult {
  RunReport report;
  std::uint64_t documents_ingested = 0;
  std::uint64_t documents_malformed = 0;
  std::uint64_t documents_admitted = 0;
  std::uint64_t instances_evaluated = 0;
  Metrics final_metrics;
  Synopsis final_synopsis;
  std::vector<std::uint64_t> drift_points;
  double wall_seconds = 0.0;
};

/// Builds the full topology for the configured learner:
/// source -> pipeline -> learner node(s) -> evaluator, with the vertical
/// tree adding its attribute/control/local-result exchange.
Topology build_experiment_topology(const RunConfig& config);

ExperimentResult run_experiment(const RunConfig& config);

Synopsis load_synopsis(const std::string& path);  // throws on missing/corrupt file

}  // namespace sentinel
