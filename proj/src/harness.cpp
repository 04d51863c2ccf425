#include "sentinel/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sentinel {

namespace {

std::string pct(std::optional<double> v) {
  if (!v) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", *v * 100.0);
  return buf;
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

std::string snapshot_path(const std::string& base, std::uint64_t at) {
  auto dot = base.rfind('.');
  if (dot == std::string::npos || base.find('/', dot) != std::string::npos)
    return base + "_" + std::to_string(at);
  return base.substr(0, dot) + "_" + std::to_string(at) + base.substr(dot);
}

}  // namespace

std::optional<LearnerKind> learner_from_string(std::string_view s) {
  if (s == "mnb") return LearnerKind::Mnb;
  if (s == "ht") return LearnerKind::Ht;
  if (s == "vht") return LearnerKind::Vht;
  return std::nullopt;
}

const char* to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::Mnb: return "mnb";
    case LearnerKind::Ht: return "ht";
    case LearnerKind::Vht: return "vht";
  }
  return "?";
}

void RunConfig::validate() const {
  bool has_file = !input_path.empty();
  if (has_file == synthetic.has_value())
    throw std::invalid_argument("config: exactly one of input path or synthetic spec is required");
  if (synthetic) {
    synthetic->validate();
    if (!seed) throw std::invalid_argument("config: synthetic streams require a seed");
  }
  if (parallelism < 1) throw std::invalid_argument("config: parallelism must be >= 1");
  if (window < 1) throw std::invalid_argument("config: window must be >= 1");
  if (sketch_capacity < 1) throw std::invalid_argument("config: sketch capacity must be >= 1");
  if (feature_top_k < 1) throw std::invalid_argument("config: feature top-k must be >= 1");
  if (!(tree.split_delta > 0.0 && tree.split_delta < 1.0))
    throw std::invalid_argument("config: split delta must be in (0,1)");
  if (!(tree.tie_tau >= 0.0)) throw std::invalid_argument("config: tie tau must be >= 0");
  if (tree.grace < 1) throw std::invalid_argument("config: grace must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("config: alpha must be > 0");
  if (!(adwin_delta > 0.0 && adwin_delta < 1.0))
    throw std::invalid_argument("config: adwin delta must be in (0,1)");
  if (curve_interval < 1) throw std::invalid_argument("config: curve interval must be >= 1");
}

// ---------------------------------------------------------------------------
// Sources
// ---------------------------------------------------------------------------

FileSource::FileSource(const std::string& path, bool test_phase)
    : path_(path), test_phase_(test_phase) {
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) throw std::runtime_error("cannot read input file '" + path + "'");
  in_ = std::move(file);
}

std::optional<SourceRecord> FileSource::next() {
  if (finished_) return std::nullopt;
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) {
      ++malformed_;
      continue;
    }
    SourceRecord rec;
    rec.test_phase = test_phase_;
    if (line[start] == '{') {
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
        ++malformed_;
        continue;
      }
      rec.doc.text = j["text"].get<std::string>();
      if (rec.doc.text.find_first_not_of(" \t") == std::string::npos) {
        ++malformed_;
        continue;
      }
      rec.doc.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                           : "line-" + std::to_string(line_no_);
      if (j.contains("lang") && j["lang"].is_string()) rec.doc.lang = j["lang"].get<std::string>();
      if (j.contains("created_at") && j["created_at"].is_number())
        rec.doc.timestamp_ms = j["created_at"].get<std::int64_t>();
      if (j.contains("label") && j["label"].is_string())
        rec.gold = sentiment_from_string(j["label"].get<std::string>());
    } else {
      rec.doc.text = line;
      rec.doc.id = "line-" + std::to_string(line_no_);
    }
    ++produced_;
    return rec;
  }
  finished_ = true;
  if (malformed_ > produced_) {
    throw std::runtime_error("input '" + path_ + "': " + std::to_string(malformed_) +
                             " malformed lines outnumber " + std::to_string(produced_) +
                             " valid records");
  }
  return std::nullopt;
}

std::optional<SourceRecord> SyntheticSource::next() {
  auto doc = stream_.next();
  if (!doc) return std::nullopt;
  SourceRecord rec;
  rec.doc = std::move(doc->doc);
  rec.gold = doc->label;
  return rec;
}

std::vector<SourceRecord> ingest_all(const std::string& path) {
  FileSource src(path, false);
  std::vector<SourceRecord> out;
  while (auto rec = src.next()) out.push_back(std::move(*rec));
  return out;
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

bool SourceSpout::next(Emitter& out) {
  while (current_ < sources_.size()) {
    if (auto rec = sources_[current_]->next()) {
      DocumentPayload payload{std::move(rec->doc), rec->gold, rec->test_phase};
      out.emit(kDocStream, ContentEvent{std::move(payload), std::nullopt});
      return true;
    }
    ++current_;
  }
  return false;
}

std::uint64_t SourceSpout::produced() const {
  std::uint64_t n = 0;
  for (const auto& s : sources_) n += s->produced();
  return n;
}

std::uint64_t SourceSpout::malformed() const {
  std::uint64_t n = 0;
  for (const auto& s : sources_) n += s->malformed();
  return n;
}

PipelineBolt::PipelineBolt(std::size_t sketch_capacity, std::size_t top_k,
                           std::uint64_t snapshot_every)
    : sketch_(sketch_capacity), top_k_(top_k), snapshot_every_(snapshot_every) {}

void PipelineBolt::on_event(const ContentEvent& ev, Emitter& out) {
  const auto* payload = ev.get_if<DocumentPayload>();
  if (payload == nullptr) return;

  if (!language_admit(payload->doc)) {
    ++rejected_language_;
    return;
  }
  std::string reduced = reduce_features(payload->doc.text);
  auto [emo_label, stripped] = label_by_emoticons(reduced);
  auto tokens = tokenize(stripped);
  if (tokens.empty()) {
    ++dropped_empty_;
    return;
  }
  ++admitted_;
  SparseInstance inst = vectorize(tokens, vocab_);
  inst = select_features(inst, vocab_, sketch_, top_k_);

  if (snapshot_every_ > 0 && admitted_ % snapshot_every_ == 0) emit_sketch_snapshot(out);

  std::optional<Sentiment> label = emo_label ? emo_label : payload->gold;
  if (!label) {
    ++dropped_unlabeled_;
    return;
  }
  inst.label = label;
  bool train = !payload->test_phase;
  out.emit(kInstanceStream, ContentEvent{InstancePayload{std::move(inst), train}, std::nullopt});
}

void PipelineBolt::on_flush(Emitter& out) { emit_sketch_snapshot(out); }

void PipelineBolt::emit_sketch_snapshot(Emitter& out) {
  SketchSnapshotPayload snap;
  snap.top = sketch_.top(top_k_);
  snap.stream_length = sketch_.stream_length();
  out.emit(kSketchStream, ContentEvent{std::move(snap), std::nullopt});
}

SequentialLearnerBolt::SequentialLearnerBolt(LearnerKind kind, const HoeffdingParams& tree_params,
                                             double alpha)
    : kind_(kind) {
  if (kind == LearnerKind::Ht) {
    tree_ = std::make_unique<HoeffdingTree>(tree_params);
  } else {
    bayes_ = std::make_unique<NaiveBayesModel>(alpha);
  }
}

void SequentialLearnerBolt::on_event(const ContentEvent& ev, Emitter& out) {
  const auto* payload = ev.get_if<InstancePayload>();
  if (payload == nullptr) return;
  const SparseInstance& inst = payload->instance;

  PredictionPayload pred;
  if (tree_) {
    pred.predicted = tree_->predict(inst);
  } else {
    pred.predicted = bayes_->predict(inst).value_or(Sentiment::Negative);
  }
  pred.actual = inst.label;
  pred.trained = payload->train;
  pred.model = summary();
  out.emit(kPredictionStream, ContentEvent{std::move(pred), std::nullopt});

  if (payload->train && inst.label) {
    if (tree_) {
      tree_->train(inst);
    } else {
      bayes_->train(inst);
    }
  }
}

std::uint64_t SequentialLearnerBolt::state_entries() const {
  return tree_ ? tree_->state_entries() : bayes_->state_entries();
}

ModelSummary SequentialLearnerBolt::summary() const {
  return tree_ ? tree_->summary() : bayes_->summary();
}

EvaluatorBolt::EvaluatorBolt(const Options& opts)
    : opts_(opts), window_(opts.window), adwin_(opts.adwin_delta) {
  metrics_rows_ = "window_index,instances,accuracy_pct,kappa_pct,throughput_ips\n";
  curve_rows_ = "instances_processed,kappa_pct\n";
}

double EvaluatorBolt::throughput_now() const {
  if (opts_.deterministic || !timing_started_) return 0.0;
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  if (secs <= 0.0) return 0.0;
  return static_cast<double>(window_.total_recorded()) / secs;
}

void EvaluatorBolt::on_event(const ContentEvent& ev, Emitter&) {
  if (const auto* pred = ev.get_if<PredictionPayload>()) {
    latest_model_ = pred->model;
    if (!pred->actual) return;
    if (!timing_started_) {
      started_ = std::chrono::steady_clock::now();
      timing_started_ = true;
    }
    auto outcome = window_.record(pred->predicted, *pred->actual);
    last_metrics_ = outcome.metrics;
    last_metrics_.throughput_ips = throughput_now();
    if (adwin_.update(outcome.correct ? 1.0 : 0.0)) {
      drift_points_.push_back(window_.total_recorded());
      window_.reset();
    }
    if (window_.total_recorded() % opts_.window == 0) write_metrics_row();
    if (window_.total_recorded() % opts_.curve_interval == 0) write_curve_point();
    if (opts_.snapshot_every > 0 && window_.total_recorded() % opts_.snapshot_every == 0 &&
        !opts_.synopsis_out.empty()) {
      write_file(snapshot_path(opts_.synopsis_out, window_.total_recorded()),
                 current_synopsis().serialize());
    }
  } else if (const auto* snap = ev.get_if<SketchSnapshotPayload>()) {
    latest_topk_ = snap->top;
  }
}

void EvaluatorBolt::on_flush(Emitter&) {
  if (window_.total_recorded() != last_curve_at_) write_curve_point();
  if (!opts_.metrics_csv.empty()) write_file(opts_.metrics_csv, metrics_rows_);
  if (!opts_.curve_csv.empty()) write_file(opts_.curve_csv, curve_rows_);
  if (!opts_.synopsis_out.empty()) write_file(opts_.synopsis_out, current_synopsis().serialize());
}

void EvaluatorBolt::write_metrics_row() {
  Metrics m = window_.metrics();
  ++metrics_rows_written_;
  metrics_rows_ += std::to_string(metrics_rows_written_) + "," +
                   std::to_string(window_.total_recorded()) + "," + pct(m.accuracy) + "," +
                   pct(m.kappa) + "," + fixed3(throughput_now()) + "\n";
}

void EvaluatorBolt::write_curve_point() {
  Metrics m = window_.metrics();
  curve_rows_ += std::to_string(window_.total_recorded()) + "," + pct(m.kappa) + "\n";
  last_curve_at_ = window_.total_recorded();
}

Synopsis EvaluatorBolt::current_synopsis() const {
  Metrics m = window_.metrics();
  m.throughput_ips = opts_.deterministic ? 0.0 : throughput_now();
  Synopsis s = snapshot(window_, latest_topk_, latest_model_, drift_points_.size());
  s.metrics = m;
  return s;
}

std::uint64_t EvaluatorBolt::state_entries() const {
  return window_.metrics().instances_in_window + latest_topk_.size();
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

namespace {

std::vector<std::unique_ptr<DocumentSource>> make_sources(const RunConfig& config) {
  std::vector<std::unique_ptr<DocumentSource>> sources;
  if (config.synthetic) {
    sources.push_back(std::make_unique<SyntheticSource>(*config.synthetic, *config.seed));
  } else {
    sources.push_back(std::make_unique<FileSource>(config.input_path, false));
  }
  if (!config.test_input_path.empty()) {
    sources.push_back(std::make_unique<FileSource>(config.test_input_path, true));
  }
  return sources;
}

}  // namespace

Topology build_experiment_topology(const RunConfig& config) {
  config.validate();

  TopologySpec spec;

  PiSpec source;
  source.name = "source";
  source.kind = PiKind::Spout;
  source.make_spout = [config](std::uint32_t) {
    return std::make_unique<SourceSpout>(make_sources(config));
  };
  spec.pis.push_back(std::move(source));

  PiSpec pipeline;
  pipeline.name = "pipeline";
  pipeline.kind = PiKind::Bolt;
  // The vocabulary is order-sensitive, so the pipeline stays at parallelism 1.
  std::size_t sketch_k = config.sketch_capacity;
  std::size_t top_k = config.feature_top_k;
  std::uint64_t snap_every = config.snapshot_every;
  pipeline.make_bolt = [sketch_k, top_k, snap_every](std::uint32_t) {
    return std::make_unique<PipelineBolt>(sketch_k, top_k, snap_every);
  };
  spec.pis.push_back(std::move(pipeline));

  std::string learner_pi;
  if (config.learner == LearnerKind::Vht) {
    learner_pi = "model-aggregator";
    VhtParams vp;
    vp.tree = config.tree;
    vp.local_parallelism = config.parallelism;
    vp.timeout_events = config.deterministic ? std::nullopt : config.timeout_events;

    PiSpec agg;
    agg.name = learner_pi;
    agg.kind = PiKind::Bolt;
    agg.make_bolt = [vp](std::uint32_t) { return std::make_unique<VhtAggregatorBolt>(vp); };
    spec.pis.push_back(std::move(agg));

    PiSpec locals;
    locals.name = "local-stats";
    locals.kind = PiKind::Bolt;
    locals.parallelism = config.parallelism;
    locals.make_bolt = [](std::uint32_t i) { return std::make_unique<LocalStatBolt>(i); };
    spec.pis.push_back(std::move(locals));
  } else {
    learner_pi = "learner";
    PiSpec learner;
    learner.name = learner_pi;
    learner.kind = PiKind::Bolt;
    LearnerKind kind = config.learner;
    HoeffdingParams tp = config.tree;
    double alpha = config.alpha;
    learner.make_bolt = [kind, tp, alpha](std::uint32_t) {
      return std::make_unique<SequentialLearnerBolt>(kind, tp, alpha);
    };
    spec.pis.push_back(std::move(learner));
  }

  PiSpec evaluator;
  evaluator.name = "evaluator";
  evaluator.kind = PiKind::Bolt;
  EvaluatorBolt::Options eopts;
  eopts.window = config.window;
  eopts.adwin_delta = config.adwin_delta;
  eopts.deterministic = config.deterministic;
  eopts.metrics_csv = config.metrics_csv;
  eopts.curve_csv = config.curve_csv;
  eopts.synopsis_out = config.synopsis_out;
  eopts.snapshot_every = config.snapshot_every;
  eopts.curve_interval = config.curve_interval;
  evaluator.make_bolt = [eopts](std::uint32_t) { return std::make_unique<EvaluatorBolt>(eopts); };
  spec.pis.push_back(std::move(evaluator));

  spec.streams.push_back({"source", "pipeline", Grouping::shuffle(), std::string(kDocStream)});
  spec.streams.push_back(
      {"pipeline", learner_pi, Grouping::shuffle(), std::string(kInstanceStream)});
  spec.streams.push_back(
      {"pipeline", "evaluator", Grouping::shuffle(), std::string(kSketchStream)});
  spec.streams.push_back(
      {learner_pi, "evaluator", Grouping::shuffle(), std::string(kPredictionStream)});
  if (config.learner == LearnerKind::Vht) {
    spec.streams.push_back({learner_pi, "local-stats", Grouping::key("attribute"),
                            std::string(kAttributeStream)});
    spec.streams.push_back(
        {learner_pi, "local-stats", Grouping::all(), std::string(kControlStream)});
    StreamSpec results{"local-stats", learner_pi, Grouping::key("leaf"),
                       std::string(kLocalResultStream)};
    results.feedback = true;
    spec.streams.push_back(std::move(results));
  }

  return build_topology(std::move(spec));
}

ExperimentResult run_experiment(const RunConfig& config) {
  Topology topo = build_experiment_topology(config);

  RunOptions opts;
  opts.mode = config.deterministic ? ExecutionMode::Deterministic : ExecutionMode::Concurrent;
  opts.queue_capacity = config.queue_capacity;

  auto t0 = std::chrono::steady_clock::now();
  RunReport report = topo.run(opts);
  auto t1 = std::chrono::steady_clock::now();

  const auto* pipeline = dynamic_cast<const PipelineBolt*>(topo.bolt_handler("pipeline", 0));
  const auto* evaluator = dynamic_cast<const EvaluatorBolt*>(topo.bolt_handler("evaluator", 0));
  auto* source = dynamic_cast<SourceSpout*>(topo.spout_handler("source", 0));

  ExperimentResult result;
  result.report = report;
  result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  if (source != nullptr) {
    result.documents_ingested = source->produced();
    result.documents_malformed = source->malformed();
  }
  if (pipeline != nullptr) result.documents_admitted = pipeline->admitted();
  if (evaluator != nullptr) {
    result.instances_evaluated = evaluator->recorded();
    result.final_metrics = evaluator->last_metrics();
    result.final_synopsis = evaluator->current_synopsis();
    result.drift_points = evaluator->drift_points();
  }
  return result;
}

Synopsis load_synopsis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read synopsis file '" + path + "'");
  return Synopsis::parse(in);
}

}  // namespace sentinel
