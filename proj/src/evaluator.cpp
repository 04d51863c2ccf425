#include "sentinel/evaluator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace sentinel {

namespace {

std::uint64_t matrix_total(const ConfusionMatrix& cm) {
  return cm[0][0] + cm[0][1] + cm[1][0] + cm[1][1];
}

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

double accuracy(const ConfusionMatrix& cm) {
  std::uint64_t total = matrix_total(cm);
  if (total == 0) throw std::domain_error("accuracy of an empty confusion matrix");
  return static_cast<double>(cm[0][0] + cm[1][1]) / static_cast<double>(total);
}

std::optional<double> kappa_statistic(const ConfusionMatrix& cm) {
  std::uint64_t total = matrix_total(cm);
  if (total == 0) throw std::domain_error("kappa of an empty confusion matrix");
  // Chance agreement from the marginals, kept in exact integer arithmetic
  // so the pc == 1 degenerate case is detected without float fuzz.
  std::uint64_t chance_num = 0;
  for (int c = 0; c < 2; ++c) {
    std::uint64_t actual_marginal = cm[c][0] + cm[c][1];
    std::uint64_t predicted_marginal = cm[0][c] + cm[1][c];
    chance_num += actual_marginal * predicted_marginal;
  }
  std::uint64_t denom = total * total;
  if (chance_num == denom) return std::nullopt;
  double p0 = accuracy(cm);
  double pc = static_cast<double>(chance_num) / static_cast<double>(denom);
  return (p0 - pc) / (1.0 - pc);
}

SlidingWindowEvaluator::SlidingWindowEvaluator(std::size_t window) : window_(window) {
  if (window == 0) throw std::invalid_argument("evaluator: window must be >= 1");
}

SlidingWindowEvaluator::Outcome SlidingWindowEvaluator::record(Sentiment predicted,
                                                               Sentiment actual) {
  ring_.emplace_back(static_cast<std::uint8_t>(predicted), static_cast<std::uint8_t>(actual));
  cm_[class_index(actual)][class_index(predicted)] += 1;
  if (ring_.size() > window_) {
    auto [p, a] = ring_.front();
    ring_.pop_front();
    cm_[a][p] -= 1;
  }
  ++total_;
  return Outcome{metrics(), predicted == actual};
}

Metrics SlidingWindowEvaluator::metrics() const {
  Metrics m;
  m.instances_in_window = matrix_total(cm_);
  if (m.instances_in_window > 0) {
    m.accuracy = accuracy(cm_);
    m.kappa = kappa_statistic(cm_);
  }
  return m;
}

void SlidingWindowEvaluator::reset() {
  ring_.clear();
  cm_ = ConfusionMatrix{};
}

std::array<std::uint64_t, 2> SlidingWindowEvaluator::window_actual() const {
  return {cm_[0][0] + cm_[0][1], cm_[1][0] + cm_[1][1]};
}

std::array<std::uint64_t, 2> SlidingWindowEvaluator::window_predicted() const {
  return {cm_[0][0] + cm_[1][0], cm_[0][1] + cm_[1][1]};
}

// ---------------------------------------------------------------------------
// Synopsis
// ---------------------------------------------------------------------------

std::string Synopsis::serialize() const {
  std::ostringstream os;
  os << "synopsis.version 1\n";
  os << "timestamp_ms " << timestamp_ms << '\n';
  os << "instances_recorded " << instances_recorded << '\n';
  os << "window.size " << window_size << '\n';
  os << "window.instances " << metrics.instances_in_window << '\n';
  os << "metrics.accuracy_pct "
     << (metrics.accuracy ? fmt(*metrics.accuracy * 100.0, 2) : "undefined") << '\n';
  os << "metrics.kappa_pct " << (metrics.kappa ? fmt(*metrics.kappa * 100.0, 2) : "undefined")
     << '\n';
  os << "metrics.throughput_ips " << fmt(metrics.throughput_ips, 3) << '\n';
  os << "class.actual.negative " << window_actual[0] << '\n';
  os << "class.actual.positive " << window_actual[1] << '\n';
  os << "class.predicted.negative " << window_predicted[0] << '\n';
  os << "class.predicted.positive " << window_predicted[1] << '\n';
  os << "model.learner " << (model.learner.empty() ? "none" : model.learner) << '\n';
  os << "model.nodes " << model.nodes << '\n';
  os << "model.leaves " << model.leaves << '\n';
  os << "model.depth " << model.depth << '\n';
  os << "model.mass.negative " << fmt(model.class_mass[0], 4) << '\n';
  os << "model.mass.positive " << fmt(model.class_mass[1], 4) << '\n';
  os << "drift.detections " << drift_detections << '\n';
  os << "topk.count " << top_tokens.size() << '\n';
  for (std::size_t i = 0; i < top_tokens.size(); ++i) {
    os << "topk." << (i + 1) << ' ' << top_tokens[i].item << ' ' << top_tokens[i].count << ' '
       << top_tokens[i].error << '\n';
  }
  return os.str();
}

namespace {

[[noreturn]] void corrupt(std::size_t line_no, const std::string& why) {
  throw std::runtime_error("corrupt synopsis at line " + std::to_string(line_no) + ": " + why);
}

std::optional<double> parse_pct(const std::string& v, std::size_t line_no) {
  if (v == "undefined") return std::nullopt;
  try {
    return std::stod(v) / 100.0;
  } catch (const std::exception&) {
    corrupt(line_no, "expected a percentage or 'undefined', got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, std::size_t line_no) {
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    corrupt(line_no, "expected an unsigned integer, got '" + v + "'");
  }
}

double parse_f64(const std::string& v, std::size_t line_no) {
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    corrupt(line_no, "expected a number, got '" + v + "'");
  }
}

}  // namespace

Synopsis Synopsis::parse(std::istream& in) {
  Synopsis s;
  std::string line;
  std::size_t line_no = 0;
  bool versioned = false;
  std::size_t topk_expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto sp = line.find(' ');
    if (sp == std::string::npos) corrupt(line_no, "no key/value separator");
    std::string key = line.substr(0, sp);
    std::string value = line.substr(sp + 1);
    if (key == "synopsis.version") {
      if (value != "1") corrupt(line_no, "unsupported version '" + value + "'");
      versioned = true;
    } else if (key == "timestamp_ms") {
      s.timestamp_ms = static_cast<std::int64_t>(parse_f64(value, line_no));
    } else if (key == "instances_recorded") {
      s.instances_recorded = parse_u64(value, line_no);
    } else if (key == "window.size") {
      s.window_size = parse_u64(value, line_no);
    } else if (key == "window.instances") {
      s.metrics.instances_in_window = parse_u64(value, line_no);
    } else if (key == "metrics.accuracy_pct") {
      s.metrics.accuracy = parse_pct(value, line_no);
    } else if (key == "metrics.kappa_pct") {
      s.metrics.kappa = parse_pct(value, line_no);
    } else if (key == "metrics.throughput_ips") {
      s.metrics.throughput_ips = parse_f64(value, line_no);
    } else if (key == "class.actual.negative") {
      s.window_actual[0] = parse_u64(value, line_no);
    } else if (key == "class.actual.positive") {
      s.window_actual[1] = parse_u64(value, line_no);
    } else if (key == "class.predicted.negative") {
      s.window_predicted[0] = parse_u64(value, line_no);
    } else if (key == "class.predicted.positive") {
      s.window_predicted[1] = parse_u64(value, line_no);
    } else if (key == "model.learner") {
      s.model.learner = value;
    } else if (key == "model.nodes") {
      s.model.nodes = parse_u64(value, line_no);
    } else if (key == "model.leaves") {
      s.model.leaves = parse_u64(value, line_no);
    } else if (key == "model.depth") {
      s.model.depth = parse_u64(value, line_no);
    } else if (key == "model.mass.negative") {
      s.model.class_mass[0] = parse_f64(value, line_no);
    } else if (key == "model.mass.positive") {
      s.model.class_mass[1] = parse_f64(value, line_no);
    } else if (key == "drift.detections") {
      s.drift_detections = parse_u64(value, line_no);
    } else if (key == "topk.count") {
      topk_expected = parse_u64(value, line_no);
    } else if (key.rfind("topk.", 0) == 0) {
      std::istringstream vs(value);
      SketchEntry e;
      if (!(vs >> e.item >> e.count >> e.error)) corrupt(line_no, "bad top-k entry");
      s.top_tokens.push_back(std::move(e));
    } else {
      corrupt(line_no, "unknown key '" + key + "'");
    }
  }
  if (!versioned) corrupt(line_no == 0 ? 1 : line_no, "missing synopsis.version header");
  if (s.top_tokens.size() != topk_expected)
    corrupt(line_no, "topk.count promises " + std::to_string(topk_expected) + " entries, found " +
                         std::to_string(s.top_tokens.size()));
  return s;
}

std::string Synopsis::format() const {
  std::ostringstream os;
  os << "== synopsis ==\n";
  os << "captured_at_ms   " << timestamp_ms << '\n';
  os << "instances        " << instances_recorded << '\n';
  os << "window           " << metrics.instances_in_window << " of " << window_size << '\n';
  os << "accuracy         " << (metrics.accuracy ? fmt(*metrics.accuracy * 100.0, 2) + "%" : "undefined")
     << '\n';
  os << "kappa            " << (metrics.kappa ? fmt(*metrics.kappa * 100.0, 2) + "%" : "undefined")
     << '\n';
  os << "throughput_ips   " << fmt(metrics.throughput_ips, 3) << '\n';
  os << "actual    neg/pos " << window_actual[0] << '/' << window_actual[1] << '\n';
  os << "predicted neg/pos " << window_predicted[0] << '/' << window_predicted[1] << '\n';
  os << "model            " << (model.learner.empty() ? "none" : model.learner) << " nodes="
     << model.nodes << " leaves=" << model.leaves << " depth=" << model.depth << '\n';
  os << "drift detections " << drift_detections << '\n';
  os << "top tokens       " << top_tokens.size() << '\n';
  for (std::size_t i = 0; i < top_tokens.size(); ++i) {
    os << "  " << (i + 1) << ". " << top_tokens[i].item << ' ' << top_tokens[i].count << " (±"
       << top_tokens[i].error << ")\n";
  }
  return os.str();
}

Synopsis snapshot(const SlidingWindowEvaluator& ev, std::vector<SketchEntry> top_tokens,
                  ModelSummary model, std::uint64_t drift_detections, std::int64_t timestamp_ms) {
  Synopsis s;
  s.timestamp_ms = timestamp_ms >= 0
                       ? timestamp_ms
                       : std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
  s.instances_recorded = ev.total_recorded();
  s.window_size = ev.window_size();
  s.metrics = ev.metrics();
  s.window_actual = ev.window_actual();
  s.window_predicted = ev.window_predicted();
  s.top_tokens = std::move(top_tokens);
  s.model = std::move(model);
  s.drift_detections = drift_detections;
  return s;
}

}  // namespace sentinel
