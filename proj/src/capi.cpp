#include "sentinel.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>

#include "sentinel/adwin.hpp"
#include "sentinel/evaluator.hpp"
#include "sentinel/harness.hpp"
#include "sentinel/hoeffding_tree.hpp"
#include "sentinel/naive_bayes.hpp"
#include "sentinel/space_saving.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const char* what) { g_last_error = what == nullptr ? "" : what; }

sentinel_status fail(sentinel_status code, const char* what) {
  set_error(what);
  return code;
}

sentinel_status classify_exception() {
  try {
    throw;
  } catch (const std::invalid_argument& e) {
    return fail(SENTINEL_ERR_INVALID, e.what());
  } catch (const std::domain_error& e) {
    return fail(SENTINEL_ERR_STATE, e.what());
  } catch (const sentinel::TopologyError& e) {
    return fail(SENTINEL_ERR_RUNTIME, e.what());
  } catch (const std::exception& e) {
    return fail(SENTINEL_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(SENTINEL_ERR_RUNTIME, "unknown failure");
  }
}

sentinel::SparseInstance make_instance(const uint32_t* attrs, const double* weights, size_t n,
                                       int label) {
  sentinel::SparseInstance inst;
  inst.features.reserve(n);
  for (size_t i = 0; i < n; ++i) inst.features.emplace_back(attrs[i], weights[i]);
  std::sort(inst.features.begin(), inst.features.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (!inst.well_formed()) throw std::invalid_argument("instance: duplicate ids or bad weights");
  if (label >= 0) {
    inst.label = label == 0 ? sentinel::Sentiment::Negative : sentinel::Sentiment::Positive;
  }
  return inst;
}

void fill_metrics(const sentinel::Metrics& m, sentinel_metrics* out) {
  out->instances_in_window = m.instances_in_window;
  out->accuracy_defined = m.accuracy.has_value();
  out->accuracy = m.accuracy.value_or(0.0);
  out->kappa_defined = m.kappa.has_value();
  out->kappa = m.kappa.value_or(0.0);
}

}  // namespace

extern "C" {

const char* sentinel_last_error(void) { return g_last_error.c_str(); }

const char* sentinel_version(void) { return "1.0.0"; }

/* ---------------------------------------------------------------------- */

struct sentinel_adwin {
  sentinel::AdaptiveWindow impl;
};

sentinel_adwin* sentinel_adwin_new(double delta) {
  try {
    return new sentinel_adwin{sentinel::AdaptiveWindow(delta)};
  } catch (...) {
    classify_exception();
    return nullptr;
  }
}

void sentinel_adwin_free(sentinel_adwin* h) { delete h; }

sentinel_status sentinel_adwin_update(sentinel_adwin* h, double x, int* change_out) {
  if (h == nullptr) return fail(SENTINEL_ERR_INVALID, "null adwin handle");
  try {
    bool change = h->impl.update(x);
    if (change_out != nullptr) *change_out = change ? 1 : 0;
    return SENTINEL_OK;
  } catch (...) {
    return classify_exception();
  }
}

sentinel_status sentinel_adwin_width(const sentinel_adwin* h, uint64_t* width_out) {
  if (h == nullptr || width_out == nullptr) return fail(SENTINEL_ERR_INVALID, "null argument");
  *width_out = h->impl.width();
  return SENTINEL_OK;
}

sentinel_status sentinel_adwin_mean(const sentinel_adwin* h, double* mean_out) {
  if (h == nullptr || mean_out == nullptr) return fail(SENTINEL_ERR_INVALID, "null argument");
  try {
    *mean_out = h->impl.mean();
    return SENTINEL_OK;
  } catch (...) {
    return classify_exception();
  }
}

/* ---------------------------------------------------------------------- */

struct sentinel_sketch {
  sentinel::SpaceSavingSketch impl;
};

sentinel_sketch* sentinel_sketch_new(size_t capacity) {
  try {
    return new sentinel_sketch{sentinel::SpaceSavingSketch(capacity)};
  } catch (...) {
    classify_exception();
    return nullptr;
  }
}

void sentinel_sketch_free(sentinel_sketch* h) { delete h; }

sentinel_status sentinel_sketch_offer(sentinel_sketch* h, const char* item) {
  if (h == nullptr || item == nullptr) return fail(SENTINEL_ERR_INVALID, "null argument");
  try {
    h->impl.offer(item);
    return SENTINEL_OK;
  } catch (...) {
    return classify_exception();
  }
}

sentinel_status sentinel_sketch_estimate(const sentinel_sketch* h, const char* item,
                                         uint64_t* count_out, uint64_t* error_out) {
  if (h == nullptr || item == nullptr) return fail(SENTINEL_ERR_INVALID, "null argument");
  auto entry = h->impl.estimate(item);
  if (!entry) return fail(SENTINEL_ERR_NOT_FOUND, "item is not monitored");
  if (count_out != nullptr) *count_out = entry->count;
  if (error_out != nullptr) *error_out = entry->error;
  return SENTINEL_OK;
}

sentinel_status sentinel_sketch_top(const sentinel_sketch* h, size_t j, sentinel_topk_cb cb,
                                    void* user_data) {
  if (h == nullptr || cb == nullptr) return fail(SENTINEL_ERR_INVALID, "null argument");
  for (const auto& entry : h->impl.top(j)) {
    if (cb(user_data, entry.item.c_str(), entry.count, entry.error) != 0) break;
  }
  return SENTINEL_OK;
}

sentinel_status sentinel_sketch_stream_length(const sentinel_sketch* h, uint64_t* n_out) {
  if (h == nullptr || n_out == nullptr) return fail(SENTINEL_ERR_INVALID, "null argument");
  *n_out = h->impl.stream_length();
  return SENTINEL_OK;
}

/* ---------------------------------------------------------------------- */

struct sentinel_evaluator {
  sentinel::SlidingWindowEvaluator impl;
};

sentinel_evaluator* sentinel_evaluator_new(size_t window) {
  try {
    return new sentinel_evaluator{sentinel::SlidingWindowEvaluator(window)};
  } catch (...) {
    classify_exception();
    return nullptr;
  }
}

void sentinel_evaluator_free(sentinel_evaluator* h) { delete h; }

sentinel_status sentinel_evaluator_record(sentinel_evaluator* h, int predicted, int actual,
                                          sentinel_metrics* metrics_out) {
  if (h == nullptr) return fail(SENTINEL_ERR_INVALID, "null evaluator handle");
  if ((predicted != 0 && predicted != 1) || (actual != 0 && actual != 1))
    return fail(SENTINEL_ERR_INVALID, "labels must be 0 (negative) or 1 (positive)");
  auto outcome = h->impl.record(static_cast<sentinel::Sentiment>(predicted),
                                static_cast<sentinel::Sentiment>(actual));
  if (metrics_out != nullptr) fill_metrics(outcome.metrics, metrics_out);
  return SENTINEL_OK;
}

sentinel_status sentinel_evaluator_metrics(const sentinel_evaluator* h,
                                           sentinel_metrics* metrics_out) {
  if (h == nullptr || metrics_out == nullptr) return fail(SENTINEL_ERR_INVALID, "null argument");
  fill_metrics(h->impl.metrics(), metrics_out);
  return SENTINEL_OK;
}

/* ---------------------------------------------------------------------- */

struct sentinel_hoeffding_tree {
  sentinel::HoeffdingTree impl;
};

sentinel_hoeffding_tree* sentinel_ht_new(double split_delta, double tie_tau, uint64_t grace) {
  try {
    sentinel::HoeffdingParams p;
    p.split_delta = split_delta;
    p.tie_tau = tie_tau;
    p.grace = grace;
    if (!(split_delta > 0.0 && split_delta < 1.0))
      throw std::invalid_argument("split delta must be in (0,1)");
    if (grace < 1) throw std::invalid_argument("grace must be >= 1");
    return new sentinel_hoeffding_tree{sentinel::HoeffdingTree(p)};
  } catch (...) {
    classify_exception();
    return nullptr;
  }
}

void sentinel_ht_free(sentinel_hoeffding_tree* h) { delete h; }

sentinel_status sentinel_ht_train(sentinel_hoeffding_tree* h, const uint32_t* attrs,
                                  const double* weights, size_t n, int label) {
  if (h == nullptr || (n > 0 && (attrs == nullptr || weights == nullptr)))
    return fail(SENTINEL_ERR_INVALID, "null argument");
  if (label != 0 && label != 1)
    return fail(SENTINEL_ERR_INVALID, "labels must be 0 (negative) or 1 (positive)");
  try {
    h->impl.train(make_instance(attrs, weights, n, label));
    return SENTINEL_OK;
  } catch (...) {
    return classify_exception();
  }
}

sentinel_status sentinel_ht_predict(const sentinel_hoeffding_tree* h, const uint32_t* attrs,
                                    const double* weights, size_t n, int* label_out) {
  if (h == nullptr || label_out == nullptr || (n > 0 && (attrs == nullptr || weights == nullptr)))
    return fail(SENTINEL_ERR_INVALID, "null argument");
  try {
    *label_out = static_cast<int>(h->impl.predict(make_instance(attrs, weights, n, -1)));
    return SENTINEL_OK;
  } catch (...) {
    return classify_exception();
  }
}

sentinel_status sentinel_ht_counts(const sentinel_hoeffding_tree* h, uint64_t* nodes_out,
                                   uint64_t* leaves_out, uint64_t* depth_out) {
  if (h == nullptr) return fail(SENTINEL_ERR_INVALID, "null tree handle");
  if (nodes_out != nullptr) *nodes_out = h->impl.model().node_count();
  if (leaves_out != nullptr) *leaves_out = h->impl.model().leaf_count();
  if (depth_out != nullptr) *depth_out = h->impl.model().depth();
  return SENTINEL_OK;
}

/* ---------------------------------------------------------------------- */

struct sentinel_naive_bayes {
  sentinel::NaiveBayesModel impl;
};

sentinel_naive_bayes* sentinel_nb_new(double alpha) {
  try {
    return new sentinel_naive_bayes{sentinel::NaiveBayesModel(alpha)};
  } catch (...) {
    classify_exception();
    return nullptr;
  }
}

void sentinel_nb_free(sentinel_naive_bayes* h) { delete h; }

sentinel_status sentinel_nb_train(sentinel_naive_bayes* h, const uint32_t* attrs,
                                  const double* weights, size_t n, int label) {
  if (h == nullptr || (n > 0 && (attrs == nullptr || weights == nullptr)))
    return fail(SENTINEL_ERR_INVALID, "null argument");
  if (label != 0 && label != 1)
    return fail(SENTINEL_ERR_INVALID, "labels must be 0 (negative) or 1 (positive)");
  try {
    h->impl.train(make_instance(attrs, weights, n, label));
    return SENTINEL_OK;
  } catch (...) {
    return classify_exception();
  }
}

sentinel_status sentinel_nb_predict(const sentinel_naive_bayes* h, const uint32_t* attrs,
                                    const double* weights, size_t n, int* label_out) {
  if (h == nullptr || label_out == nullptr || (n > 0 && (attrs == nullptr || weights == nullptr)))
    return fail(SENTINEL_ERR_INVALID, "null argument");
  try {
    auto pred = h->impl.predict(make_instance(attrs, weights, n, -1));
    if (!pred) return fail(SENTINEL_ABSTAIN, "model has seen no training instances");
    *label_out = static_cast<int>(*pred);
    return SENTINEL_OK;
  } catch (...) {
    return classify_exception();
  }
}

/* ---------------------------------------------------------------------- */

void sentinel_run_config_init(sentinel_run_config* cfg) {
  if (cfg == nullptr) return;
  std::memset(cfg, 0, sizeof(*cfg));
  cfg->learner = "vht";
  cfg->parallelism = 2;
  cfg->window = 10000;
  cfg->sketch_capacity = 2000;
  cfg->feature_top_k = 1000;
  cfg->split_delta = 1e-7;
  cfg->tie_tau = 0.05;
  cfg->grace = 200;
  cfg->alpha = 1.0;
  cfg->adwin_delta = 0.01;
  cfg->timeout_events = 2000;
  cfg->metrics_csv = "metrics.csv";
  cfg->curve_csv = "curve.csv";
  cfg->synopsis_out = "synopsis.txt";
}

sentinel_status sentinel_run(const sentinel_run_config* cfg, sentinel_run_report* report_out) {
  if (cfg == nullptr) return fail(SENTINEL_ERR_INVALID, "null config");
  try {
    sentinel::RunConfig rc;
    rc.input_path = cfg->input_path == nullptr ? "" : cfg->input_path;
    rc.test_input_path = cfg->test_input_path == nullptr ? "" : cfg->test_input_path;
    if (cfg->synthetic_spec != nullptr && cfg->synthetic_spec[0] != '\0')
      rc.synthetic = sentinel::SyntheticSpec::parse(cfg->synthetic_spec);
    auto learner = sentinel::learner_from_string(cfg->learner == nullptr ? "" : cfg->learner);
    if (!learner) return fail(SENTINEL_ERR_INVALID, "learner must be mnb, ht, or vht");
    rc.learner = *learner;
    rc.parallelism = cfg->parallelism <= 0 ? 1 : static_cast<std::uint32_t>(cfg->parallelism);
    rc.window = cfg->window;
    rc.sketch_capacity = cfg->sketch_capacity;
    rc.feature_top_k = cfg->feature_top_k;
    rc.tree.split_delta = cfg->split_delta;
    rc.tree.tie_tau = cfg->tie_tau;
    rc.tree.grace = cfg->grace;
    rc.alpha = cfg->alpha;
    rc.adwin_delta = cfg->adwin_delta;
    rc.deterministic = cfg->deterministic != 0;
    if (cfg->seed_set != 0) rc.seed = cfg->seed;
    if (cfg->timeout_events < 0) {
      rc.timeout_events = std::nullopt;
    } else {
      rc.timeout_events = static_cast<std::uint64_t>(cfg->timeout_events);
    }
    rc.metrics_csv = cfg->metrics_csv == nullptr ? "" : cfg->metrics_csv;
    rc.curve_csv = cfg->curve_csv == nullptr ? "" : cfg->curve_csv;
    rc.synopsis_out = cfg->synopsis_out == nullptr ? "" : cfg->synopsis_out;
    rc.snapshot_every = cfg->snapshot_every;

    sentinel::ExperimentResult res = sentinel::run_experiment(rc);
    if (report_out != nullptr) {
      std::memset(report_out, 0, sizeof(*report_out));
      report_out->events_emitted = res.report.events_emitted;
      report_out->events_delivered = res.report.events_delivered;
      report_out->events_dropped_at_spout = res.report.events_dropped_at_spout;
      report_out->documents_ingested = res.documents_ingested;
      report_out->documents_malformed = res.documents_malformed;
      report_out->documents_admitted = res.documents_admitted;
      report_out->instances_evaluated = res.instances_evaluated;
      report_out->drift_detections = res.drift_points.size();
      report_out->wall_seconds = res.wall_seconds;
      report_out->accuracy_defined = res.final_metrics.accuracy.has_value();
      report_out->accuracy_pct = res.final_metrics.accuracy.value_or(0.0) * 100.0;
      report_out->kappa_defined = res.final_metrics.kappa.has_value();
      report_out->kappa_pct = res.final_metrics.kappa.value_or(0.0) * 100.0;
    }
    return SENTINEL_OK;
  } catch (...) {
    return classify_exception();
  }
}

sentinel_status sentinel_synopsis_query(const char* path, char** text_out) {
  if (path == nullptr || text_out == nullptr) return fail(SENTINEL_ERR_INVALID, "null argument");
  try {
    sentinel::Synopsis s = sentinel::load_synopsis(path);
    std::string text = s.format();
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (buf == nullptr) return fail(SENTINEL_ERR_RUNTIME, "out of memory");
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *text_out = buf;
    return SENTINEL_OK;
  } catch (const std::runtime_error& e) {
    return fail(SENTINEL_ERR_IO, e.what());
  } catch (...) {
    return classify_exception();
  }
}

void sentinel_string_free(char* s) { std::free(s); }

} /* extern "C" */
