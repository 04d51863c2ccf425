/* C API for the sentinel stream sentiment-analysis engine.
 *
 * Conventions:
 *   - Every fallible function returns a sentinel_status code; 0 is success.
 *   - On failure, sentinel_last_error() returns a thread-local message that
 *     stays valid until the next failing call on the same thread.
 *   - Opaque handles are created by *_new and released by *_free; a NULL
 *     handle argument yields SENTINEL_ERR_INVALID, never a crash.
 *   - Class labels on this surface are ints: 0 = negative, 1 = positive.
 */

#ifndef SENTINEL_H
#define SENTINEL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sentinel_status {
  SENTINEL_OK = 0,
  SENTINEL_ERR_INVALID = 1,   /* bad argument or configuration */
  SENTINEL_ERR_IO = 2,        /* file missing, unreadable, or corrupt */
  SENTINEL_ERR_STATE = 3,     /* operation undefined in the current state */
  SENTINEL_ERR_RUNTIME = 4,   /* topology or handler failure */
  SENTINEL_ERR_NOT_FOUND = 5, /* lookup miss (e.g. unmonitored sketch item) */
  SENTINEL_ABSTAIN = 6        /* untrained model declines to predict */
} sentinel_status;

const char* sentinel_last_error(void);
const char* sentinel_version(void);

/* -------------------------------------------------------------------- */
/* ADWIN change detector                                                 */

typedef struct sentinel_adwin sentinel_adwin;

sentinel_adwin* sentinel_adwin_new(double delta);
void sentinel_adwin_free(sentinel_adwin* h);
/* x must lie in [0,1]; *change_out is set to 1 when the window shrank. */
sentinel_status sentinel_adwin_update(sentinel_adwin* h, double x, int* change_out);
sentinel_status sentinel_adwin_width(const sentinel_adwin* h, uint64_t* width_out);
sentinel_status sentinel_adwin_mean(const sentinel_adwin* h, double* mean_out);

/* -------------------------------------------------------------------- */
/* SpaceSaving sketch                                                    */

typedef struct sentinel_sketch sentinel_sketch;

sentinel_sketch* sentinel_sketch_new(size_t capacity);
void sentinel_sketch_free(sentinel_sketch* h);
sentinel_status sentinel_sketch_offer(sentinel_sketch* h, const char* item);
/* SENTINEL_ERR_NOT_FOUND when the item is not monitored. */
sentinel_status sentinel_sketch_estimate(const sentinel_sketch* h, const char* item,
                                         uint64_t* count_out, uint64_t* error_out);
typedef int (*sentinel_topk_cb)(void* user_data, const char* item, uint64_t count,
                                uint64_t error);
/* Invokes cb for the top j items in rank order; a nonzero cb return stops
 * the walk early. */
sentinel_status sentinel_sketch_top(const sentinel_sketch* h, size_t j, sentinel_topk_cb cb,
                                    void* user_data);
sentinel_status sentinel_sketch_stream_length(const sentinel_sketch* h, uint64_t* n_out);

/* -------------------------------------------------------------------- */
/* Prequential sliding-window evaluator                                  */

typedef struct sentinel_evaluator sentinel_evaluator;

typedef struct sentinel_metrics {
  uint64_t instances_in_window;
  double accuracy;   /* valid when accuracy_defined */
  double kappa;      /* valid when kappa_defined */
  int accuracy_defined;
  int kappa_defined;
} sentinel_metrics;

sentinel_evaluator* sentinel_evaluator_new(size_t window);
void sentinel_evaluator_free(sentinel_evaluator* h);
sentinel_status sentinel_evaluator_record(sentinel_evaluator* h, int predicted, int actual,
                                          sentinel_metrics* metrics_out);
sentinel_status sentinel_evaluator_metrics(const sentinel_evaluator* h,
                                           sentinel_metrics* metrics_out);

/* -------------------------------------------------------------------- */
/* Online learners over sparse attribute vectors                         */

typedef struct sentinel_hoeffding_tree sentinel_hoeffding_tree;

sentinel_hoeffding_tree* sentinel_ht_new(double split_delta, double tie_tau, uint64_t grace);
void sentinel_ht_free(sentinel_hoeffding_tree* h);
sentinel_status sentinel_ht_train(sentinel_hoeffding_tree* h, const uint32_t* attrs,
                                  const double* weights, size_t n, int label);
sentinel_status sentinel_ht_predict(const sentinel_hoeffding_tree* h, const uint32_t* attrs,
                                    const double* weights, size_t n, int* label_out);
sentinel_status sentinel_ht_counts(const sentinel_hoeffding_tree* h, uint64_t* nodes_out,
                                   uint64_t* leaves_out, uint64_t* depth_out);

typedef struct sentinel_naive_bayes sentinel_naive_bayes;

sentinel_naive_bayes* sentinel_nb_new(double alpha);
void sentinel_nb_free(sentinel_naive_bayes* h);
sentinel_status sentinel_nb_train(sentinel_naive_bayes* h, const uint32_t* attrs,
                                  const double* weights, size_t n, int label);
/* SENTINEL_ABSTAIN before any training instance has been seen. */
sentinel_status sentinel_nb_predict(const sentinel_naive_bayes* h, const uint32_t* attrs,
                                    const double* weights, size_t n, int* label_out);

/* -------------------------------------------------------------------- */
/* Experiment runner                                                     */

typedef struct sentinel_run_config {
  const char* input_path;      /* NULL/"" when synthetic_spec is used */
  const char* test_input_path; /* optional held-out stream, never trained on */
  const char* synthetic_spec;  /* e.g. "docs=100000,vocab=2000,zipf=1.1,..." */
  const char* learner;         /* "mnb" | "ht" | "vht" */
  int parallelism;             /* vht local-statistic shards */
  uint64_t window;
  uint64_t sketch_capacity;
  uint64_t feature_top_k;
  double split_delta;
  double tie_tau;
  uint64_t grace;
  double alpha;
  double adwin_delta;
  int deterministic;
  int seed_set;
  uint64_t seed;
  int64_t timeout_events; /* < 0 disables the straggler timeout */
  const char* metrics_csv;  /* NULL/"" skips the artifact */
  const char* curve_csv;
  const char* synopsis_out;
  uint64_t snapshot_every; /* 0 = final synopsis only */
} sentinel_run_config;

void sentinel_run_config_init(sentinel_run_config* cfg); /* documented defaults */

typedef struct sentinel_run_report {
  uint64_t events_emitted;
  uint64_t events_delivered;
  uint64_t events_dropped_at_spout;
  uint64_t documents_ingested;
  uint64_t documents_malformed;
  uint64_t documents_admitted;
  uint64_t instances_evaluated;
  uint64_t drift_detections;
  double wall_seconds;
  double accuracy_pct; /* final window; valid when accuracy_defined */
  double kappa_pct;    /* final window; valid when kappa_defined */
  int accuracy_defined;
  int kappa_defined;
} sentinel_run_report;

sentinel_status sentinel_run(const sentinel_run_config* cfg, sentinel_run_report* report_out);

/* Loads a synopsis file and renders the human-readable answer. The returned
 * string is heap-allocated; release it with sentinel_string_free. */
sentinel_status sentinel_synopsis_query(const char* path, char** text_out);
void sentinel_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SENTINEL_H */
