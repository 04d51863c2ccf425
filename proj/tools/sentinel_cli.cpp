// Command-line front end for the sentinel engine. Everything goes through
// the C API in sentinel.h, the same surface an embedding application would
// link against.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "sentinel.h"

namespace {

int run_query(const std::string& path) {
  char* text = nullptr;
  sentinel_status rc = sentinel_synopsis_query(path.c_str(), &text);
  if (rc != SENTINEL_OK) {
    std::fprintf(stderr, "error: %s\n", sentinel_last_error());
    return 1;
  }
  std::fputs(text, stdout);
  sentinel_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sentinel: real-time stream sentiment analysis"};

  std::string input, test_input, synthetic, learner = "vht", timeout = "2000", query;
  std::string metrics_csv = "metrics.csv", curve_csv = "curve.csv", synopsis_out = "synopsis.txt";
  int parallelism = 2;
  std::uint64_t window = 10000, sketch_k = 2000, top_k = 1000, grace = 200, snapshot_every = 0;
  std::uint64_t seed = 0;
  double split_delta = 1e-7, tie_tau = 0.05, alpha = 1.0, adwin_delta = 0.01;
  bool deterministic = false;
  bool seed_set = false;

  app.add_option("--input", input, "line-delimited input file (JSON records or raw text)");
  app.add_option("--test-input", test_input,
                 "held-out file replayed after training input; never trained on");
  app.add_option("--synthetic", synthetic,
                 "generator spec, e.g. docs=100000,vocab=2000,zipf=1.1,strength=0.8,"
                 "balance=0.5,drift=0,emoticons=1,len=8:16");
  app.add_option("--learner", learner, "mnb | ht | vht")->capture_default_str();
  app.add_option("--parallelism", parallelism, "vht local-statistic shards")
      ->capture_default_str();
  app.add_option("--window", window, "evaluation sliding window")->capture_default_str();
  app.add_option("--sketch-k", sketch_k, "SpaceSaving counter capacity")->capture_default_str();
  app.add_option("--top-k", top_k, "features kept per instance")->capture_default_str();
  app.add_option("--split-delta", split_delta, "Hoeffding split confidence")
      ->capture_default_str();
  app.add_option("--tie-tau", tie_tau, "split tie threshold")->capture_default_str();
  app.add_option("--grace", grace, "instances between split attempts")->capture_default_str();
  app.add_option("--alpha", alpha, "naive bayes smoothing")->capture_default_str();
  app.add_option("--adwin-delta", adwin_delta, "drift detector confidence")
      ->capture_default_str();
  app.add_flag("--deterministic", deterministic,
               "single-threaded fixed schedule; byte-identical artifacts");
  app.add_option("--seed", seed, "generator seed (required with --synthetic)")
      ->each([&seed_set](const std::string&) { seed_set = true; });
  app.add_option("--timeout-events", timeout, "split-attempt timeout in events, or 'off'")
      ->capture_default_str();
  app.add_option("--metrics-csv", metrics_csv, "per-window metrics output")
      ->capture_default_str();
  app.add_option("--curve-csv", curve_csv, "learning-curve output")->capture_default_str();
  app.add_option("--synopsis-out", synopsis_out, "final synopsis output")
      ->capture_default_str();
  app.add_option("--snapshot-every", snapshot_every,
                 "write a synopsis snapshot every N evaluated instances");
  app.add_option("--query", query, "print a stored synopsis and exit");

  CLI11_PARSE(app, argc, argv);

  if (!query.empty()) return run_query(query);

  sentinel_run_config cfg;
  sentinel_run_config_init(&cfg);
  cfg.input_path = input.empty() ? nullptr : input.c_str();
  cfg.test_input_path = test_input.empty() ? nullptr : test_input.c_str();
  cfg.synthetic_spec = synthetic.empty() ? nullptr : synthetic.c_str();
  cfg.learner = learner.c_str();
  cfg.parallelism = parallelism;
  cfg.window = window;
  cfg.sketch_capacity = sketch_k;
  cfg.feature_top_k = top_k;
  cfg.split_delta = split_delta;
  cfg.tie_tau = tie_tau;
  cfg.grace = grace;
  cfg.alpha = alpha;
  cfg.adwin_delta = adwin_delta;
  cfg.deterministic = deterministic ? 1 : 0;
  cfg.seed_set = seed_set ? 1 : 0;
  cfg.seed = seed;
  if (timeout == "off") {
    cfg.timeout_events = -1;
  } else {
    try {
      cfg.timeout_events = static_cast<int64_t>(std::stoll(timeout));
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: --timeout-events wants a count or 'off'\n");
      return 1;
    }
  }
  cfg.metrics_csv = metrics_csv.c_str();
  cfg.curve_csv = curve_csv.c_str();
  cfg.synopsis_out = synopsis_out.c_str();
  cfg.snapshot_every = snapshot_every;

  sentinel_run_report report;
  sentinel_status rc = sentinel_run(&cfg, &report);
  if (rc != SENTINEL_OK) {
    std::fprintf(stderr, "error: %s\n", sentinel_last_error());
    return 1;
  }

  std::printf("learner=%s instances=%llu evaluated=%llu", learner.c_str(),
              static_cast<unsigned long long>(report.documents_ingested),
              static_cast<unsigned long long>(report.instances_evaluated));
  if (report.accuracy_defined) std::printf(" accuracy=%.2f%%", report.accuracy_pct);
  if (report.kappa_defined) std::printf(" kappa=%.2f%%", report.kappa_pct);
  std::printf(" time=%.1fs\n", report.wall_seconds);
  std::printf("engine: emitted=%llu delivered=%llu dropped_at_spout=%llu\n",
              static_cast<unsigned long long>(report.events_emitted),
              static_cast<unsigned long long>(report.events_delivered),
              static_cast<unsigned long long>(report.events_dropped_at_spout));
  if (report.documents_malformed > 0) {
    std::printf("malformed lines skipped: %llu\n",
                static_cast<unsigned long long>(report.documents_malformed));
  }
  std::printf("drift detections: %llu\n",
              static_cast<unsigned long long>(report.drift_detections));
  std::printf("artifacts: metrics=%s curve=%s synopsis=%s\n", metrics_csv.c_str(),
              curve_csv.c_str(), synopsis_out.c_str());
  return 0;
}
