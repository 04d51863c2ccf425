#pragma once

#include <cstdint>
#include <deque>
#include <vector>

namespace sentinel {

/// ADWIN change detector over values in [0,1]. Keeps a variable-size window
/// as an exponential histogram: row r holds buckets of 2^r items, at most M
/// buckets per row, so memory is O(M log width) regardless of width. The
/// window grows while the stream looks stationary and drops its oldest
/// buckets when two adjacent sub-windows disagree in mean beyond the cut
/// threshold
///
///   eps_cut = sqrt(ln(4 width / delta) / (2 m)),  m = 1/(1/n0 + 1/n1).
class AdaptiveWindow {
 public:
  explicit AdaptiveWindow(double delta, int max_buckets_per_row = 5);

  /// Appends x and checks every bucket-boundary split of the window.
  /// Returns true iff at least one oldest bucket was dropped.
  bool update(double x);

  std::uint64_t width() const { return width_; }
  double mean() const;      // throws std::domain_error on an empty window
  double variance() const;  // population variance of the window
  double delta() const { return delta_; }

  std::size_t bucket_count() const;

 private:
  struct Bucket {
    double sum = 0.0;
    double variance = 0.0;
  };

  void append(double x);
  void compress();
  bool shrink_while_cut();
  void drop_oldest_bucket();

  // rows_[r] holds buckets of 2^r items, oldest first.
  std::vector<std::deque<Bucket>> rows_;
  double delta_;
  int max_buckets_;
  std::uint64_t width_ = 0;
  double total_sum_ = 0.0;
  double variance_acc_ = 0.0;
};

}  // namespace sentinel
