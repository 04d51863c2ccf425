#include "sentinel/adwin.hpp"

#include <cmath>
#include <stdexcept>

namespace sentinel {

AdaptiveWindow::AdaptiveWindow(double delta, int max_buckets_per_row)
    : delta_(delta), max_buckets_(max_buckets_per_row) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("adwin: delta must be in (0,1)");
  if (max_buckets_per_row < 2) throw std::invalid_argument("adwin: need at least 2 buckets per row");
  rows_.emplace_back();
}

bool AdaptiveWindow::update(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("adwin: input outside [0,1]");
  append(x);
  compress();
  return shrink_while_cut();
}

double AdaptiveWindow::mean() const {
  if (width_ == 0) throw std::domain_error("adwin: mean of empty window");
  return total_sum_ / static_cast<double>(width_);
}

double AdaptiveWindow::variance() const {
  if (width_ == 0) return 0.0;
  return variance_acc_ / static_cast<double>(width_);
}

std::size_t AdaptiveWindow::bucket_count() const {
  std::size_t n = 0;
  for (const auto& row : rows_) n += row.size();
  return n;
}

void AdaptiveWindow::append(double x) {
  if (width_ > 0) {
    double m = total_sum_ / static_cast<double>(width_);
    variance_acc_ += static_cast<double>(width_) * (x - m) * (x - m) /
                     static_cast<double>(width_ + 1);
  }
  width_ += 1;
  total_sum_ += x;
  rows_[0].push_back(Bucket{x, 0.0});
}

void AdaptiveWindow::compress() {
  // When a row overflows, its two oldest buckets merge into one bucket of
  // the next row; the merge may cascade.
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() <= static_cast<std::size_t>(max_buckets_)) break;
    if (r + 1 == rows_.size()) rows_.emplace_back();
    Bucket a = rows_[r].front();
    rows_[r].pop_front();
    Bucket b = rows_[r].front();
    rows_[r].pop_front();
    double n = std::ldexp(1.0, static_cast<int>(r));  // items per bucket in row r
    double u1 = a.sum / n;
    double u2 = b.sum / n;
    double inc = n * n * (u1 - u2) * (u1 - u2) / (n + n);
    rows_[r + 1].push_back(Bucket{a.sum + b.sum, a.variance + b.variance + inc});
  }
}

bool AdaptiveWindow::shrink_while_cut() {
  bool dropped_any = false;
  bool again = width_ > 1;
  while (again) {
    again = false;
    double ln_term = std::log(4.0 * static_cast<double>(width_) / delta_);
    // Scan boundaries from the oldest bucket towards the newest; W0 is the
    // older part. The boundary after the newest bucket is not a split.
    double n0 = 0.0, sum0 = 0.0;
    const double total_n = static_cast<double>(width_);
    for (std::size_t ri = rows_.size(); ri-- > 0 && !again;) {
      double per_bucket = std::ldexp(1.0, static_cast<int>(ri));
      for (const Bucket& b : rows_[ri]) {
        n0 += per_bucket;
        sum0 += b.sum;
        double n1 = total_n - n0;
        if (n1 <= 0.0) break;
        double diff = sum0 / n0 - (total_sum_ - sum0) / n1;
        double m = 1.0 / (1.0 / n0 + 1.0 / n1);
        double eps = std::sqrt(ln_term / (2.0 * m));
        if (std::fabs(diff) >= eps) {
          drop_oldest_bucket();
          dropped_any = true;
          again = width_ > 1;
          break;
        }
      }
    }
  }
  return dropped_any;
}

void AdaptiveWindow::drop_oldest_bucket() {
  std::size_t r = rows_.size();
  while (r-- > 0) {
    if (!rows_[r].empty()) break;
  }
  Bucket b = rows_[r].front();
  rows_[r].pop_front();
  double n = std::ldexp(1.0, static_cast<int>(r));
  width_ -= static_cast<std::uint64_t>(n);
  total_sum_ -= b.sum;
  if (width_ > 0) {
    double u = b.sum / n;
    double mean_rest = total_sum_ / static_cast<double>(width_);
    double inc = b.variance +
                 n * static_cast<double>(width_) * (u - mean_rest) * (u - mean_rest) /
                     (n + static_cast<double>(width_));
    variance_acc_ -= inc;
    if (variance_acc_ < 0.0) variance_acc_ = 0.0;
  } else {
    variance_acc_ = 0.0;
  }
  while (rows_.size() > 1 && rows_.back().empty()) rows_.pop_back();
}

}  // namespace sentinel
