#include "sentinel/space_saving.hpp"

#include <algorithm>
#include <stdexcept>

namespace sentinel {

SpaceSavingSketch::SpaceSavingSketch(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("space-saving: capacity must be >= 1");
}

void SpaceSavingSketch::offer(std::string_view item) {
  ++stream_length_;

  auto it = index_.find(item);
  if (it != index_.end()) {
    bump(it->second);
    return;
  }

  if (index_.size() < capacity_) {
    if (buckets_.empty() || buckets_.front().count != 1) {
      buckets_.push_front(Bucket{1, {}});
    }
    auto bucket = buckets_.begin();
    bucket->counters.push_back(Counter{std::string(item), 1, 0, next_serial_++});
    auto cit = std::prev(bucket->counters.end());
    index_.emplace(cit->item, CounterRef{bucket, cit});
    return;
  }

  // Full: replace the least-recently-updated minimum-count counter. The
  // newcomer inherits count m+1 with overestimation error m.
  auto min_bucket = buckets_.begin();
  auto victim = min_bucket->counters.begin();
  std::uint64_t m = min_bucket->count;
  index_.erase(victim->item);
  victim->item.assign(item);
  victim->error = m;
  victim->serial = next_serial_++;
  index_.emplace(victim->item, CounterRef{min_bucket, victim});
  bump(index_.find(item)->second);
}

void SpaceSavingSketch::bump(CounterRef ref) {
  auto [bucket, cit] = ref;
  std::uint64_t new_count = bucket->count + 1;
  auto next = std::next(bucket);
  if (next == buckets_.end() || next->count != new_count) {
    next = buckets_.insert(next, Bucket{new_count, {}});
  }
  // Splice keeps the Counter node (and the strings the index points into)
  // stable; the mover becomes the most recently updated of its new bucket.
  next->counters.splice(next->counters.end(), bucket->counters, cit);
  cit->count = new_count;
  index_[cit->item] = CounterRef{next, cit};
  if (bucket->counters.empty()) buckets_.erase(bucket);
}

std::optional<SketchEntry> SpaceSavingSketch::estimate(std::string_view item) const {
  auto it = index_.find(item);
  if (it == index_.end()) return std::nullopt;
  const Counter& c = *it->second.second;
  return SketchEntry{c.item, c.count, c.error};
}

std::vector<SketchEntry> SpaceSavingSketch::top(std::size_t j) const {
  std::vector<SketchEntry> out;
  out.reserve(std::min(j, index_.size()));
  std::vector<const Counter*> tier;
  for (auto b = buckets_.rbegin(); b != buckets_.rend() && out.size() < j; ++b) {
    tier.clear();
    for (const Counter& c : b->counters) tier.push_back(&c);
    std::sort(tier.begin(), tier.end(),
              [](const Counter* a, const Counter* b) { return a->serial < b->serial; });
    for (const Counter* c : tier) {
      if (out.size() >= j) break;
      out.push_back(SketchEntry{c->item, c->count, c->error});
    }
  }
  return out;
}

std::uint64_t SpaceSavingSketch::min_count() const {
  if (buckets_.empty()) return 0;
  return buckets_.front().count;
}

}  // namespace sentinel
