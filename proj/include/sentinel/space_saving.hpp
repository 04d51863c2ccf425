#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentinel/types.hpp"

namespace sentinel {

/// SpaceSaving heavy-hitter sketch over string tokens, backed by the
/// Stream-Summary structure: a list of count buckets kept in ascending
/// count order, each holding its counters, so offers are O(1) and the
/// summary is always sorted.
///
/// Invariants maintained after every offer:
///   - at most `capacity` counters,
///   - sum of counts equals the stream length N exactly,
///   - count - error <= true frequency <= count for every monitored item,
///   - every stored error <= N / capacity.
class SpaceSavingSketch {
 public:
  explicit SpaceSavingSketch(std::size_t capacity);

  void offer(std::string_view item);

  /// Monitored (count, error) or nullopt. Absence implies the item's true
  /// frequency is at most the minimum monitored count.
  std::optional<SketchEntry> estimate(std::string_view item) const;

  /// The j highest-count items, non-increasing by count, ties broken by
  /// earliest insertion. j larger than the counter set returns everything.
  std::vector<SketchEntry> top(std::size_t j) const;

  /// All counters, same order as top().
  std::vector<SketchEntry> snapshot() const { return top(size()); }

  std::uint64_t stream_length() const { return stream_length_; }
  std::size_t size() const { return index_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t min_count() const;

 private:
  struct Counter {
    std::string item;
    std::uint64_t count = 0;
    std::uint64_t error = 0;
    std::uint64_t serial = 0;  // insertion order, for top() tie-breaks
  };
  struct Bucket {
    std::uint64_t count = 0;
    // Least-recently-updated counter first; eviction takes the front.
    std::list<Counter> counters;
  };
  using BucketList = std::list<Bucket>;
  using CounterRef = std::pair<BucketList::iterator, std::list<Counter>::iterator>;

  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  void bump(CounterRef ref);

  BucketList buckets_;  // ascending count order
  std::unordered_map<std::string, CounterRef, StringHash, std::equal_to<>> index_;
  std::size_t capacity_;
  std::uint64_t stream_length_ = 0;
  std::uint64_t next_serial_ = 0;
};

}  // namespace sentinel
