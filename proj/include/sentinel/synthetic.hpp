#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/types.hpp"

namespace sentinel {

/// Deterministic RNG helpers layered over mt19937_64. The standard
/// distributions are implementation-defined, so everything here is derived
/// from raw engine output to keep byte-identical streams across platforms.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }
  bool bernoulli(double p) { return next_unit() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Labeled-document generator spec, parseable from a compact
/// `key=value,key=value` string:
///
///   docs=100000,vocab=2000,zipf=1.1,strength=0.8,balance=0.5,
///   drift=50000,emoticons=1,len=8:16
///
/// Tokens are drawn from a Zipf distribution over `vocab` words. Each word
/// prefers one class (by index parity); with probability `strength` a drawn
/// word is steered to the document class's side, so strength=0 carries no
/// class signal at all. `drift` > 0 flips every word's preference after
/// that many documents. With `emoticons` on, each document ends with its
/// class emoticon so the self-labeling path sees it.
struct SyntheticSpec {
  std::uint64_t docs = 10000;
  std::uint32_t vocab = 2000;
  double zipf_exponent = 1.1;
  double strength = 0.8;
  double balance = 0.5;  // P(positive)
  std::uint64_t drift_at = 0;
  bool emoticons = true;
  std::uint32_t len_min = 8;
  std::uint32_t len_max = 16;

  static SyntheticSpec parse(std::string_view text);  // throws on bad keys/values
  std::string to_string() const;
  void validate() const;
};

struct LabeledDocument {
  Document doc;
  Sentiment label = Sentiment::Negative;
};

class SyntheticStream {
 public:
  SyntheticStream(SyntheticSpec spec, std::uint64_t seed);

  std::optional<LabeledDocument> next();
  std::uint64_t produced() const { return produced_; }
  const SyntheticSpec& spec() const { return spec_; }

 private:
  std::uint32_t draw_token(Sentiment label, bool drifted);

  SyntheticSpec spec_;
  DeterministicRng rng_;
  std::vector<double> zipf_cdf_;
  std::uint64_t produced_ = 0;
};

}  // namespace sentinel
