#include "sentinel/types.hpp"

#include <algorithm>
#include <cmath>

namespace sentinel {

const char* to_string(Sentiment s) {
  return s == Sentiment::Positive ? "positive" : "negative";
}

std::optional<Sentiment> sentiment_from_string(std::string_view s) {
  if (s == "positive") return Sentiment::Positive;
  if (s == "negative") return Sentiment::Negative;
  return std::nullopt;
}

double SparseInstance::weight_for(std::uint32_t attr) const {
  auto it = std::lower_bound(features.begin(), features.end(), attr,
                             [](const auto& f, std::uint32_t a) { return f.first < a; });
  if (it == features.end() || it->first != attr) return 0.0;
  return it->second;
}

bool SparseInstance::well_formed() const {
  std::uint32_t prev = 0;
  bool first = true;
  for (const auto& [attr, w] : features) {
    if (!first && attr <= prev) return false;
    if (!(w >= 0.0) || !std::isfinite(w)) return false;
    prev = attr;
    first = false;
  }
  return true;
}

}  // namespace sentinel
