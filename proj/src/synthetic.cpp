#include "sentinel/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sentinel {

SyntheticSpec SyntheticSpec::parse(std::string_view text) {
  SyntheticSpec spec;
  std::string s(text);
  std::istringstream in(s);
  std::string field;
  while (std::getline(in, field, ',')) {
    if (field.empty()) continue;
    auto eq = field.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("synthetic spec: expected key=value, got '" + field + "'");
    std::string key = field.substr(0, eq);
    std::string value = field.substr(eq + 1);
    try {
      if (key == "docs") {
        spec.docs = std::stoull(value);
      } else if (key == "vocab") {
        spec.vocab = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "zipf") {
        spec.zipf_exponent = std::stod(value);
      } else if (key == "strength") {
        spec.strength = std::stod(value);
      } else if (key == "balance") {
        spec.balance = std::stod(value);
      } else if (key == "drift") {
        spec.drift_at = std::stoull(value);
      } else if (key == "emoticons") {
        spec.emoticons = value == "1" || value == "on" || value == "true";
      } else if (key == "len") {
        auto colon = value.find(':');
        if (colon == std::string::npos)
          throw std::invalid_argument("len wants min:max");
        spec.len_min = static_cast<std::uint32_t>(std::stoul(value.substr(0, colon)));
        spec.len_max = static_cast<std::uint32_t>(std::stoul(value.substr(colon + 1)));
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("synthetic spec: bad value in '" + field + "'");
    }
  }
  spec.validate();
  return spec;
}

void SyntheticSpec::validate() const {
  if (vocab < 2) throw std::invalid_argument("synthetic spec: vocab must be >= 2");
  if (!(zipf_exponent > 0.0)) throw std::invalid_argument("synthetic spec: zipf must be > 0");
  if (strength < 0.0 || strength > 1.0)
    throw std::invalid_argument("synthetic spec: strength must be in [0,1]");
  if (balance < 0.0 || balance > 1.0)
    throw std::invalid_argument("synthetic spec: balance must be in [0,1]");
  if (len_min < 1 || len_max < len_min)
    throw std::invalid_argument("synthetic spec: need 1 <= len_min <= len_max");
}

std::string SyntheticSpec::to_string() const {
  std::ostringstream os;
  os << "docs=" << docs << ",vocab=" << vocab << ",zipf=" << zipf_exponent
     << ",strength=" << strength << ",balance=" << balance << ",drift=" << drift_at
     << ",emoticons=" << (emoticons ? 1 : 0) << ",len=" << len_min << ':' << len_max;
  return os.str();
}

SyntheticStream::SyntheticStream(SyntheticSpec spec, std::uint64_t seed)
    : spec_(spec), rng_(seed) {
  spec_.validate();
  zipf_cdf_.resize(spec_.vocab);
  double acc = 0.0;
  for (std::uint32_t i = 0; i < spec_.vocab; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i + 1), spec_.zipf_exponent);
    zipf_cdf_[i] = acc;
  }
  for (auto& v : zipf_cdf_) v /= acc;
}

std::uint32_t SyntheticStream::draw_token(Sentiment label, bool drifted) {
  double u = rng_.next_unit();
  auto it = std::lower_bound(zipf_cdf_.begin(), zipf_cdf_.end(), u);
  std::uint32_t idx = static_cast<std::uint32_t>(it - zipf_cdf_.begin());
  if (idx >= spec_.vocab) idx = spec_.vocab - 1;
  if (spec_.strength > 0.0 && rng_.bernoulli(spec_.strength)) {
    // Steer the draw to the class-preferred half of its frequency pair.
    // Even indices prefer positive; a drift flips the convention.
    std::uint32_t want = label == Sentiment::Positive ? 0u : 1u;
    if (drifted) want ^= 1u;
    if ((idx & 1u) != want) {
      std::uint32_t flipped = idx ^ 1u;
      idx = flipped < spec_.vocab ? flipped : idx - 1;
    }
  }
  return idx;
}

std::optional<LabeledDocument> SyntheticStream::next() {
  if (produced_ >= spec_.docs) return std::nullopt;
  bool drifted = spec_.drift_at > 0 && produced_ >= spec_.drift_at;
  Sentiment label = rng_.bernoulli(spec_.balance) ? Sentiment::Positive : Sentiment::Negative;
  std::uint32_t len =
      spec_.len_min + static_cast<std::uint32_t>(rng_.below(spec_.len_max - spec_.len_min + 1));

  std::string text;
  for (std::uint32_t i = 0; i < len; ++i) {
    if (!text.empty()) text.push_back(' ');
    text += "tok" + std::to_string(draw_token(label, drifted));
  }
  if (spec_.emoticons) text += label == Sentiment::Positive ? " :)" : " :(";

  LabeledDocument out;
  out.doc.id = "syn-" + std::to_string(produced_);
  out.doc.text = std::move(text);
  out.doc.lang = "en";
  out.label = label;
  ++produced_;
  return out;
}

}  // namespace sentinel
