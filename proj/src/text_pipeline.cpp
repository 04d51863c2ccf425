#include "sentinel/text_pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace sentinel {

namespace {

constexpr std::string_view kUserToken = "USER";
constexpr std::string_view kUrlToken = "URL";

const std::array<std::string_view, 5> kPositiveEmoticons = {":)", ":-)", ":D", "=)", ";)"};
const std::array<std::string_view, 4> kNegativeEmoticons = {":(", ":-(", ":'(", "D:"};

// 50 high-frequency English function words for the language heuristic.
const std::unordered_set<std::string_view> kStopwords = {
    "the", "be",   "to",  "of",  "and",  "a",     "in",    "that",  "have", "i",
    "it",  "for",  "not", "on",  "with", "he",    "as",    "you",   "do",   "at",
    "this", "but", "his", "by",  "from", "they",  "we",    "say",   "her",  "she",
    "or",  "an",   "will", "my", "one",  "all",   "would", "there", "their", "what",
    "so",  "up",   "out", "if",  "about", "who",  "get",   "which", "go",   "me"};

std::vector<std::string_view> whitespace_split(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::string join(const std::vector<std::string_view>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out.append(t);
  }
  return out;
}

bool is_url_token(std::string_view t) {
  return t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.");
}

bool is_mention_token(std::string_view t) { return t.size() >= 2 && t.front() == '@'; }

bool is_emoticon(std::string_view t, bool& positive) {
  for (auto e : kPositiveEmoticons) {
    if (t == e) {
      positive = true;
      return true;
    }
  }
  for (auto e : kNegativeEmoticons) {
    if (t == e) {
      positive = false;
      return true;
    }
  }
  return false;
}

}  // namespace

bool language_admit(const Document& doc, std::string_view target_lang) {
  if (doc.lang) return *doc.lang == target_lang;
  std::uint64_t alpha = 0, non_space = 0;
  for (unsigned char c : doc.text) {
    if (std::isspace(c)) continue;
    ++non_space;
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) ++alpha;
  }
  if (non_space == 0) return false;
  if (static_cast<double>(alpha) / static_cast<double>(non_space) < 0.8) return false;
  for (const auto& tok : tokenize(doc.text)) {
    if (kStopwords.count(tok) > 0) return true;
  }
  return false;
}

std::string reduce_features(std::string_view text) {
  auto tokens = whitespace_split(text);
  for (auto& t : tokens) {
    if (is_mention_token(t)) {
      t = kUserToken;
    } else if (is_url_token(t)) {
      t = kUrlToken;
    }
  }
  return join(tokens);
}

std::pair<std::optional<Sentiment>, std::string> label_by_emoticons(std::string_view text) {
  auto tokens = whitespace_split(text);
  bool saw_pos = false, saw_neg = false;
  std::vector<std::string_view> kept;
  kept.reserve(tokens.size());
  for (auto t : tokens) {
    bool positive = false;
    if (is_emoticon(t, positive)) {
      (positive ? saw_pos : saw_neg) = true;
    } else {
      kept.push_back(t);
    }
  }
  std::optional<Sentiment> label;
  if (saw_pos != saw_neg) label = saw_pos ? Sentiment::Positive : Sentiment::Negative;
  return {label, join(kept)};
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;
    std::string_view run = text.substr(start, i - start);
    if (run == kUserToken || run == kUrlToken) {
      out.emplace_back(run);
      continue;
    }
    if (run.size() < 2) continue;
    std::string lowered(run);
    for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(lowered));
  }
  return out;
}

std::uint32_t Vocabulary::id_for(std::string_view token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  std::uint32_t id = static_cast<std::uint32_t>(tokens_.size());
  tokens_.emplace_back(token);
  doc_freq_.push_back(0);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::lookup(std::string_view token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(std::uint32_t id) const { return tokens_.at(id); }

double Vocabulary::idf(std::uint32_t id) const {
  std::uint64_t n_i = doc_freq_.at(id);
  if (n_i == 0) throw std::logic_error("vocabulary: idf of a token never seen in a document");
  return std::log(static_cast<double>(documents_) / static_cast<double>(n_i));
}

std::string Vocabulary::export_mapping() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < tokens_.size(); ++i) os << i << '\t' << tokens_[i] << '\n';
  return os.str();
}

std::vector<std::pair<std::string, double>> term_frequencies(
    const std::vector<std::string>& tokens) {
  std::vector<std::pair<std::string, double>> out;
  std::unordered_map<std::string_view, std::size_t> pos;
  for (const auto& t : tokens) {
    auto [it, fresh] = pos.emplace(t, out.size());
    if (fresh) {
      out.emplace_back(t, 1.0);
    } else {
      out[it->second].second += 1.0;
    }
  }
  double len = static_cast<double>(tokens.size());
  for (auto& [_, f] : out) f /= len;
  return out;
}

SparseInstance vectorize(const std::vector<std::string>& tokens, Vocabulary& vocab) {
  if (tokens.empty()) throw std::invalid_argument("vectorize: empty token list");

  // Count occurrences in first-appearance order so new attribute ids are
  // assigned deterministically for a given corpus order.
  std::vector<std::pair<std::uint32_t, double>> counts;  // (attr id, raw count)
  std::unordered_map<std::uint32_t, std::size_t> at;
  for (const auto& tok : tokens) {
    std::uint32_t id = vocab.id_for(tok);
    auto [it, fresh] = at.emplace(id, counts.size());
    if (fresh) {
      counts.emplace_back(id, 1.0);
    } else {
      counts[it->second].second += 1.0;
    }
  }

  vocab.documents_ += 1;
  for (auto& [id, _] : counts) vocab.doc_freq_[id] += 1;

  double len = static_cast<double>(tokens.size());
  SparseInstance inst;
  inst.features.reserve(counts.size());
  for (auto& [id, c] : counts) inst.features.emplace_back(id, (c / len) * vocab.idf(id));
  std::sort(inst.features.begin(), inst.features.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return inst;
}

SparseInstance select_features(const SparseInstance& instance, const Vocabulary& vocab,
                               SpaceSavingSketch& sketch, std::size_t top_k) {
  if (top_k == 0) throw std::invalid_argument("select_features: top_k must be >= 1");
  for (const auto& [attr, _] : instance.features) sketch.offer(vocab.token(attr));

  std::unordered_set<std::uint32_t> keep;
  for (const auto& entry : sketch.top(top_k)) {
    if (auto id = vocab.lookup(entry.item)) keep.insert(*id);
  }
  SparseInstance out;
  out.label = instance.label;
  out.features.reserve(instance.features.size());
  for (const auto& f : instance.features) {
    if (keep.count(f.first) > 0) out.features.push_back(f);
  }
  return out;
}

}  // namespace sentinel
