#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentinel/space_saving.hpp"
#include "sentinel/types.hpp"

namespace sentinel {

/// Append-only token dictionary with per-token document frequencies.
/// Attribute ids are dense and stable for the life of a run; idf uses the
/// natural log of N / n_i with post-update counts, so a token's first
/// occurrence yields a finite (possibly zero) weight.
class Vocabulary {
 public:
  std::uint32_t id_for(std::string_view token);              // inserts on first sight
  std::optional<std::uint32_t> lookup(std::string_view token) const;
  const std::string& token(std::uint32_t id) const;
  std::uint64_t doc_freq(std::uint32_t id) const { return doc_freq_.at(id); }
  std::uint64_t documents() const { return documents_; }
  std::size_t size() const { return tokens_.size(); }
  double idf(std::uint32_t id) const;

  /// Two-column `id token` text, ascending id.
  std::string export_mapping() const;

 private:
  friend SparseInstance vectorize(const std::vector<std::string>& tokens, Vocabulary& vocab);
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> ids_;
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> doc_freq_;
  std::uint64_t documents_ = 0;
};

/// True when the document is in the target language. A `lang` field
/// short-circuits the decision; otherwise a heuristic admits text whose
/// non-whitespace characters are >= 80% ASCII letters and which contains at
/// least one common target-language stopword.
bool language_admit(const Document& doc, std::string_view target_lang = "en");

/// Replaces @-mention tokens with USER and URL tokens with URL. Tokens are
/// whitespace-delimited; the output is single-space joined, which makes the
/// operation idempotent.
std::string reduce_features(std::string_view text);

/// Matches emoticons as whole whitespace tokens. Returns the derived label
/// (positive only, negative only, otherwise none) and the text with all
/// emoticon tokens removed.
std::pair<std::optional<Sentiment>, std::string> label_by_emoticons(std::string_view text);

/// Lowercased alphanumeric runs of length >= 2. The sentinel tokens USER
/// and URL are preserved verbatim.
std::vector<std::string> tokenize(std::string_view text);

/// Length-normalized incremental tf-idf: weight(i) = f_i * ln(N / n_i) with
/// f_i the token's share of the document and N, n_i taken after counting
/// this document. Updates the vocabulary. Throws on an empty token list.
SparseInstance vectorize(const std::vector<std::string>& tokens, Vocabulary& vocab);

/// Normalized term frequencies of a document, summing to 1.
std::vector<std::pair<std::string, double>> term_frequencies(const std::vector<std::string>& tokens);

/// Offers every token of the instance to the sketch, then keeps only the
/// features whose token currently ranks in the sketch's top K.
SparseInstance select_features(const SparseInstance& instance, const Vocabulary& vocab,
                               SpaceSavingSketch& sketch, std::size_t top_k);

}  // namespace sentinel
