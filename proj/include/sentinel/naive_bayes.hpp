#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>

#include "sentinel/types.hpp"

namespace sentinel {

/// Multinomial Naive Bayes over tf-idf weights with Laplace smoothing.
/// One-pass: state is class priors plus per-(class, attribute) mass.
class NaiveBayesModel {
 public:
  explicit NaiveBayesModel(double alpha = 1.0);

  void train(const SparseInstance& instance);  // throws if unlabeled

  /// Per-class log scores, or nullopt before any training (abstention).
  std::optional<ClassCounts> log_scores(const SparseInstance& instance) const;

  /// Argmax of log_scores; ties resolve to the lexicographically first
  /// class name. Nullopt while untrained.
  std::optional<Sentiment> predict(const SparseInstance& instance) const;

  std::uint64_t documents_seen() const { return docs_total_; }
  std::size_t vocabulary_size() const { return feature_mass_.size(); }
  std::uint64_t state_entries() const { return feature_mass_.size(); }
  ModelSummary summary() const;
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  ClassCounts doc_counts_{0.0, 0.0};
  ClassCounts total_mass_{0.0, 0.0};
  std::unordered_map<std::uint32_t, ClassCounts> feature_mass_;
  std::uint64_t docs_total_ = 0;
};

}  // namespace sentinel
