#include "sentinel/naive_bayes.hpp"

#include <cmath>
#include <stdexcept>

namespace sentinel {

NaiveBayesModel::NaiveBayesModel(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("naive bayes: alpha must be > 0");
}

void NaiveBayesModel::train(const SparseInstance& instance) {
  if (!instance.label) throw std::invalid_argument("naive bayes: training instance has no label");
  std::size_t c = class_index(*instance.label);
  doc_counts_[c] += 1.0;
  docs_total_ += 1;
  for (const auto& [attr, w] : instance.features) {
    feature_mass_[attr][c] += w;
    total_mass_[c] += w;
  }
}

std::optional<ClassCounts> NaiveBayesModel::log_scores(const SparseInstance& instance) const {
  if (docs_total_ == 0) return std::nullopt;
  double v = static_cast<double>(feature_mass_.size());
  ClassCounts scores{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    scores[c] = std::log(doc_counts_[c] / static_cast<double>(docs_total_));
    double denom = std::log(total_mass_[c] + alpha_ * v);
    for (const auto& [attr, w] : instance.features) {
      double mass = 0.0;
      if (auto it = feature_mass_.find(attr); it != feature_mass_.end()) mass = it->second[c];
      scores[c] += w * (std::log(mass + alpha_) - denom);
    }
  }
  return scores;
}

std::optional<Sentiment> NaiveBayesModel::predict(const SparseInstance& instance) const {
  auto scores = log_scores(instance);
  if (!scores) return std::nullopt;
  return (*scores)[class_index(Sentiment::Positive)] >
                 (*scores)[class_index(Sentiment::Negative)]
             ? Sentiment::Positive
             : Sentiment::Negative;
}

ModelSummary NaiveBayesModel::summary() const {
  ModelSummary s;
  s.learner = "mnb";
  s.nodes = feature_mass_.size();
  s.class_mass = total_mass_;
  return s;
}

}  // namespace sentinel
