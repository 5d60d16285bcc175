#include "headfilt/pipeline.h"

#include "headfilt/error.h"

namespace headfilt {

size_t argmax_index(std::span<const double> values) {
  size_t best = 0;
  for (size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

char32_t predict_unfiltered(const CandidateDistribution& dist, const Vocabulary& vocab) {
  if (dist.values.size() != vocab.size()) {
    throw Error(ErrorCode::kLengthMismatch, "distribution and vocabulary differ in length");
  }
  return vocab.at(argmax_index(dist.values));
}

char32_t predict_filtered(const CandidateDistribution& dist, const SimilarityVector& simvec,
                          const Vocabulary& vocab) {
  if (dist.values.size() != simvec.values.size() || dist.values.size() != vocab.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "distribution (" + std::to_string(dist.values.size()) + "), similarity vector (" +
                    std::to_string(simvec.values.size()) + ") and vocabulary (" +
                    std::to_string(vocab.size()) + ") differ in length");
  }
  std::vector<double> product(dist.values.size());
  for (size_t k = 0; k < product.size(); ++k) product[k] = dist.values[k] * simvec.values[k];
  return vocab.at(argmax_index(product));
}

ConfusionSetFilter::ConfusionSetFilter(ConfusionSets sets, Vocabulary vocab)
    : sets_(std::move(sets)), vocab_(std::move(vocab)) {
  for (const auto& [head, members] : sets_.sets()) {
    for (char32_t m : members) ignored_ += !vocab_.contains(m);
  }
}

SimilarityVector ConfusionSetFilter::vector_for(char32_t ch) const {
  return confusion_vector(ch, sets_, vocab_);
}

HeadFilter::HeadFilter(const FilterModel& model, int threads)
    : HeadFilter(model.vocab, model.embeddings(threads), model.config) {}

HeadFilter::HeadFilter(Vocabulary vocab, Eigen::MatrixXd embeddings, FilterConfig config)
    : vocab_(std::move(vocab)), embeddings_(std::move(embeddings)), config_(config) {
  config_.validate();
  if (static_cast<size_t>(embeddings_.rows()) != vocab_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding rows do not match the vocabulary");
  }
}

SimilarityVector HeadFilter::vector_for(char32_t ch) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = cache_.find(ch); it != cache_.end()) return *it->second;
  }
  auto vec = std::make_shared<const SimilarityVector>(
      headfilt_vector(ch, vocab_, embeddings_, config_));
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(ch, vec);
  return *vec;
}

CheckResult check_sentence(const Sentence& sentence, const CandidateScorer& scorer,
                           const SimilarityFilter* filter, const CheckOptions& options) {
  const Vocabulary& vocab = scorer.vocab();
  if (filter != nullptr && !(filter->vocab() == vocab)) {
    throw Error(ErrorCode::kVocabMismatch, "scorer and filter use different vocabularies");
  }
  CheckResult result;
  result.id = sentence.id;
  result.positions.reserve(sentence.chars.size());
  for (size_t i = 0; i < sentence.chars.size(); ++i) {
    const char32_t input = sentence.chars[i];
    PositionResult pos{input, input, false};
    if (vocab.contains(input)) {
      try {
        const CandidateDistribution dist = scorer.score(sentence, i);
        std::vector<double> scores = dist.values;
        if (filter != nullptr) {
          const SimilarityVector sim = filter->vector_for(input);
          pos.predicted = predict_filtered(dist, sim, vocab);
          for (size_t k = 0; k < scores.size(); ++k) scores[k] *= sim.values[k];
        } else {
          pos.predicted = predict_unfiltered(dist, vocab);
        }
        pos.flagged = pos.predicted != input;
        if (pos.flagged && options.min_confidence > 0.0) {
          double total = 0.0;
          for (double s : scores) total += s;
          const double share = total > 0.0 ? scores[vocab.index(pos.predicted)] / total : 0.0;
          if (share < options.min_confidence) {
            pos.flagged = false;
            pos.predicted = input;
          }
        }
      } catch (const Error& e) {
        throw Error(e.code(), "sentence " + sentence.id + " position " + std::to_string(i + 1) +
                                  ": " + e.what());
      }
    }
    if (pos.flagged) result.edits.push_back({i + 1, input, pos.predicted});
    result.positions.push_back(pos);
  }
  return result;
}

}  // namespace headfilt
