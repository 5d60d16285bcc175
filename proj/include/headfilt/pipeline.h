#ifndef HEADFILT_PIPELINE_H_
#define HEADFILT_PIPELINE_H_

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "headfilt/filt_train.h"
#include "headfilt/scorer.h"
#include "headfilt/sim_filter.h"

namespace headfilt {

// Argmax with ties broken by the lowest index.
size_t argmax_index(std::span<const double> values);

char32_t predict_unfiltered(const CandidateDistribution& dist, const Vocabulary& vocab);

// Argmax of dist (.) simvec. Throws kLengthMismatch.
char32_t predict_filtered(const CandidateDistribution& dist, const SimilarityVector& simvec,
                          const Vocabulary& vocab);

// Similarity vector for an input character, aligned to vocab().
class SimilarityFilter {
 public:
  virtual ~SimilarityFilter() = default;
  virtual const Vocabulary& vocab() const = 0;
  virtual SimilarityVector vector_for(char32_t ch) const = 0;
};

class ConfusionSetFilter : public SimilarityFilter {
 public:
  ConfusionSetFilter(ConfusionSets sets, Vocabulary vocab);
  const Vocabulary& vocab() const override { return vocab_; }
  SimilarityVector vector_for(char32_t ch) const override;
  size_t ignored_members() const { return ignored_; }

 private:
  ConfusionSets sets_;
  Vocabulary vocab_;
  size_t ignored_ = 0;  // members outside the vocabulary over all sets
};

// Learned filter; vectors are computed on demand and cached per character.
class HeadFilter : public SimilarityFilter {
 public:
  explicit HeadFilter(const FilterModel& model, int threads = 1);
  HeadFilter(Vocabulary vocab, Eigen::MatrixXd embeddings, FilterConfig config);
  const Vocabulary& vocab() const override { return vocab_; }
  SimilarityVector vector_for(char32_t ch) const override;
  const FilterConfig& config() const { return config_; }

 private:
  Vocabulary vocab_;
  Eigen::MatrixXd embeddings_;
  FilterConfig config_;
  mutable std::mutex mu_;
  mutable std::unordered_map<char32_t, std::shared_ptr<const SimilarityVector>> cache_;
};

struct Edit {
  size_t position = 0;  // 1-based
  char32_t wrong = 0;
  char32_t correction = 0;

  bool operator==(const Edit&) const = default;
};

struct PositionResult {
  char32_t input = 0;
  char32_t predicted = 0;
  bool flagged = false;

  bool operator==(const PositionResult&) const = default;
};

struct CheckResult {
  std::string id;
  std::vector<PositionResult> positions;
  std::vector<Edit> edits;

  bool operator==(const CheckResult&) const = default;
};

struct CheckOptions {
  // When > 0, a changed prediction is flagged only if its share of the
  // filtered mass reaches this value. Off by default.
  double min_confidence = 0.0;
};

// Scores every position, predicts under the filter (nullptr: unfiltered) and
// flags positions whose prediction differs from the input. Characters outside
// the scorer vocabulary pass through unflagged. Scorer and filter must share
// one vocabulary (kVocabMismatch otherwise).
CheckResult check_sentence(const Sentence& sentence, const CandidateScorer& scorer,
                           const SimilarityFilter* filter, const CheckOptions& options = {});

}  // namespace headfilt

#endif  // HEADFILT_PIPELINE_H_
