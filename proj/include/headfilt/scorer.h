#ifndef HEADFILT_SCORER_H_
#define HEADFILT_SCORER_H_

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "headfilt/vocabulary.h"

namespace headfilt {

// Probability vector over a vocabulary for one sentence position.
struct CandidateDistribution {
  size_t position = 0;  // 0-based
  std::vector<double> values;
};

// Throws kInvalidArgument unless non-negative and summing to 1 +- tol.
void check_distribution(const CandidateDistribution& dist, double tol = 1e-9);

struct Sentence {
  std::string id;
  std::u32string chars;
};

// Source of per-position candidate distributions over vocab().
class CandidateScorer {
 public:
  virtual ~CandidateScorer() = default;
  virtual const Vocabulary& vocab() const = 0;
  // Throws kPositionOutOfRange.
  virtual CandidateDistribution score(const Sentence& sentence, size_t position) const = 0;
};

// Character n-gram model with interpolated absolute discounting backed off to
// a uniform distribution over the vocabulary plus an unknown-character slot.
// Token ids: 0..N-1 vocabulary, N unknown, N+1 sentence-start padding.
class NgramModel {
 public:
  static constexpr double kDefaultDiscount = 0.75;

  struct ContextStats {
    uint64_t total = 0;
    std::map<int, uint64_t> next;
  };
  // Order k table is keyed by the (k-1)-token context.
  using Table = std::map<std::vector<int>, ContextStats>;

  NgramModel() = default;
  NgramModel(Vocabulary vocab, int order, double discount, std::vector<Table> tables);

  // Throws kEmptyCorpus; kInvalidArgument for order < 1.
  static NgramModel train(const std::vector<std::u32string>& sentences, int order,
                          const Vocabulary& vocab, double discount = kDefaultDiscount);

  const Vocabulary& vocab() const { return vocab_; }
  int order() const { return order_; }
  double discount() const { return discount_; }
  const std::vector<Table>& tables() const { return tables_; }

  int unk_id() const { return static_cast<int>(vocab_.size()); }
  int bos_id() const { return static_cast<int>(vocab_.size()) + 1; }
  // Number of predictable events (vocabulary + unknown).
  size_t event_count() const { return vocab_.size() + 1; }
  int token(char32_t ch) const;

  // P(w | context); context holds at most order-1 most recent tokens.
  double prob(std::span<const int> context, int w) const;

  // For each vocabulary character c, the product of all order-n window
  // probabilities covering position i with c substituted, normalized.
  CandidateDistribution score_position(const std::u32string& sentence, size_t i) const;

 private:
  double prob_at(std::span<const int> context, int w, int level) const;

  Vocabulary vocab_;
  int order_ = 0;
  double discount_ = kDefaultDiscount;
  std::vector<Table> tables_;  // tables_[k-1] holds order-k counts
};

class NgramScorer : public CandidateScorer {
 public:
  explicit NgramScorer(std::shared_ptr<const NgramModel> model) : model_(std::move(model)) {}
  const Vocabulary& vocab() const override { return model_->vocab(); }
  CandidateDistribution score(const Sentence& sentence, size_t position) const override;

 private:
  std::shared_ptr<const NgramModel> model_;
};

// Distributions supplied by an external model, one record per sentence.
struct ExternalSentence {
  std::string id;
  std::u32string text;
  std::vector<CandidateDistribution> positions;  // one per character
};

struct ExternalLoadReport {
  size_t out_of_vocab_entries = 0;  // VocabMismatch: mass dropped
  size_t filled_positions = 0;      // positions with no entries
};

// JSON-lines reader; schema documented in docs/formats.md. Throws
// kFormatError with the line number.
std::vector<ExternalSentence> parse_external(std::string_view contents, const Vocabulary& vocab,
                                             ExternalLoadReport* report = nullptr);
std::vector<ExternalSentence> load_external(const std::string& path, const Vocabulary& vocab,
                                            ExternalLoadReport* report = nullptr);

// Every sentence and candidate character mentioned in an external file.
std::u32string external_characters(std::string_view contents);

class ExternalScorer : public CandidateScorer {
 public:
  ExternalScorer(Vocabulary vocab, std::vector<ExternalSentence> sentences);
  const Vocabulary& vocab() const override { return vocab_; }
  // Throws kIdMismatch when the sentence id or text is not in the file.
  CandidateDistribution score(const Sentence& sentence, size_t position) const override;

 private:
  Vocabulary vocab_;
  std::vector<ExternalSentence> sentences_;
  std::unordered_map<std::string, size_t> by_id_;
};

// Re-expresses another scorer's distributions over a different vocabulary;
// mass on characters outside the target is dropped and the rest
// renormalized (uniform when nothing remains).
class ProjectedScorer : public CandidateScorer {
 public:
  ProjectedScorer(std::shared_ptr<const CandidateScorer> base, Vocabulary target);
  const Vocabulary& vocab() const override { return target_; }
  CandidateDistribution score(const Sentence& sentence, size_t position) const override;

 private:
  std::shared_ptr<const CandidateScorer> base_;
  Vocabulary target_;
  std::vector<long> source_index_;  // target index -> base index or -1
};

}  // namespace headfilt

#endif  // HEADFILT_SCORER_H_
