#ifndef HEADFILT_FILT_TRAIN_H_
#define HEADFILT_FILT_TRAIN_H_

#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "headfilt/char_tree.h"
#include "headfilt/corpus.h"
#include "headfilt/hier_embed.h"
#include "headfilt/random.h"
#include "headfilt/sim_filter.h"
#include "headfilt/vocabulary.h"

namespace headfilt {

// Where a model came from; stored with it on disk.
struct Provenance {
  std::vector<std::string> stages;  // "stage1", "stage2", "calibrate"
  uint64_t seed = 0;
  int stage1_steps = 0;
  int stage2_steps = 0;
  std::vector<std::pair<std::string, std::string>> data_hashes;  // label -> hex digest

  bool operator==(const Provenance&) const = default;
};

// Trained filter: one tree per vocabulary character plus the embedding
// parameters and the calibrated similarity configuration.
struct FilterModel {
  Vocabulary vocab;
  std::vector<CharTree> trees;  // aligned with vocab
  EmbedParams params;
  FilterConfig config;
  Provenance provenance;

  // One row per vocabulary character.
  Eigen::MatrixXd embeddings(int threads = 1) const;
};

struct TrainPair {
  char32_t a = 0;
  char32_t b = 0;
  int label = 0;  // S(a, b)
};

struct PairLoss {
  double loss = 0.0;
  double grad_d = 0.0;  // d loss / d distance
};

// Hinge contrastive term: label 1 -> max(0, d - m), label 0 -> max(0, m - d).
// The subgradient at d == m is 0.
PairLoss pair_loss(int label, double d, double margin);

// Looks the pair up in `embeddings` (rows aligned with vocab). Throws
// kUnknownCharacter.
PairLoss pair_loss(const TrainPair& pair, const Vocabulary& vocab,
                   const Eigen::MatrixXd& embeddings, double margin);

// Set of unordered positive pairs with a deterministic (sorted) listing.
class PositivePairs {
 public:
  void add(char32_t a, char32_t b);
  bool contains(char32_t a, char32_t b) const;
  size_t size() const { return list_.size(); }
  const std::vector<CharPair>& list() const { return list_; }

 private:
  static uint64_t key(char32_t a, char32_t b);
  std::unordered_set<uint64_t> keys_;
  std::vector<CharPair> list_;  // kept sorted
};

// All unordered pairs within each confusion set, head included. Throws
// kEmptySets.
PositivePairs build_stage1_pairs(const ConfusionSets& sets);

// Stage-1 positives plus every (wrong, correct) gold edit, deduplicated.
PositivePairs build_stage2_pairs(const PositivePairs& stage1, const LabeledCorpus& corpus);

// Uniform vocabulary pairs (a != b) with positives rejected.
class NegativeSampler {
 public:
  NegativeSampler(const Vocabulary& vocab, const PositivePairs& positives);
  // Index pair into the vocabulary. Throws kInvalidArgument if the vocabulary
  // has no negative pair at all.
  std::pair<size_t, size_t> sample(Rng& rng) const;

 private:
  const Vocabulary& vocab_;
  const PositivePairs& positives_;
};

struct TrainConfig {
  double margin = kDefaultMargin;
  double learning_rate = 3e-3;
  int batch_size = 500;
  int stage1_steps = 150000;
  int stage2_steps = 50000;
  int negatives_per_positive = 1;
  uint64_t seed = 1;
  int input_dim = 512;
  int hidden_dim = 512;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  size_t calibration_pairs = 100000;
  size_t report_pairs = 10000;
  int threads = 1;
  // Called every checkpoint_every steps (0 disables) with the current stage.
  int checkpoint_every = 0;
  std::function<void(const FilterModel&, const std::string& stage, int step)> on_checkpoint;
  // Progress lines, e.g. to standard error.
  std::function<void(const std::string&)> log;

  // Throws kInvalidArgument.
  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // stage 1 then stage 2
  double positive_within_margin = 0.0;   // fraction of positives with d < m
  double negative_beyond_margin = 0.0;   // fraction of sampled negatives with d > m
  Calibration calibration{};
  double wall_seconds = 0.0;
};

struct TrainResult {
  FilterModel model;
  TrainReport report;
};

// Stage 1 on confusion-set pairs, then stage 2 on the augmented pairs when a
// corpus is given; beta is recalibrated after each stage. Characters of vocab
// missing from the registry embed as single leaves.
TrainResult train(const TreeRegistry& registry, const Vocabulary& vocab,
                  const ConfusionSets& sets, const LabeledCorpus* corpus,
                  const TrainConfig& config);

// Continues training an existing model on stage-2 pairs (stage2_steps steps).
// Edits whose characters are outside the model vocabulary are skipped.
TrainResult adapt(const FilterModel& model, const ConfusionSets& sets,
                  const LabeledCorpus& corpus, const TrainConfig& config);

// Samples `count` dissimilar index pairs and calibrates beta.
Calibration calibrate_model(const FilterModel& model, const PositivePairs& positives,
                            size_t count, uint64_t seed, int threads = 1);

}  // namespace headfilt

#endif  // HEADFILT_FILT_TRAIN_H_
