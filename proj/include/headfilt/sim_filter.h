#ifndef HEADFILT_SIM_FILTER_H_
#define HEADFILT_SIM_FILTER_H_

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "headfilt/vocabulary.h"

namespace headfilt {

constexpr double kDefaultMargin = 0.4;
constexpr double kBetaMin = 1.0;
constexpr double kBetaMax = 1e4;
// Norms below this are treated as this value when normalizing.
constexpr double kNormFloor = 1e-12;
constexpr double kExpClamp = 500.0;

struct FilterConfig {
  double margin = kDefaultMargin;
  double beta = kBetaMin;

  // Throws kInvalidArgument unless 0 < margin < 2 and beta > 0.
  void validate() const;
};

// head character -> confusable characters (head itself never stored).
class ConfusionSets {
 public:
  void add(char32_t head, char32_t member);
  const std::set<char32_t>* find(char32_t head) const;
  const std::map<char32_t, std::set<char32_t>>& sets() const { return sets_; }
  bool empty() const { return sets_.empty(); }
  // Heads and members.
  std::u32string characters() const;

 private:
  std::map<char32_t, std::set<char32_t>> sets_;
};

// Parses `head:members` lines (members concatenated, `#` comments).
// Throws kFormatError with the line number on malformed lines.
ConfusionSets parse_confusion_sets(std::string_view contents);
ConfusionSets load_confusion_sets(const std::string& path);

struct SimilarityVector {
  enum class Kind { kBinary, kReal };
  Kind kind = Kind::kReal;
  std::vector<double> values;
};

// ||h_a/|h_a| - h_b/|h_b|||_2 in [0, 2]. Throws kNonFiniteInput.
double distance(const Eigen::Ref<const Eigen::VectorXd>& h_a,
                const Eigen::Ref<const Eigen::VectorXd>& h_b);

// Gradients of distance(h_a, h_b) with respect to h_a and h_b, including the
// normalization. Zero when the distance is zero.
void distance_grad(const Eigen::Ref<const Eigen::VectorXd>& h_a,
                   const Eigen::Ref<const Eigen::VectorXd>& h_b, Eigen::VectorXd* grad_a,
                   Eigen::VectorXd* grad_b);

// 1 / (1 + exp(beta * (d - margin))).
double similarity(double d, const FilterConfig& config);

struct Calibration {
  double beta;       // after clamping to [kBetaMin, kBetaMax]
  double raw_beta;   // ln(N-1) / (d_star - m)
  double d_star;     // mean distance over the sampled dissimilar pairs
  size_t pairs;
};

// beta = ln(N-1) / (d_star - m), clamped. `embeddings` has one row per
// vocabulary index and `pairs` holds index pairs known to be dissimilar.
// Throws kDegenerateCalibration if pairs is empty or d_star <= m.
Calibration calibrate_beta(const Eigen::MatrixXd& embeddings,
                           std::span<const std::pair<size_t, size_t>> pairs, size_t vocab_size,
                           double margin);

// Row-normalized copy of an embedding matrix; distance between rows i, j of
// the result equals distance() of the original rows.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& embeddings);

// Real similarity of ch against every vocabulary character (self included).
// Throws kUnknownCharacter.
SimilarityVector headfilt_vector(char32_t ch, const Vocabulary& vocab,
                                 const Eigen::MatrixXd& embeddings, const FilterConfig& config);

// Binary vector: 1 at ch itself and at every member of sets[ch] that is in the
// vocabulary. Members outside the vocabulary are counted into *ignored.
SimilarityVector confusion_vector(char32_t ch, const ConfusionSets& sets,
                                  const Vocabulary& vocab, size_t* ignored = nullptr);

}  // namespace headfilt

#endif  // HEADFILT_SIM_FILTER_H_
