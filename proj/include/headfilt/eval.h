#ifndef HEADFILT_EVAL_H_
#define HEADFILT_EVAL_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "headfilt/corpus.h"
#include "headfilt/model_io.h"
#include "headfilt/sim_filter.h"

namespace headfilt {

enum class Task { kDetection, kCorrection };

const char* task_name(Task task);

struct MetricReport {
  Task task = Task::kDetection;
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Sentence-level metrics. Per sentence, with G the gold edit set and P the
// predicted one (positions for detection, position+correction for
// correction):
//   G nonempty, P == G           -> TP
//   G empty,    P empty          -> TN
//   P nonempty, P != G           -> FP  (counted once, also on error sentences)
//   G nonempty, P empty          -> FN
// Throws kIdMismatch unless both sides hold the same sentence ids.
MetricReport sentence_metrics(const LabeledCorpus& gold, const std::vector<PredictedEdits>& predicted,
                              Task task);

// Fills the ratios from the four counts.
void finalize_metrics(MetricReport& report);

std::string format_metrics_table(const MetricReport& report);
std::string format_metrics_json(const MetricReport& report);

struct CoverageReport {
  size_t total = 0;
  size_t covered = 0;
  // covered / total; empty when total == 0.
  std::optional<double> fraction() const;
  // "252/269 (93.68%)", or "0/0 (N/A)".
  std::string summary() const;
};

// A pair (a, b) is covered iff b is in sets[a] or a is in sets[b].
CoverageReport coverage(const std::map<CharPair, size_t>& pairs, const ConfusionSets& sets);

std::string format_coverage_json(const CoverageReport& report);

}  // namespace headfilt

#endif  // HEADFILT_EVAL_H_
