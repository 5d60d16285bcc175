#include "headfilt/eval.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "headfilt/error.h"

namespace headfilt {

const char* task_name(Task task) {
  return task == Task::kDetection ? "detection" : "correction";
}

void finalize_metrics(MetricReport& r) {
  const double tp = r.tp, fp = r.fp, tn = r.tn, fn = r.fn;
  const double total = tp + fp + tn + fn;
  r.accuracy = total > 0 ? (tp + tn) / total : 0.0;
  r.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
}

MetricReport sentence_metrics(const LabeledCorpus& gold, const std::vector<PredictedEdits>& predicted,
                              Task task) {
  std::unordered_map<std::string, const PredictedEdits*> by_id;
  for (const auto& p : predicted) {
    if (!by_id.emplace(p.id, &p).second) {
      throw Error(ErrorCode::kIdMismatch, "duplicate predicted sentence " + p.id);
    }
  }
  if (by_id.size() != gold.sentences.size()) {
    throw Error(ErrorCode::kIdMismatch, std::to_string(gold.sentences.size()) + " gold vs " +
                                            std::to_string(by_id.size()) + " predicted sentences");
  }

  using Key = std::pair<size_t, char32_t>;
  auto keys = [task](auto const& edits, auto correction_of) {
    std::set<Key> out;
    for (const auto& e : edits) {
      out.emplace(e.position, task == Task::kCorrection ? correction_of(e) : U'\0');
    }
    return out;
  };

  MetricReport report;
  report.task = task;
  for (const auto& s : gold.sentences) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw Error(ErrorCode::kIdMismatch, "no prediction for sentence " + s.id);
    const auto g = keys(s.edits, [](const GoldEdit& e) { return e.correct; });
    const auto p = keys(it->second->edits, [](const Edit& e) { return e.correction; });
    if (p.empty()) {
      ++(g.empty() ? report.tn : report.fn);
    } else if (!g.empty() && p == g) {
      ++report.tp;
    } else {
      ++report.fp;
    }
  }
  finalize_metrics(report);
  return report;
}

std::string format_metrics_table(const MetricReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "task        %s\n"
                "accuracy    %.4f\n"
                "precision   %.4f\n"
                "recall      %.4f\n"
                "f1          %.4f\n"
                "tp %zu  fp %zu  tn %zu  fn %zu\n",
                task_name(r.task), r.accuracy, r.precision, r.recall, r.f1, r.tp, r.fp, r.tn, r.fn);
  return buf;
}

std::string format_metrics_json(const MetricReport& r) {
  return nlohmann::json{{"task", task_name(r.task)},
                        {"accuracy", r.accuracy},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"f1", r.f1},
                        {"tp", r.tp},
                        {"fp", r.fp},
                        {"tn", r.tn},
                        {"fn", r.fn}}
      .dump();
}

std::optional<double> CoverageReport::fraction() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(covered) / static_cast<double>(total);
}

std::string CoverageReport::summary() const {
  char buf[96];
  if (auto f = fraction()) {
    std::snprintf(buf, sizeof buf, "%zu/%zu (%.2f%%)", covered, total, *f * 100.0);
  } else {
    std::snprintf(buf, sizeof buf, "%zu/%zu (N/A)", covered, total);
  }
  return buf;
}

CoverageReport coverage(const std::map<CharPair, size_t>& pairs, const ConfusionSets& sets) {
  CoverageReport report;
  auto in_set = [&](char32_t head, char32_t member) {
    const auto* s = sets.find(head);
    return s != nullptr && s->count(member) != 0;
  };
  for (const auto& [pair, count] : pairs) {
    ++report.total;
    if (in_set(pair.first, pair.second) || in_set(pair.second, pair.first)) ++report.covered;
  }
  return report;
}

std::string format_coverage_json(const CoverageReport& r) {
  nlohmann::json j = {{"total", r.total}, {"covered", r.covered}, {"summary", r.summary()}};
  if (auto f = r.fraction()) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", *f * 100.0);
    j["percent"] = buf;
  } else {
    j["percent"] = "N/A";
  }
  return j.dump();
}

}  // namespace headfilt
