#include "headfilt/eval.h"

#include <algorithm>

#include <gtest/gtest.h>

#include "headfilt/error.h"
#include "headfilt/random.h"

namespace headfilt {
namespace {

const char* kGold =
    "s1\t我吾法去\t2,無\n"
    "s2\t甲乙丙\t3,丁\n"
    "s3\t沒有錯\t\n"
    "s4\t也沒錯\t\n";

std::vector<PredictedEdits> preds(std::vector<PredictedEdits> p) { return p; }

TEST(SentenceMetrics, Perfect) {
  const LabeledCorpus gold = parse_corpus(kGold);
  const auto p = preds({{"s1", {{2, U'吾', U'無'}}}, {"s2", {{3, U'丙', U'丁'}}}, {"s3", {}}, {"s4", {}}});
  for (Task t : {Task::kDetection, Task::kCorrection}) {
    const MetricReport r = sentence_metrics(gold, p, t);
    EXPECT_EQ(r.tp, 2u);
    EXPECT_EQ(r.tn, 2u);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.f1, 1.0);
  }
}

TEST(SentenceMetrics, FourSentenceFixture) {
  const LabeledCorpus gold = parse_corpus(kGold);
  const auto p = preds({{"s1", {{2, U'吾', U'無'}}}, {"s2", {}}, {"s3", {{1, U'沒', U'設'}}}, {"s4", {}}});
  const MetricReport r = sentence_metrics(gold, p, Task::kDetection);
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.tn, 1u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
}

TEST(SentenceMetrics, PartialMatchCountsOnceAsFalsePositive) {
  const LabeledCorpus gold = parse_corpus(kGold);
  const auto p = preds({{"s1", {{1, U'我', U'你'}}}, {"s2", {}}, {"s3", {}}, {"s4", {}}});
  const MetricReport r = sentence_metrics(gold, p, Task::kDetection);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_EQ(r.tp + r.fp + r.tn + r.fn, 4u);
}

TEST(SentenceMetrics, DetectionDominatesCorrection) {
  const LabeledCorpus gold = parse_corpus(kGold);
  // Right position, wrong character on s1.
  const auto p = preds({{"s1", {{2, U'吾', U'舞'}}}, {"s2", {{3, U'丙', U'丁'}}}, {"s3", {}}, {"s4", {}}});
  const MetricReport det = sentence_metrics(gold, p, Task::kDetection);
  const MetricReport cor = sentence_metrics(gold, p, Task::kCorrection);
  EXPECT_EQ(det.tp, 2u);
  EXPECT_EQ(cor.tp, 1u);
  EXPECT_GE(det.f1, cor.f1);
  EXPECT_GE(det.accuracy, cor.accuracy);
}

TEST(SentenceMetrics, InvariantsOverRandomPredictions) {
  Rng rng(17);
  LabeledCorpus gold;
  std::vector<PredictedEdits> p;
  for (int k = 0; k < 60; ++k) {
    CorpusSentence s{"s" + std::to_string(k), U"abcd", {}};
    if (rng.uniform() < 0.5) {
      s.edits.push_back({rng.index(4) + 1, 0, U'z'});
      s.edits.back().wrong = s.text[s.edits.back().position - 1];
    }
    PredictedEdits pe{s.id, {}};
    if (rng.uniform() < 0.5) {
      const size_t pos = rng.index(4) + 1;
      pe.edits.push_back({pos, s.text[pos - 1], rng.uniform() < 0.5 ? U'z' : U'y'});
    }
    gold.sentences.push_back(s);
    p.push_back(pe);
  }
  const MetricReport det = sentence_metrics(gold, p, Task::kDetection);
  const MetricReport cor = sentence_metrics(gold, p, Task::kCorrection);
  EXPECT_EQ(det.tp + det.fp + det.tn + det.fn, 60u);
  EXPECT_EQ(cor.tp + cor.fp + cor.tn + cor.fn, 60u);
  EXPECT_LE(cor.tp, det.tp);

  std::vector<PredictedEdits> shuffled = p;
  std::reverse(shuffled.begin(), shuffled.end());
  LabeledCorpus gold_rev = gold;
  std::reverse(gold_rev.sentences.begin(), gold_rev.sentences.end());
  const MetricReport again = sentence_metrics(gold_rev, shuffled, Task::kDetection);
  EXPECT_EQ(again.tp, det.tp);
  EXPECT_EQ(again.fp, det.fp);
  EXPECT_EQ(again.f1, det.f1);

  // Flipping one prediction moves exactly one sentence between cells.
  std::vector<PredictedEdits> flipped = p;
  flipped[0].edits = flipped[0].edits.empty()
                         ? std::vector<Edit>{{1, U'a', U'q'}}
                         : std::vector<Edit>{};
  const MetricReport f = sentence_metrics(gold, flipped, Task::kDetection);
  const long diff = std::labs(long(f.tp) - long(det.tp)) + std::labs(long(f.fp) - long(det.fp)) +
                    std::labs(long(f.tn) - long(det.tn)) + std::labs(long(f.fn) - long(det.fn));
  EXPECT_LE(diff, 2);
  EXPECT_EQ(f.tp + f.fp + f.tn + f.fn, 60u);
}

TEST(SentenceMetrics, IdMismatch) {
  const LabeledCorpus gold = parse_corpus(kGold);
  for (const auto& p : {preds({{"s1", {}}}),
                        preds({{"s1", {}}, {"s2", {}}, {"s3", {}}, {"s9", {}}})}) {
    try {
      sentence_metrics(gold, p, Task::kDetection);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kIdMismatch);
    }
  }
}

TEST(FinalizeMetrics, ZeroDenominators) {
  MetricReport r;
  r.tn = 3;
  finalize_metrics(r);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(FormatMetrics, TableAndJson) {
  MetricReport r;
  r.tp = 1, r.fp = 1, r.tn = 1, r.fn = 1;
  finalize_metrics(r);
  const std::string table = format_metrics_table(r);
  EXPECT_NE(table.find("detection"), std::string::npos);
  EXPECT_NE(table.find("0.5000"), std::string::npos);
  const std::string json = format_metrics_json(r);
  EXPECT_NE(json.find("\"f1\":0.5"), std::string::npos);
  EXPECT_NE(json.find("\"tp\":1"), std::string::npos);
}

TEST(Coverage, Membership) {
  const ConfusionSets sets = parse_confusion_sets("無:吾嫵舞\n");
  std::map<CharPair, size_t> pairs = {{make_unordered(U'無', U'吾'), 2}};
  CoverageReport r = coverage(pairs, sets);
  EXPECT_EQ(r.summary(), "1/1 (100.00%)");
  pairs[make_unordered(U'甲', U'乙')] = 1;
  pairs[make_unordered(U'吾', U'舞')] = 1;  // both members, neither a head
  r = coverage(pairs, sets);
  EXPECT_EQ(r.covered, 1u);
  EXPECT_EQ(r.total, 3u);
  EXPECT_EQ(r.summary(), "1/3 (33.33%)");
}

TEST(Coverage, EmptyAndSummaryFormat) {
  const CoverageReport empty = coverage({}, ConfusionSets{});
  EXPECT_FALSE(empty.fraction().has_value());
  EXPECT_EQ(empty.summary(), "0/0 (N/A)");
  EXPECT_EQ((CoverageReport{269, 252}.summary()), "252/269 (93.68%)");
  EXPECT_NE(format_coverage_json(empty).find("\"percent\":\"N/A\""), std::string::npos);
}

}  // namespace
}  // namespace headfilt
