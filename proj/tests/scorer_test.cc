#include "headfilt/scorer.h"

#include <numeric>

#include <gtest/gtest.h>

#include "headfilt/error.h"
#include "headfilt/random.h"

namespace headfilt {
namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(Ngram, BigramHandCount) {
  const Vocabulary vocab({U'甲', U'乙'});
  const NgramModel m = NgramModel::train({U"甲乙甲乙"}, 2, vocab);
  const int jia = m.token(U'甲'), yi = m.token(U'乙');
  const std::vector<int> ctx = {jia};
  // Hand count, D = 0.75, events {甲, 乙, UNK}:
  //   unigram: c(甲) = c(乙) = 2 of 4, two types -> 0.3125 + 0.375 / 3 = 0.4375
  //   bigram after 甲: c(乙) = 2 of 2, one type -> 0.625 + 0.375 * 0.4375
  EXPECT_NEAR(m.prob({}, jia), 0.4375, 1e-15);
  EXPECT_NEAR(m.prob({}, m.unk_id()), 0.125, 1e-15);
  EXPECT_NEAR(m.prob(ctx, yi), 0.7890625, 1e-15);
  EXPECT_NEAR(m.prob(ctx, jia), 0.1640625, 1e-15);
  EXPECT_GT(m.prob(ctx, yi), m.prob(ctx, jia));
  EXPECT_GT(m.prob(ctx, yi), m.prob(ctx, m.unk_id()));
}

TEST(Ngram, UniformUnigramForEqualFrequencies) {
  const Vocabulary vocab({U'a', U'b', U'c'});
  const NgramModel m = NgramModel::train({U"abc", U"cba", U"bca"}, 1, vocab);
  const double pa = m.prob({}, m.token(U'a'));
  EXPECT_DOUBLE_EQ(pa, m.prob({}, m.token(U'b')));
  EXPECT_DOUBLE_EQ(pa, m.prob({}, m.token(U'c')));
}

TEST(Ngram, ConditionalsSumToOne) {
  const Vocabulary vocab({U'a', U'b', U'c', U'd'});
  const NgramModel m = NgramModel::train({U"abcab", U"dcba", U"aaxb"}, 3, vocab);
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    std::vector<int> ctx;
    const int len = static_cast<int>(rng.index(3));
    for (int j = 0; j < len; ++j) ctx.push_back(static_cast<int>(rng.index(m.event_count() + 1)));
    double total = 0.0;
    for (size_t w = 0; w < m.event_count(); ++w) total += m.prob(ctx, static_cast<int>(w));
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Ngram, TrainErrors) {
  const Vocabulary vocab({U'a'});
  try {
    NgramModel::train({}, 3, vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
  EXPECT_THROW(NgramModel::train({U""}, 3, vocab), Error);
  EXPECT_THROW(NgramModel::train({U"a"}, 0, vocab), Error);
}

TEST(ScorePosition, SingleCharacterOrderOneIsUnigram) {
  const Vocabulary vocab({U'a', U'b', U'c'});
  const NgramModel m = NgramModel::train({U"aab", U"abc", U"a"}, 1, vocab);
  const CandidateDistribution d = m.score_position(U"b", 0);
  double norm = 0.0;
  for (size_t k = 0; k < 3; ++k) norm += m.prob({}, static_cast<int>(k));
  for (size_t k = 0; k < 3; ++k) EXPECT_NEAR(d.values[k], m.prob({}, static_cast<int>(k)) / norm, 1e-15);
}

TEST(ScorePosition, FrequentContinuationWins) {
  const Vocabulary vocab({U'A', U'B', U'C'});
  std::vector<std::u32string> corpus(100, U"AB");
  corpus.push_back(U"AC");
  const NgramModel m = NgramModel::train(corpus, 3, vocab);
  const CandidateDistribution d = m.score_position(U"AC", 1);
  EXPECT_EQ(d.position, 1u);
  EXPECT_GT(d.values[vocab.index(U'B')], d.values[vocab.index(U'C')]);
  check_distribution(d);
}

TEST(ScorePosition, OutOfRange) {
  const Vocabulary vocab({U'a'});
  const NgramModel m = NgramModel::train({U"aa"}, 2, vocab);
  try {
    m.score_position(U"aa", 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPositionOutOfRange);
  }
}

TEST(ScorePosition, OnlyWindowMatters) {
  const Vocabulary vocab({U'a', U'b', U'c', U'd'});
  const NgramModel m = NgramModel::train({U"abcdabcd", U"dcbadcba", U"aabbccdd"}, 3, vocab);
  Rng rng(4);
  const std::u32string letters = U"abcd";
  for (int k = 0; k < 50; ++k) {
    std::u32string s(12, U'a');
    for (auto& c : s) c = letters[rng.index(4)];
    const size_t i = 6;
    std::u32string t = s;
    for (size_t j = 0; j < t.size(); ++j) {
      if (j + 2 < i || j > i + 2) t[j] = letters[rng.index(4)];
    }
    EXPECT_EQ(m.score_position(s, i).values, m.score_position(t, i).values);
  }
}

TEST(ScorePosition, OrderOneIgnoresContext) {
  const Vocabulary vocab({U'a', U'b', U'c'});
  const NgramModel m = NgramModel::train({U"aab", U"abc"}, 1, vocab);
  EXPECT_EQ(m.score_position(U"abc", 0).values, m.score_position(U"cab", 2).values);
}

TEST(ScorePosition, DistributionsAreValid) {
  const Vocabulary vocab({U'a', U'b', U'c'});
  const NgramModel m = NgramModel::train({U"abcabc"}, 3, vocab);
  for (const std::u32string s : {U"abc", U"zzz", U"a", U"cbacba"}) {
    for (size_t i = 0; i < s.size(); ++i) {
      const CandidateDistribution d = m.score_position(s, i);
      check_distribution(d);
      for (double v : d.values) EXPECT_GE(v, 0.0);
    }
  }
}

TEST(CheckDistribution, Rejects) {
  EXPECT_THROW(check_distribution({0, {0.5, 0.4}}), Error);
  EXPECT_THROW(check_distribution({0, {1.5, -0.5}}), Error);
  EXPECT_NO_THROW(check_distribution({0, {0.5, 0.5}}));
}

TEST(External, DirectReadAndRenormalize) {
  const Vocabulary vocab({U'甲', U'乙', U'丙'});
  ExternalLoadReport rep;
  const auto s = parse_external(
      R"({"id": "s1", "text": "甲乙", "positions": {"1": [["甲", 0.6], ["乙", 0.4]], "2": [["丙", 0.25], ["乙", 0.25]]}})"
      "\n",
      vocab, &rep);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].positions[0].values, (std::vector<double>{0.6, 0.4, 0.0}));
  EXPECT_EQ(s[0].positions[1].values, (std::vector<double>{0.0, 0.5, 0.5}));
  EXPECT_EQ(rep.filled_positions, 0u);
}

TEST(External, MissingPositionIsDeltaAtInput) {
  const Vocabulary vocab({U'甲', U'乙'});
  ExternalLoadReport rep;
  const auto s = parse_external(R"({"id": "s1", "text": "乙甲", "positions": {}})", vocab, &rep);
  EXPECT_EQ(s[0].positions[0].values, (std::vector<double>{0, 1}));
  EXPECT_EQ(s[0].positions[1].values, (std::vector<double>{1, 0}));
  EXPECT_EQ(rep.filled_positions, 2u);
}

TEST(External, OutOfVocabularyMassIsReported) {
  const Vocabulary vocab({U'甲', U'乙'});
  ExternalLoadReport rep;
  const auto s = parse_external(
      R"({"id": "s1", "text": "甲", "positions": {"1": [["甲", 0.3], ["丁", 0.5], ["乙", 0.2]]}})",
      vocab, &rep);
  EXPECT_EQ(rep.out_of_vocab_entries, 1u);
  EXPECT_NEAR(s[0].positions[0].values[0], 0.6, 1e-15);
  EXPECT_NEAR(s[0].positions[0].values[1], 0.4, 1e-15);
}

TEST(External, FormatErrorsCarryLineNumbers) {
  const Vocabulary vocab({U'甲'});
  for (const std::string bad :
       {std::string("{\"id\": \"a\", \"text\": \"甲\"}\nnot json\n"),
        std::string("{\"id\": \"a\", \"text\": \"甲\"}\n{\"id\": \"b\", \"text\": \"甲\", \"positions\": {\"2\": []}}\n"),
        std::string("{\"id\": \"a\", \"text\": \"甲\"}\n{\"id\": \"b\", \"text\": \"甲\", \"positions\": {\"1\": [[\"甲\", -1]]}}\n")}) {
    try {
      parse_external(bad, vocab);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormatError);
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
}

TEST(ExternalScorer, LooksUpById) {
  const Vocabulary vocab({U'甲', U'乙'});
  ExternalScorer scorer(vocab, parse_external(R"({"id": "s1", "text": "甲乙", "positions": {"2": [["甲", 1.0]]}})", vocab));
  EXPECT_EQ(scorer.score({"s1", U"甲乙"}, 1).values, (std::vector<double>{1, 0}));
  try {
    scorer.score({"s2", U"甲乙"}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIdMismatch);
  }
  EXPECT_THROW(scorer.score({"s1", U"乙乙"}, 0), Error);
  EXPECT_THROW(scorer.score({"s1", U"甲乙"}, 2), Error);
}

TEST(ProjectedScorer, DropsMassOutsideTarget) {
  const Vocabulary source({U'a', U'b', U'c'});
  auto base = std::make_shared<ExternalScorer>(
      source, parse_external(R"({"id": "x", "text": "a", "positions": {"1": [["a", 0.2], ["b", 0.3], ["c", 0.5]]}})", source));
  const ProjectedScorer projected(base, Vocabulary({U'c', U'a', U'z'}));
  const CandidateDistribution d = projected.score({"x", U"a"}, 0);
  EXPECT_NEAR(d.values[0], 0.5 / 0.7, 1e-15);
  EXPECT_NEAR(d.values[1], 0.2 / 0.7, 1e-15);
  EXPECT_EQ(d.values[2], 0.0);
  EXPECT_NEAR(sum(d.values), 1.0, 1e-12);

  const ProjectedScorer disjoint(base, Vocabulary({U'y', U'z'}));
  EXPECT_EQ(disjoint.score({"x", U"a"}, 0).values, (std::vector<double>{0.5, 0.5}));
}

}  // namespace
}  // namespace headfilt
