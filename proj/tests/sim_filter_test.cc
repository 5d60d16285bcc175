#include "headfilt/sim_filter.h"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "headfilt/error.h"
#include "headfilt/random.h"

namespace headfilt {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  size_t i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(Distance, Examples) {
  EXPECT_DOUBLE_EQ(distance(vec({1, 2}), vec({1, 2})), 0.0);
  EXPECT_NEAR(distance(vec({1, 0}), vec({0, 1})), std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(distance(vec({2, 0}), vec({1, 0})), 0.0);
  EXPECT_NEAR(distance(vec({1, 0}), vec({-3, 0})), 2.0, 1e-15);
}

TEST(Distance, ZeroVectorDoesNotCrash) {
  EXPECT_DOUBLE_EQ(distance(vec({0, 0}), vec({0, 0})), 0.0);
  EXPECT_NEAR(distance(vec({0, 0}), vec({3, 4})), 1.0, 1e-15);
}

TEST(Distance, NonFiniteInput) {
  try {
    distance(vec({NAN, 0}), vec({1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteInput);
  }
  EXPECT_THROW(distance(vec({1, 0}), vec({INFINITY, 0})), Error);
}

TEST(Distance, SymmetricScaleInvariantBounded) {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd a(6), b(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = rng.uniform(-1, 1);
      b[i] = rng.uniform(-1, 1);
    }
    const double d = distance(a, b);
    EXPECT_EQ(d, distance(b, a));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 2.0);
    EXPECT_NEAR(distance(a * 7.5, b * 0.01), d, 1e-12);
  }
}

TEST(DistanceGrad, MatchesFiniteDifferences) {
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd a(5), b(5);
    for (int i = 0; i < 5; ++i) {
      a[i] = rng.uniform(-1, 1);
      b[i] = rng.uniform(-1, 1);
    }
    Eigen::VectorXd ga, gb;
    distance_grad(a, b, &ga, &gb);
    const double eps = 1e-6;
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd ap = a, am = a, bp = b, bm = b;
      ap[i] += eps;
      am[i] -= eps;
      bp[i] += eps;
      bm[i] -= eps;
      EXPECT_NEAR(ga[i], (distance(ap, b) - distance(am, b)) / (2 * eps), 1e-7);
      EXPECT_NEAR(gb[i], (distance(a, bp) - distance(a, bm)) / (2 * eps), 1e-7);
    }
  }
  Eigen::VectorXd ga, gb;
  distance_grad(vec({1, 1}), vec({2, 2}), &ga, &gb);
  EXPECT_TRUE(ga.isZero(0.0));
  EXPECT_TRUE(gb.isZero(0.0));
}

TEST(Similarity, Examples) {
  EXPECT_DOUBLE_EQ(similarity(0.4, {0.4, 10.0}), 0.5);
  EXPECT_NEAR(similarity(0.0, {0.4, 10.0}), 0.98201379003790845, 1e-14);
  const double tiny = similarity(2.0, {0.4, 50.0});
  EXPECT_GT(tiny, 0.0);
  EXPECT_LT(tiny, 1e-30);
  EXPECT_TRUE(std::isfinite(similarity(2.0, {0.4, 1e4})));
  EXPECT_GE(similarity(2.0, {0.4, 1e4}), 0.0);
  EXPECT_LE(similarity(0.0, {0.4, 1e4}), 1.0);
}

TEST(Similarity, MonotoneDecreasing) {
  Rng rng(2);
  std::vector<double> ds(500);
  for (double& d : ds) d = rng.uniform(0, 2);
  std::sort(ds.begin(), ds.end());
  const FilterConfig cfg{0.4, 6.0};
  for (size_t i = 1; i < ds.size(); ++i) {
    EXPECT_LE(similarity(ds[i], cfg), similarity(ds[i - 1], cfg));
  }
  EXPECT_GT(similarity(0.1, cfg), similarity(0.2, cfg));
}

TEST(FilterConfig, Validate) {
  EXPECT_NO_THROW((FilterConfig{0.4, 3.0}.validate()));
  EXPECT_THROW((FilterConfig{0.0, 3.0}.validate()), Error);
  EXPECT_THROW((FilterConfig{2.0, 3.0}.validate()), Error);
  EXPECT_THROW((FilterConfig{0.4, 0.0}.validate()), Error);
}

// Rows at prescribed pairwise distances after normalization: unit vectors at
// angle t have distance 2 sin(t/2).
Eigen::MatrixXd ring(const std::vector<double>& angles) {
  Eigen::MatrixXd m(angles.size(), 2);
  for (size_t i = 0; i < angles.size(); ++i) {
    m(i, 0) = std::cos(angles[i]);
    m(i, 1) = std::sin(angles[i]);
  }
  return m;
}

double angle_for_distance(double d) { return 2 * std::asin(d / 2); }

TEST(CalibrateBeta, Example) {
  const Eigen::MatrixXd emb = ring({0.0, angle_for_distance(0.9)});
  const std::vector<std::pair<size_t, size_t>> pairs = {{0, 1}};
  const Calibration c = calibrate_beta(emb, pairs, 10, 0.4);
  EXPECT_NEAR(c.d_star, 0.9, 1e-12);
  EXPECT_NEAR(c.raw_beta, 4.394449154672439, 1e-9);
  EXPECT_NEAR(c.beta, 4.394449154672439, 1e-9);
  EXPECT_EQ(c.pairs, 1u);
}

TEST(CalibrateBeta, MeanOverPairs) {
  const Eigen::MatrixXd emb =
      ring({0.0, angle_for_distance(0.6), angle_for_distance(1.4)});
  const std::vector<std::pair<size_t, size_t>> pairs = {{0, 1}, {0, 2}};
  const Calibration c = calibrate_beta(emb, pairs, 5, 0.4);
  EXPECT_NEAR(c.d_star, 1.0, 1e-12);
  EXPECT_NEAR(c.beta, std::log(4.0) / 0.6, 1e-12);
}

TEST(CalibrateBeta, TwoCharacterVocabularyHitsFloor) {
  const Eigen::MatrixXd emb = ring({0.0, angle_for_distance(1.0)});
  const std::vector<std::pair<size_t, size_t>> pairs = {{0, 1}};
  const Calibration c = calibrate_beta(emb, pairs, 2, 0.4);
  EXPECT_EQ(c.raw_beta, 0.0);
  EXPECT_EQ(c.beta, kBetaMin);
}

TEST(CalibrateBeta, CeilingApplies) {
  const Eigen::MatrixXd emb = ring({0.0, angle_for_distance(0.4 + 1e-6)});
  const std::vector<std::pair<size_t, size_t>> pairs = {{0, 1}};
  EXPECT_EQ(calibrate_beta(emb, pairs, 100, 0.4).beta, kBetaMax);
}

TEST(CalibrateBeta, Degenerate) {
  const Eigen::MatrixXd emb = ring({0.0, angle_for_distance(0.4)});
  const std::vector<std::pair<size_t, size_t>> at_margin = {{0, 1}};
  try {
    calibrate_beta(emb, at_margin, 10, 0.4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCalibration);
  }
  EXPECT_THROW(calibrate_beta(emb, std::span<const std::pair<size_t, size_t>>{}, 10, 0.4), Error);
}

TEST(NormalizeRows, PreservesDistances) {
  Eigen::MatrixXd emb(3, 3);
  emb << 1, 2, 3, -4, 0.5, 2, 0, 0, 0;
  const Eigen::MatrixXd n = normalize_rows(emb);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR((n.row(i) - n.row(j)).norm(),
                  distance(emb.row(i).transpose(), emb.row(j).transpose()), 1e-14);
    }
  }
}

TEST(HeadfiltVector, SingleCharacter) {
  const Vocabulary vocab({U'a'});
  Eigen::MatrixXd emb(1, 2);
  emb << 0.3, 0.4;
  const FilterConfig cfg{0.4, 5.0};
  const SimilarityVector v = headfilt_vector(U'a', vocab, emb, cfg);
  EXPECT_EQ(v.kind, SimilarityVector::Kind::kReal);
  ASSERT_EQ(v.values.size(), 1u);
  EXPECT_NEAR(v.values[0], 1.0 / (1.0 + std::exp(-5.0 * 0.4)), 1e-15);
}

TEST(HeadfiltVector, MatchesElementwiseRecomputation) {
  const Vocabulary vocab({U'a', U'b', U'c'});
  Eigen::MatrixXd emb(3, 3);
  emb << 1.0, 0.2, -0.1, 0.9, 0.3, 0.0, -0.5, 1.0, 0.4;
  const FilterConfig cfg{0.4, 7.0};
  for (size_t q = 0; q < 3; ++q) {
    const SimilarityVector v = headfilt_vector(vocab.at(q), vocab, emb, cfg);
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXd a = emb.row(q).transpose() / emb.row(q).norm();
      const Eigen::VectorXd b = emb.row(k).transpose() / emb.row(k).norm();
      const double expected = 1.0 / (1.0 + std::exp(7.0 * ((a - b).norm() - 0.4)));
      EXPECT_NEAR(v.values[k], expected, 1e-14);
    }
    EXPECT_GT(v.values[q], 0.5);
    for (int k = 0; k < 3; ++k) EXPECT_GE(v.values[q], v.values[k]);
  }
}

TEST(HeadfiltVector, IdenticalEmbeddingsShareSelfValue) {
  const Vocabulary vocab({U'a', U'b', U'c'});
  Eigen::MatrixXd emb(3, 2);
  emb << 1, 1, 2, 2, -1, 0;
  const SimilarityVector v = headfilt_vector(U'a', vocab, emb, {0.4, 3.0});
  EXPECT_DOUBLE_EQ(v.values[0], v.values[1]);
}

TEST(HeadfiltVector, UnknownCharacter) {
  const Vocabulary vocab({U'a'});
  const Eigen::MatrixXd emb = Eigen::MatrixXd::Ones(1, 2);
  try {
    headfilt_vector(U'z', vocab, emb, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownCharacter);
  }
}

TEST(ConfusionVector, SetMembership) {
  const ConfusionSets sets = parse_confusion_sets("無:吾嫵舞\n");
  const Vocabulary vocab({U'一', U'吾', U'嫵', U'無', U'舞', U'二'});
  const SimilarityVector v = confusion_vector(U'無', sets, vocab);
  EXPECT_EQ(v.kind, SimilarityVector::Kind::kBinary);
  EXPECT_EQ(v.values, (std::vector<double>{0, 1, 1, 1, 1, 0}));
}

TEST(ConfusionVector, MissingSetAndOutOfVocabularyMembers) {
  const ConfusionSets sets = parse_confusion_sets("無:吾嫵舞\n");
  const Vocabulary vocab({U'一', U'無', U'吾'});
  size_t ignored = 0;
  EXPECT_EQ(confusion_vector(U'無', sets, vocab, &ignored).values,
            (std::vector<double>{0, 1, 1}));
  EXPECT_EQ(ignored, 2u);
  EXPECT_EQ(confusion_vector(U'一', sets, vocab).values, (std::vector<double>{1, 0, 0}));
  EXPECT_THROW(confusion_vector(U'z', sets, vocab), Error);
}

TEST(ConfusionSets, Parse) {
  const ConfusionSets sets = parse_confusion_sets(
      "\xEF\xBB\xBF# comment\n"
      "無:吾嫵舞無\n"
      "\n"
      "甲:乙\n");
  ASSERT_EQ(sets.sets().size(), 2u);
  EXPECT_EQ(*sets.find(U'無'), (std::set<char32_t>{U'吾', U'嫵', U'舞'}));
  EXPECT_EQ(sets.find(U'丙'), nullptr);
  const std::u32string chars = sets.characters();
  EXPECT_EQ(chars.size(), 6u);
  try {
    parse_confusion_sets("無:吾\nno colon here\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormatError);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

}  // namespace
}  // namespace headfilt
