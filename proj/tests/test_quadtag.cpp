#include <gtest/gtest.h>

#include <cmath>

#include "aqe/error.hpp"
#include "aqe/quadtag.hpp"
#include "aqe/train.hpp"
#include "generators.hpp"

namespace aqe {
namespace {

const QuadSet kExample = {{3, 1, Stance::Support, EvidenceType::Research},
                          {3, 2, Stance::Support, EvidenceType::Research}};

std::size_t count_null(const TagTable& t) {
  std::size_t nulls = 0;
  for (int i = 1; i <= t.n(); ++i) {
    for (int j = 0; j <= t.n(); ++j) nulls += t.at(i, j) == TagLabel::Null;
  }
  return nulls;
}

TEST(GoldTable, Example) {
  const TagTable t = build_gold_table(kExample, 4);
  EXPECT_EQ(t.cell_count(), 20u);
  EXPECT_EQ(t.at(3, 0), TagLabel::Support);
  EXPECT_EQ(t.at(3, 1), TagLabel::Research);
  EXPECT_EQ(t.at(3, 2), TagLabel::Research);
  EXPECT_EQ(count_null(t), 17u);
  for (int j = 0; j <= 4; ++j) EXPECT_EQ(t.at(1, j), TagLabel::Null);
}

TEST(GoldTable, EmptySet) {
  const TagTable t = build_gold_table({}, 2);
  EXPECT_EQ(t.cell_count(), 6u);
  EXPECT_EQ(count_null(t), 6u);
}

TEST(GoldTable, ConflictingTypesRejected) {
  const QuadSet q = {{2, 1, Stance::Support, EvidenceType::Case}, {2, 1, Stance::Support, EvidenceType::Expert}};
  EXPECT_THROW(build_gold_table(q, 3), ValidationError);
}

TEST(GoldTable, CellSemanticsEnforced) {
  TagTable t(3);
  EXPECT_THROW(t.set(1, 0, TagLabel::Case), ValidationError);
  EXPECT_THROW(t.set(1, 2, TagLabel::Support), ValidationError);
  EXPECT_THROW(t.set(2, 2, TagLabel::Case), ValidationError);
  EXPECT_NO_THROW(t.set(2, 2, TagLabel::Null));
}

TEST(Negatives, ExampleCounts) {
  const TagTable t = build_gold_table(kExample, 4);
  EXPECT_EQ(positive_entries(t).size(), 3u);
  // 17 null cells, 4 of them on the diagonal.
  EXPECT_EQ(sample_negatives(t, 5, 1).size(), 13u);
  EXPECT_EQ(sample_negatives(t, 5, 1, true).size(), 15u);
  EXPECT_EQ(sample_negatives(t, 10, 1, true).size(), 17u);
  EXPECT_EQ(sample_negatives(t, 1, 1).size(), 3u);
  EXPECT_TRUE(sample_negatives(t, 0, 1).empty());
  EXPECT_EQ(sample_negatives(t, 2, 9), sample_negatives(t, 2, 9));
}

TEST(Negatives, PropertyDisjointAndBounded) {
  testing::Gen gen(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = gen.range(2, 12);
    const TagTable t = build_gold_table(gen.quads(n, 8), n);
    const EntrySet pos = positive_entries(t);
    const double eta = gen.range(0, 40) / 4.0;
    const bool diag = gen.coin();
    const EntrySet neg = sample_negatives(t, eta, static_cast<std::uint64_t>(trial), diag);
    EXPECT_LE(neg.size(), static_cast<std::size_t>(std::floor(eta * pos.size() + 1e-9)));
    EXPECT_TRUE(std::is_sorted(neg.begin(), neg.end()));
    EXPECT_EQ(std::adjacent_find(neg.begin(), neg.end()), neg.end());
    for (const Cell& c : neg) {
      EXPECT_EQ(t.at(c.row, c.col), TagLabel::Null);
      if (!diag) EXPECT_NE(c.row, c.col);
    }
  }
}

Matrix random_matrix(testing::Gen& gen, std::size_t r, std::size_t c, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.flat()) v = d(gen.engine());
  return m;
}

TEST(Biaffine, ZeroParamsGiveUniform) {
  testing::Gen gen(2);
  const Matrix sent = random_matrix(gen, 4, 6, 1.0);
  const BiaffineParams p(6, 3);
  for (int i = 1; i <= 3; ++i) {
    for (int j = 0; j <= 3; ++j) {
      for (double v : biaffine_scores(sent, p, i, j)) EXPECT_DOUBLE_EQ(v, 0.125);
    }
  }
}

TEST(Biaffine, ScalarHandExample) {
  BiaffineParams p(1, 1, 2);
  p.u(0, 0) = 1.0;
  p.u(0, 1) = 0.0;
  const std::vector<double> xi = {2.0}, xj = {3.0};
  const std::vector<double> logits = biaffine_logits(xi, xj, p);
  ASSERT_EQ(logits.size(), 2u);
  EXPECT_DOUBLE_EQ(logits[0], 6.0);
  EXPECT_DOUBLE_EQ(logits[1], 0.0);
  const double z = std::exp(6.0) + 1.0;
  EXPECT_NEAR(std::exp(6.0) / z, 0.99753, 1e-5);
  EXPECT_NEAR(1.0 / z, 0.00247, 1e-5);
}

TEST(Biaffine, LinearTermsHandExample) {
  // p = 2, r = 2: logits_k = x_c^T U_k x_e + W_i[k] . x_c + x_e . W_j[:, k]
  BiaffineParams p(2, 2, 2);
  p.u(0, 0) = 1, p.u(0, 1) = 2, p.u(1, 0) = 3, p.u(1, 1) = 4;  // U_0
  p.u(0, 2) = -1, p.u(0, 3) = 0, p.u(1, 2) = 0, p.u(1, 3) = 1;  // U_1
  p.w_claim(0, 0) = 0.5, p.w_claim(1, 1) = -2;
  p.w_evidence(0, 1) = 3, p.w_evidence(1, 0) = 1;
  const std::vector<double> xc = {1, 2}, xe = {3, -1};
  const std::vector<double> l = biaffine_logits(xc, xe, p);
  // U_0: [1 2; 3 4] -> xc^T U_0 = [7, 10] -> . xe = 11; + 0.5 + (-1) = 10.5
  // U_1: [-1 0; 0 1] -> xc^T U_1 = [-1, 2] -> . xe = -5; + (-4) + 9 = 0
  EXPECT_DOUBLE_EQ(l[0], 10.5);
  EXPECT_DOUBLE_EQ(l[1], 0.0);
}

BiaffineParams random_biaffine(std::size_t d, std::size_t p, std::uint64_t seed) {
  BiaffineParams b(d, p);
  Rng rng(seed);
  b.init(rng);
  for (Matrix* m : {&b.u, &b.w_claim, &b.w_evidence}) {
    for (double& v : m->flat()) v *= 20.0;
  }
  return b;
}

TEST(Biaffine, TableMatchesReferenceAndIsNormalized) {
  testing::Gen gen(3);
  for (int n : {1, 3, 9, 20}) {
    const Matrix sent = random_matrix(gen, static_cast<std::size_t>(n) + 1, 8, 1.0);
    const BiaffineParams p = random_biaffine(8, 4, static_cast<std::uint64_t>(n));
    const TableScores a = score_table(sent, p);
    const TableScores b = reference::score_table(sent, p);
    for (int i = 1; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        double total = 0.0;
        for (std::size_t k = 0; k < kNumTagLabels; ++k) {
          EXPECT_NEAR(a.at(i, j)[k], b.at(i, j)[k], 1e-12);
          EXPECT_GE(a.at(i, j)[k], 0.0);
          total += a.at(i, j)[k];
        }
        EXPECT_NEAR(total, 1.0, 1e-6);
      }
    }
  }
}

TEST(Biaffine, OutOfRangeCell) {
  const Matrix sent(3, 4);
  const BiaffineParams p(4, 2);
  EXPECT_THROW(biaffine_scores(sent, p, 0, 1), std::out_of_range);
  EXPECT_THROW(biaffine_scores(sent, p, 1, 3), std::out_of_range);
}

LabelDistribution with_true(TagLabel label, double p) {
  LabelDistribution d{};
  const double rest = (1.0 - p) / 7.0;
  for (std::size_t k = 0; k < kNumTagLabels; ++k) d[k] = k == static_cast<std::size_t>(label) ? p : rest;
  return d;
}

TEST(TaggingLoss, Analytic) {
  LabelDistribution uniform;
  uniform.fill(0.125);
  const std::vector<LabelDistribution> one = {uniform};
  const std::vector<TagLabel> g1 = {TagLabel::Case};
  EXPECT_NEAR(tagging_loss(one, g1), std::log(8.0), 1e-12);

  const TagTable gold = build_gold_table(kExample, 4);
  const TableScores perfect = one_hot(gold);
  std::vector<LabelDistribution> probs;
  std::vector<TagLabel> labels;
  for (int i = 1; i <= 4; ++i) {
    for (int j = 0; j <= 4; ++j) {
      probs.push_back(perfect.at(i, j));
      labels.push_back(gold.at(i, j));
    }
  }
  EXPECT_EQ(tagging_loss(probs, labels), 0.0);

  const std::vector<LabelDistribution> two = {with_true(TagLabel::Null, 0.5), with_true(TagLabel::Support, 0.25)};
  const std::vector<TagLabel> g2 = {TagLabel::Null, TagLabel::Support};
  EXPECT_NEAR(tagging_loss(two, g2), std::log(2.0) + std::log(4.0), 1e-9);
}

TEST(TaggingLoss, RejectsUnnormalized) {
  LabelDistribution d{};
  d[0] = 0.9;
  const std::vector<LabelDistribution> probs = {d};
  const std::vector<TagLabel> g = {TagLabel::Null};
  EXPECT_THROW(tagging_loss(probs, g), std::invalid_argument);
}

TEST(Decode, ExampleAndEdgeCases) {
  EXPECT_EQ(decode_table(one_hot(build_gold_table(kExample, 4))), kExample);
  EXPECT_TRUE(decode_table(one_hot(TagTable(5))).empty());

  // Types without a stance contribute nothing; wrong-region labels become null.
  TableScores s = one_hot(TagTable(3));
  s.at(2, 1) = {};
  s.at(2, 1)[static_cast<std::size_t>(TagLabel::Case)] = 1.0;
  EXPECT_TRUE(decode_table(s).empty());
  s.at(2, 0) = {};
  s.at(2, 0)[static_cast<std::size_t>(TagLabel::Expert)] = 1.0;
  EXPECT_TRUE(decode_table(s).empty());
  s.at(2, 0) = {};
  s.at(2, 0)[static_cast<std::size_t>(TagLabel::Against)] = 1.0;
  s.at(2, 3) = {};
  s.at(2, 3)[static_cast<std::size_t>(TagLabel::Support)] = 1.0;
  EXPECT_EQ(decode_table(s), (QuadSet{{2, 1, Stance::Against, EvidenceType::Case}}));
}

TEST(Decode, TiesGoToLowestLabel) {
  TableScores s = one_hot(TagTable(2));
  s.at(1, 0).fill(0.0);
  s.at(1, 0)[static_cast<std::size_t>(TagLabel::Support)] = 0.5;
  s.at(1, 0)[static_cast<std::size_t>(TagLabel::Against)] = 0.5;
  s.at(1, 2).fill(0.0);
  s.at(1, 2)[static_cast<std::size_t>(TagLabel::Research)] = 0.5;
  s.at(1, 2)[static_cast<std::size_t>(TagLabel::Others)] = 0.5;
  EXPECT_EQ(decode_table(s), (QuadSet{{1, 2, Stance::Support, EvidenceType::Research}}));
}

TEST(QuadtagProperty, TableRoundTrip) {
  testing::Gen gen(4);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = gen.range(2, 15);
    const QuadSet q = gen.quads(n, 10);
    ASSERT_EQ(decode_table(one_hot(build_gold_table(q, n))), q);
  }
}

TEST(QuadtagProperty, LabelRegions) {
  testing::Gen gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = gen.range(1, 8);
    const Matrix sent = random_matrix(gen, static_cast<std::size_t>(n) + 1, 6, 2.0);
    const BiaffineParams p = random_biaffine(6, 3, static_cast<std::uint64_t>(trial));
    const TableScores scores = score_table(sent, p);
    for (const Quadruplet& q : decode_table(scores)) {
      EXPECT_NE(q.claim, q.evidence);
      EXPECT_GE(q.claim, 1);
      EXPECT_LE(q.evidence, n);
    }
    EXPECT_NO_THROW(validate_quads(decode_table(scores), n));
  }
}

TEST(Biaffine, GradientCheck) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GradCheckResult r = grad_check(GradComponent::Biaffine, 1e-5, seed);
    EXPECT_GT(r.checked, 0u);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
  }
}

}  // namespace
}  // namespace aqe
