#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "edad/metrics.hpp"
#include "edad/rng.hpp"
#include "edad/scoring.hpp"
#include "support/oracles.hpp"

namespace edad {
namespace {

using Labels = std::vector<std::uint8_t>;

struct Instance {
  std::vector<real> scores;
  Labels labels;
};

// Scores on a coarse grid so ties occur; labels in a few contiguous segments.
Instance random_instance(Rng& rng, std::size_t n) {
  Instance in{std::vector<real>(n), Labels(n, 0)};
  for (real& s : in.scores) s = static_cast<real>(std::round(rng.normal() * 4) / 4);
  const std::size_t segments = 1 + rng.below(4);
  for (std::size_t k = 0; k < segments; ++k) {
    const std::size_t start = rng.below(n), len = 1 + rng.below(6);
    for (std::size_t i = start; i < std::min(n, start + len); ++i) in.labels[i] = 1;
  }
  if (std::count(in.labels.begin(), in.labels.end(), 1) == static_cast<long>(n)) in.labels[0] = 0;
  return in;
}

std::vector<real> as_real(const Labels& l) { return {l.begin(), l.end()}; }

TEST(Prf1, Conventions) {
  const Labels l{0, 1, 1, 0};
  const auto perfect = prf1(l, l);
  EXPECT_EQ(perfect.precision, 1);
  EXPECT_EQ(perfect.recall, 1);
  EXPECT_EQ(perfect.f1, 1);
  const auto none = prf1(Labels(4, 0), l);
  EXPECT_EQ(none.precision, 0);
  EXPECT_EQ(none.recall, 0);
  EXPECT_EQ(none.f1, 0);
  const auto no_truth = prf1(l, Labels(4, 0));
  EXPECT_EQ(no_truth.recall, 0);
  const auto half = prf1(Labels{1, 1, 0, 0}, l);
  EXPECT_EQ(half.tp, 1u);
  EXPECT_EQ(half.fp, 1u);
  EXPECT_EQ(half.fn, 1u);
  EXPECT_EQ(half.tn, 1u);
  EXPECT_DOUBLE_EQ(half.f1, 0.5);
  EXPECT_THROW(prf1(Labels{1}, l), DimensionError);
}

TEST(Prf1, TableRowsSatisfyF1Identity) {
  EXPECT_NEAR(f1_score(0.938, 1.000), 0.968, 0.001);
  EXPECT_NEAR(f1_score(0.978, 0.984), 0.981, 0.001);
  EXPECT_EQ(f1_score(0, 0), 0);
}

TEST(Auc, HandExamples) {
  const std::vector<real> s{0.9, 0.8, 0.1};
  const Labels l{1, 1, 0};
  EXPECT_EQ(auc_roc(s, l), 1);
  EXPECT_EQ(auc_pr(s, l), 1);
  EXPECT_EQ(auc_roc(std::vector<real>{0.1, 0.2, 0.9}, l), 0);
  EXPECT_DOUBLE_EQ(auc_roc(std::vector<real>{1, 1, 1}, l), 0.5);
}

TEST(Auc, SingleClassIsUndefined) {
  const std::vector<real> s{1, 2, 3};
  EXPECT_THROW(auc_roc(s, Labels{0, 0, 0}), MetricUndefined);
  EXPECT_THROW(auc_roc(s, Labels{1, 1, 1}), MetricUndefined);
  EXPECT_THROW(auc_pr(s, Labels{0, 0, 0}), MetricUndefined);
  EXPECT_THROW(vus(s, Labels{0, 0, 0}, 2), MetricUndefined);
}

TEST(Auc, MatchesBruteForceOracles) {
  Rng rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    const auto in = random_instance(rng, 60);
    const auto lr = as_real(in.labels);
    EXPECT_NEAR(auc_roc(in.scores, in.labels), testing::brute_roc(in.scores, lr), 1e-9) << trial;
    EXPECT_NEAR(auc_pr(in.scores, in.labels), testing::brute_pr(in.scores, lr), 1e-9) << trial;
  }
}

TEST(Auc, RocInvariantUnderIncreasingTransform) {
  Rng rng(2);
  const auto in = random_instance(rng, 80);
  std::vector<real> t = in.scores;
  for (real& v : t) v = std::exp(3 * v) + 7;
  EXPECT_NEAR(auc_roc(t, in.labels), auc_roc(in.scores, in.labels), 1e-12);
}

TEST(Buffer, RampShapeMatchesOracle) {
  const Labels l{0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1};
  const auto b = buffered_labels(l, 2);
  EXPECT_NEAR(b[2], 1.0 / 3, 1e-15);
  EXPECT_NEAR(b[3], 2.0 / 3, 1e-15);
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[1], 0);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = random_instance(rng, 50);
    for (std::size_t w : {0u, 1u, 3u, 7u}) EXPECT_EQ(buffered_labels(in.labels, w), testing::brute_buffer(in.labels, w));
  }
  EXPECT_EQ(buffered_labels(l, 0), as_real(l));
}

TEST(Vus, ZeroBufferEqualsPlainAreas) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = random_instance(rng, 70);
    const auto v = vus(in.scores, in.labels, 0);
    EXPECT_EQ(v.roc, auc_roc(in.scores, in.labels));
    EXPECT_EQ(v.pr, auc_pr(in.scores, in.labels));
  }
}

TEST(Vus, MatchesBruteForceDoubleLoop) {
  Rng rng(5);
  for (int trial = 0; trial < 15; ++trial) {
    const auto in = random_instance(rng, 40 + rng.below(160));
    const std::size_t max_buffer = rng.below(12);
    const auto v = vus(in.scores, in.labels, max_buffer);
    const auto [pr, roc] = testing::brute_vus(in.scores, in.labels, max_buffer);
    EXPECT_NEAR(v.pr, pr, 1e-9);
    EXPECT_NEAR(v.roc, roc, 1e-9);
    EXPECT_GE(v.pr, 0);
    EXPECT_LE(v.roc, 1);
  }
}

TEST(Vus, AlignedScoresGiveUnitRoc) {
  const std::size_t n = 100;
  Labels l(n, 0);
  for (std::size_t i = 40; i < 50; ++i) l[i] = 1;
  std::vector<real> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dist = i < 40 ? 40.0 - i : (i >= 50 ? i - 49.0 : 0.0);
    s[i] = static_cast<real>(-dist);
  }
  for (std::size_t L : {0u, 1u, 5u, 20u}) EXPECT_NEAR(vus(s, l, L).roc, 1.0, 1e-9) << L;
}

TEST(Evaluate, PerfectPredictionsReportOnes) {
  const Labels l{0, 0, 1, 1, 0, 0, 0, 1, 0, 0};
  const std::vector<real> s(l.begin(), l.end());
  const auto r = evaluate(s, l, l, 2);
  EXPECT_EQ(r.counts.f1, 1);
  EXPECT_EQ(r.auc_roc, 1);
  EXPECT_EQ(r.auc_pr, 1);
  EXPECT_EQ(r.max_buffer, 2u);
  std::ostringstream text, csv;
  write_report(text, r);
  EXPECT_NE(text.str().find("auc_roc = 1"), std::string::npos);
  write_report_csv_header(csv);
  write_report_csv_row(csv, r);
  const std::string rows = csv.str();
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 2);
}

TEST(Evaluate, PointAdjustNeverLowersRecall) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = random_instance(rng, 100);
    const auto preds = threshold(in.scores, 0.1);
    EXPECT_GE(prf1(point_adjust(preds, in.labels), in.labels).recall, prf1(preds, in.labels).recall);
  }
}

TEST(Evaluate, AllMetricsInUnitInterval) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = random_instance(rng, 120);
    const auto r = evaluate(in.scores, threshold(in.scores, 0.05), in.labels, 10);
    for (double m : {r.counts.precision, r.counts.recall, r.counts.f1, r.auc_pr, r.auc_roc, r.vus_pr, r.vus_roc}) {
      EXPECT_GE(m, 0);
      EXPECT_LE(m, 1);
    }
  }
}

}  // namespace
}  // namespace edad
