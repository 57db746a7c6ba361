#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "edad/baseline.hpp"
#include "edad/scoring.hpp"

namespace edad {
namespace {

double median(std::vector<real> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

BaselineConfig small_baseline(std::size_t window = 20) {
  BaselineConfig c;
  c.window = window;
  c.batch_size = 16;
  c.seed = 3;
  return c;
}

TEST(Baseline, ShapesAndDefaults) {
  const auto m = BaselineModel::initialize(small_baseline());
  EXPECT_EQ(m.config.hidden_width(), 5u);
  EXPECT_EQ(m.params.at("ae.w1").rows(), 20u);
  EXPECT_EQ(m.params.at("ae.w1").cols(), 5u);
  EXPECT_EQ(m.params.at("ae.w2").cols(), 20u);
  EXPECT_EQ(baseline_window_scores(m, std::vector<real>(20, 0.5)).size(), 20u);
}

TEST(Baseline, IdentitySizedBottleneckCanReachZeroLoss) {
  BaselineConfig cfg = small_baseline(8);
  cfg.hidden = 8;
  BaselineModel m = BaselineModel::initialize(cfg);
  m.params["ae.w1"] = Tensor::identity(8);
  m.params["ae.w2"] = Tensor::identity(8);
  m.params["ae.b1"].fill(0);
  m.params["ae.b2"].fill(0);
  std::vector<real> window(8);
  for (std::size_t i = 0; i < 8; ++i) window[i] = 1 + std::sin(static_cast<real>(i));
  for (real s : baseline_window_scores(m, window)) EXPECT_EQ(s, 0);
  Tape tape(false);
  const BoundParams bound(tape, m.params, false);
  Tensor batch = Tensor::matrix(1, 8);
  std::copy(window.begin(), window.end(), batch.data());
  EXPECT_EQ(reconstruction_loss(tape.constant(batch), bound).item(), 0);
}

TEST(Baseline, ConstantSeriesReconstructsAlmostExactly) {
  BaselineConfig cfg = small_baseline();
  cfg.max_epochs = 60;
  cfg.lr = 1e-2;
  cfg.patience = 60;
  const std::vector<WindowBatch> data{windowize(synthetic_flat(400, 1.0), 20, 5)};
  const auto r = train_reconstruction_baseline(data, cfg);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
  EXPECT_LT(r.epoch_loss.back(), 1e-3);
}

TEST(Baseline, InjectedSpikeScoresAboveMedian) {
  BaselineConfig cfg = small_baseline(50);
  cfg.max_epochs = 20;
  cfg.lr = 3e-3;
  const auto clean = standardize(synthetic_sine(3000, 50, 0.1, 4)).first;
  const auto r = train_reconstruction_baseline(std::vector<WindowBatch>{windowize(clean, 50, 5)}, cfg);
  const auto values = clean.channel(0);
  auto window = std::vector<real>(values.begin() + 1000, values.begin() + 1050);
  window[20] += 4;
  const auto scores = baseline_window_scores(r.model, window);
  EXPECT_GT(scores[20], median(scores));
}

TEST(Baseline, TrainingIsDeterministic) {
  const std::vector<WindowBatch> data{windowize(synthetic_sine(300, 20, 0.1, 2), 20, 5)};
  BaselineConfig cfg = small_baseline();
  cfg.max_epochs = 3;
  const auto a = train_reconstruction_baseline(data, cfg), b = train_reconstruction_baseline(data, cfg);
  EXPECT_EQ(a.model.params, b.model.params);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

std::vector<ChannelWindowScores> one_channel(std::vector<std::size_t> offsets, std::vector<std::vector<real>> s) {
  return {ChannelWindowScores{std::move(offsets), std::move(s)}};
}

TEST(Aggregate, NoOverlapIsConcatenation) {
  const auto ch = one_channel({0, 2}, {{1, 2}, {3, 4}});
  const auto out = aggregate(ch, 4);
  EXPECT_EQ(out.scores, (std::vector<real>{1, 2, 3, 4}));
  EXPECT_EQ(out.coverage, (std::vector<std::size_t>{1, 1, 1, 1}));
}

TEST(Aggregate, FullOverlapAverages) {
  const auto out = aggregate(one_channel({0, 0}, {{1, 2, 3}, {3, 6, 9}}), 3);
  EXPECT_EQ(out.scores, (std::vector<real>{2, 4, 6}));
  EXPECT_EQ(out.coverage, (std::vector<std::size_t>{2, 2, 2}));
  const auto mx = aggregate(one_channel({0, 0}, {{1, 8, 3}, {3, 6, 9}}), 3, Aggregation::max);
  EXPECT_EQ(mx.scores, (std::vector<real>{3, 8, 9}));
}

TEST(Aggregate, ChannelsAreAveraged) {
  std::vector<ChannelWindowScores> chans{{{0}, {{1, 2}}}, {{0}, {{3, 6}}}};
  const auto out = aggregate(chans, 2);
  EXPECT_EQ(out.scores, (std::vector<real>{2, 4}));
  EXPECT_EQ(out.coverage, (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(aggregate(chans, 2, Aggregation::mean, Aggregation::max).scores, (std::vector<real>{3, 6}));
}

TEST(Aggregate, UncoveredTimestampIsContractError) {
  EXPECT_THROW(aggregate(one_channel({0}, {{1, 2}}), 3), ContractError);
}

TEST(Aggregate, RaisingOneTimestampNeverLowersIt) {
  Rng rng(4);
  std::vector<std::vector<real>> s(5, std::vector<real>(4));
  for (auto& w : s)
    for (real& v : w) v = static_cast<real>(rng.normal());
  const std::vector<std::size_t> offsets{0, 1, 2, 3, 4};
  for (auto overlap : {Aggregation::mean, Aggregation::max}) {
    const auto before = aggregate(one_channel(offsets, s), 8, overlap);
    auto raised = s;
    for (std::size_t w = 0; w < 5; ++w)
      if (w <= 3 && 3 < w + 4) raised[w][3 - w] += 0.5;
    const auto after = aggregate(one_channel(offsets, raised), 8, overlap);
    EXPECT_GE(after.scores[3], before.scores[3]);
  }
}

TEST(Threshold, HandExamples) {
  const std::vector<real> s{3, 1, 2, 0};
  EXPECT_EQ(threshold(s, 0.5), (std::vector<std::uint8_t>{1, 0, 1, 0}));
  const std::vector<real> flat(10, 1.0);
  EXPECT_EQ(threshold(flat, 0.3), (std::vector<std::uint8_t>{1, 1, 1, 0, 0, 0, 0, 0, 0, 0}));
}

TEST(Threshold, ExactCountForAnyScores) {
  Rng rng(5);
  std::vector<real> s(1000);
  for (real& v : s) v = static_cast<real>(std::round(rng.normal() * 3));
  for (double r : {0.01, 0.05, 0.123, 0.5}) {
    const auto p = threshold(s, r);
    EXPECT_EQ(static_cast<std::size_t>(std::count(p.begin(), p.end(), 1)), ceil_count(r, 1000)) << r;
  }
  EXPECT_THROW(threshold(s, 0.0), ConfigError);
  EXPECT_THROW(threshold(s, 1.0), ConfigError);
}

TEST(Threshold, PooledUsesTrainScoresForTheCut) {
  const std::vector<real> test{5, 1, 2, 3}, train{10, 9, 8, 7};
  // 8 pooled points at 25%: the top two are both train scores.
  EXPECT_EQ(threshold_pooled(test, train, 0.25), (std::vector<std::uint8_t>{0, 0, 0, 0}));
  EXPECT_EQ(threshold_pooled(test, train, 0.75), (std::vector<std::uint8_t>{1, 0, 0, 1}));
}

TEST(PointAdjust, HandExamples) {
  const std::vector<std::uint8_t> labels{0, 1, 1, 1, 1, 1, 0, 1, 1, 0};
  const std::vector<std::uint8_t> none{1, 0, 0, 0, 0, 0, 1, 0, 0, 1};
  EXPECT_EQ(point_adjust(none, labels), none);
  const std::vector<std::uint8_t> hit_a{0, 0, 0, 1, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(point_adjust(hit_a, labels), (std::vector<std::uint8_t>{0, 1, 1, 1, 1, 1, 0, 0, 0, 0}));
  EXPECT_THROW(point_adjust(hit_a, std::vector<std::uint8_t>(3)), DimensionError);
}

TEST(PointAdjust, NeverRemovesOrAddsOutsideSegments) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint8_t> p(50), l(50);
    for (auto& v : p) v = rng.uniform() < 0.1;
    for (auto& v : l) v = rng.uniform() < 0.3;
    const auto adj = point_adjust(p, l);
    for (std::size_t i = 0; i < 50; ++i) {
      if (p[i]) EXPECT_EQ(adj[i], 1);
      if (!p[i] && !l[i]) EXPECT_EQ(adj[i], 0);
    }
  }
}

TEST(ScoresCsv, WriteReadRoundTrip) {
  AnomalyScoreSeries s{{0.5, -1.25, 3}, {1, 2, 1}};
  const std::vector<std::uint8_t> preds{0, 0, 1};
  std::stringstream buf;
  write_scores_csv(buf, s, preds, std::vector<std::uint8_t>{0, 1, 1});
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "timestamp,score,coverage,prediction,label");
  const auto t = read_scores_csv(buf);
  EXPECT_EQ(t.scores, s.scores);
  EXPECT_EQ(t.predictions, preds);
  EXPECT_EQ(t.labels, (std::vector<std::uint8_t>{0, 1, 1}));
  std::stringstream unlabeled;
  write_scores_csv(unlabeled, s, preds, std::nullopt);
  EXPECT_FALSE(read_scores_csv(unlabeled).labels);
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.window = 16;
  m.encoder.d_model = 8;
  m.encoder.heads = 2;
  m.encoder.layers = 1;
  return m;
}

TEST(ScoreWindow, PureAndWindowLength) {
  const Model model = Model::initialize(tiny_model(), 2);
  const auto series = synthetic_sine(64, 16, 0.1, 1);
  const auto batch = windowize(series, 16, 8);
  const auto a = score_window(model, batch[1]);
  EXPECT_EQ(a.size(), 16u);
  EXPECT_EQ(a, score_window(model, batch[1]));
  const auto all = score_windows(model, batch, 2);
  ASSERT_EQ(all.size(), batch.size());
  EXPECT_EQ(all[1], a);
}

TEST(ScoreWindow, EqualsNegatedPointwiseContribution) {
  const Model model = Model::initialize(tiny_model(), 3);
  const auto batch = windowize(synthetic_sine(32, 16, 0.1, 2), 16, 16);
  Tape tape(false);
  const BoundParams bound(tape, model.params, false);
  const Var y = encode(tape, bound, batch[0], model.config.encoder);
  const auto [sta, aux] = split(y);
  const auto c = pointwise_scores(model.config.estimator, critic_scores(y, aux, bound, model.config.critic).value());
  const auto s = score_window(model, batch[0]);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(s[i], -c[i]);
}

TEST(ScoreWindow, NonFiniteParametersAreScoringError) {
  Model model = Model::initialize(tiny_model(), 3);
  model.params["decomposer.wp"][0] = std::numeric_limits<real>::infinity();
  model.params["encoder.embed"][0] = std::numeric_limits<real>::quiet_NaN();
  EXPECT_THROW(score_window(model, std::vector<real>(16, 0.5)), ScoringError);
}

TEST(ScoreSeries, EveryTimestampCoveredAndDeterministic) {
  const Model model = Model::initialize(tiny_model(), 4);
  const std::vector<TimeSeries> channels{synthetic_sine(70, 16, 0.1, 1), synthetic_sine(70, 10, 0.1, 2)};
  ScoringOptions opt;
  opt.stride = 5;
  const auto a = score_series(model, channels, opt);
  EXPECT_EQ(a.scores.size(), 70u);
  for (auto c : a.coverage) EXPECT_GE(c, 2u);
  for (real v : a.scores) EXPECT_TRUE(std::isfinite(v));
  opt.threads = 1;
  EXPECT_EQ(score_series(model, channels, opt).scores, a.scores);
}

}  // namespace
}  // namespace edad
