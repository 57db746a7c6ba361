#include "edad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "edad/parallel.hpp"

namespace edad {

std::string to_string(Aggregation a) { return a == Aggregation::mean ? "mean" : "max"; }

Aggregation parse_aggregation(const std::string& s) {
  if (s == "mean") return Aggregation::mean;
  if (s == "max") return Aggregation::max;
  throw ConfigError("unknown aggregation '" + s + "' (expected mean or max)");
}

std::vector<real> score_window(const Model& model, std::span<const real> window) {
  if (window.size() != model.config.window)
    throw DimensionError("window of length " + std::to_string(window.size()) + " given to a model with B = " +
                         std::to_string(model.config.window));
  try {
    Tape tape(false);
    const BoundParams params(tape, model.params, false);
    const Var y = encode(tape, params, window, model.config.encoder);
    const Var y_aux = split(y).second;
    const Var f = critic_scores(y, y_aux, params, model.config.critic);
    auto c = pointwise_scores(model.config.estimator, f.value());
    for (auto& v : c) {
      v = -v;
      if (!std::isfinite(v)) throw ScoringError("non-finite anomaly score");
    }
    return c;
  } catch (const NumericError& e) {
    throw ScoringError(std::string("model produced non-finite values: ") + e.what());
  }
}

std::vector<std::vector<real>> score_windows(const WindowScorer& scorer, const WindowBatch& batch,
                                             std::size_t threads) {
  std::vector<std::vector<real>> out(batch.size());
  parallel_for(batch.size(), threads ? threads : worker_count(),
               [&](std::size_t i) { out[i] = scorer(batch[i]); });
  for (const auto& s : out)
    if (s.size() != batch.window) throw DimensionError("scorer returned a vector of the wrong length");
  return out;
}

std::vector<std::vector<real>> score_windows(const Model& model, const WindowBatch& batch, std::size_t threads) {
  if (!all_finite(model.params)) throw ScoringError("model parameters contain non-finite values");
  return score_windows([&](std::span<const real> w) { return score_window(model, w); }, batch, threads);
}

AnomalyScoreSeries aggregate(std::span<const ChannelWindowScores> channels, std::size_t length, Aggregation overlap,
                             Aggregation across) {
  if (channels.empty()) throw ContractError("aggregate: no channels");
  AnomalyScoreSeries out{std::vector<real>(length, 0), std::vector<std::size_t>(length, 0)};
  std::vector<real> channel_value(length);
  std::vector<std::size_t> channel_count(length);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    if (ch.offsets.size() != ch.scores.size()) throw ContractError("aggregate: offsets and scores differ in count");
    std::fill(channel_value.begin(), channel_value.end(), real{0});
    std::fill(channel_count.begin(), channel_count.end(), std::size_t{0});
    for (std::size_t w = 0; w < ch.offsets.size(); ++w) {
      const auto& s = ch.scores[w];
      if (ch.offsets[w] + s.size() > length) throw ContractError("aggregate: window extends past the series");
      for (std::size_t k = 0; k < s.size(); ++k) {
        const std::size_t t = ch.offsets[w] + k;
        if (overlap == Aggregation::max && channel_count[t] > 0)
          channel_value[t] = std::max(channel_value[t], s[k]);
        else
          channel_value[t] += s[k];
        ++channel_count[t];
      }
    }
    for (std::size_t t = 0; t < length; ++t) {
      if (channel_count[t] == 0)
        throw ContractError("aggregate: timestamp " + std::to_string(t) + " of channel " + std::to_string(c) +
                            " is not covered by any window");
      const real v = overlap == Aggregation::mean ? channel_value[t] / static_cast<real>(channel_count[t])
                                                  : channel_value[t];
      if (across == Aggregation::max && c > 0)
        out.scores[t] = std::max(out.scores[t], v);
      else
        out.scores[t] += v;
      out.coverage[t] += channel_count[t];
    }
  }
  if (across == Aggregation::mean)
    for (auto& v : out.scores) v /= static_cast<real>(channels.size());
  return out;
}

AnomalyScoreSeries score_series(const WindowScorer& scorer, std::size_t window, std::span<const TimeSeries> channels,
                                const ScoringOptions& options) {
  if (channels.empty()) throw ContractError("score_series: no channels");
  std::vector<ChannelWindowScores> scored;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].length() != channels[0].length()) throw DimensionError("channels differ in length");
    const WindowBatch batch = windowize(channels[c], window, options.stride, c);
    scored.push_back({batch.offsets, score_windows(scorer, batch, options.threads)});
  }
  return aggregate(scored, channels[0].length(), options.overlap, options.across);
}

AnomalyScoreSeries score_series(const Model& model, std::span<const TimeSeries> channels,
                                const ScoringOptions& options) {
  if (!all_finite(model.params)) throw ScoringError("model parameters contain non-finite values");
  return score_series([&](std::span<const real> w) { return score_window(model, w); }, model.config.window, channels,
                      options);
}

namespace {

std::vector<std::size_t> top_indices(std::span<const real> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(k);
  return idx;
}

void require_ratio(double ratio) {
  if (!(ratio > 0 && ratio < 1)) throw ConfigError("anomaly ratio must lie in (0, 1)");
}

}  // namespace

std::vector<std::uint8_t> threshold(std::span<const real> scores, double ratio) {
  require_ratio(ratio);
  std::vector<std::uint8_t> preds(scores.size(), 0);
  for (auto i : top_indices(scores, std::min(scores.size(), ceil_count(ratio, scores.size())))) preds[i] = 1;
  return preds;
}

std::vector<std::uint8_t> threshold_pooled(std::span<const real> test_scores, std::span<const real> train_scores,
                                           double ratio) {
  require_ratio(ratio);
  std::vector<real> pool(train_scores.begin(), train_scores.end());
  pool.insert(pool.end(), test_scores.begin(), test_scores.end());
  std::vector<std::uint8_t> preds(test_scores.size(), 0);
  for (auto i : top_indices(pool, std::min(pool.size(), ceil_count(ratio, pool.size()))))
    if (i >= train_scores.size()) preds[i - train_scores.size()] = 1;
  return preds;
}

std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels) {
  if (preds.size() != labels.size()) throw DimensionError("point_adjust: length mismatch");
  std::vector<std::uint8_t> out(preds.begin(), preds.end());
  for (std::size_t s = 0; s < labels.size();) {
    if (!labels[s]) {
      ++s;
      continue;
    }
    std::size_t e = s;
    bool hit = false;
    for (; e < labels.size() && labels[e]; ++e) hit = hit || preds[e];
    if (hit) std::fill(out.begin() + static_cast<std::ptrdiff_t>(s), out.begin() + static_cast<std::ptrdiff_t>(e), 1);
    s = e;
  }
  return out;
}

void write_scores_csv(std::ostream& out, const AnomalyScoreSeries& series, std::span<const std::uint8_t> preds,
                      const std::optional<std::vector<std::uint8_t>>& labels) {
  const std::size_t n = series.scores.size();
  if (preds.size() != n || series.coverage.size() != n || (labels && labels->size() != n))
    throw DimensionError("write_scores_csv: column lengths differ");
  out << "timestamp,score,coverage,prediction" << (labels ? ",label" : "") << '\n';
  for (std::size_t t = 0; t < n; ++t) {
    out << t << ',' << format_real(series.scores[t]) << ',' << series.coverage[t] << ',' << int(preds[t]);
    if (labels) out << ',' << int((*labels)[t]);
    out << '\n';
  }
}

ScoreTable read_scores_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestionError("scores file is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  }
  auto column = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const auto score_col = column("score"), pred_col = column("prediction"), label_col = column("label");
  if (score_col < 0 || pred_col < 0) throw IngestionError("scores file needs 'score' and 'prediction' columns");
  ScoreTable table;
  if (label_col >= 0) table.labels.emplace();
  for (std::size_t row = 2; std::getline(in, line); ++row) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != header.size())
      throw IngestionError("scores row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(header.size()));
    auto flag = [&](std::ptrdiff_t col) -> std::uint8_t {
      const auto& c = cells[static_cast<std::size_t>(col)];
      if (c == "0") return 0;
      if (c == "1") return 1;
      throw IngestionError("scores row " + std::to_string(row) + " column '" + header[static_cast<std::size_t>(col)] +
                           "' is not 0/1");
    };
    try {
      std::size_t used = 0;
      table.scores.push_back(static_cast<real>(std::stod(cells[static_cast<std::size_t>(score_col)], &used)));
    } catch (const std::logic_error&) {
      throw IngestionError("scores row " + std::to_string(row) + " column 'score' is not a number");
    }
    table.predictions.push_back(flag(pred_col));
    if (label_col >= 0) table.labels->push_back(flag(label_col));
  }
  return table;
}

}  // namespace edad
