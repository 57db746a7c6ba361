#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "edad/data.hpp"
#include "edad/model.hpp"

namespace edad {

/// Model cannot produce valid scores (non-finite parameters or outputs).
class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Aggregation { mean, max };
std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& s);

/// -c_i for every timestamp of one window, with c_i the point-wise MI
/// contribution between Y and Y_aux. No shuffling.
std::vector<real> score_window(const Model& model, std::span<const real> window);

using WindowScorer = std::function<std::vector<real>(std::span<const real>)>;

/// One score vector per window of `batch`, computed in parallel.
std::vector<std::vector<real>> score_windows(const WindowScorer& scorer, const WindowBatch& batch,
                                             std::size_t threads = 0);
std::vector<std::vector<real>> score_windows(const Model& model, const WindowBatch& batch, std::size_t threads = 0);

struct ChannelWindowScores {
  std::vector<std::size_t> offsets;
  std::vector<std::vector<real>> scores;
};

struct AnomalyScoreSeries {
  std::vector<real> scores;
  /// Number of (window, channel) pairs covering each timestamp.
  std::vector<std::size_t> coverage;
};

/// Overlapping windows reduced per channel, then channels reduced per timestamp.
AnomalyScoreSeries aggregate(std::span<const ChannelWindowScores> channels, std::size_t length,
                             Aggregation overlap = Aggregation::mean, Aggregation across = Aggregation::mean);

struct ScoringOptions {
  std::size_t stride = 10;
  Aggregation overlap = Aggregation::mean;
  Aggregation across = Aggregation::mean;
  std::size_t threads = 0;
};

/// Windowizes each univariate channel, scores and aggregates.
AnomalyScoreSeries score_series(const WindowScorer& scorer, std::size_t window, std::span<const TimeSeries> channels,
                                const ScoringOptions& options);
AnomalyScoreSeries score_series(const Model& model, std::span<const TimeSeries> channels,
                                const ScoringOptions& options);

/// Flags the ceil(ratio * N) highest scores; ties go to the earlier index.
std::vector<std::uint8_t> threshold(std::span<const real> scores, double ratio);

/// Threshold chosen over train and test scores together; returns the test part.
std::vector<std::uint8_t> threshold_pooled(std::span<const real> test_scores, std::span<const real> train_scores,
                                           double ratio);

/// Every labeled segment containing a predicted positive becomes fully positive.
std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels);

/// Columns: timestamp, score, coverage, prediction[, label].
void write_scores_csv(std::ostream& out, const AnomalyScoreSeries& series, std::span<const std::uint8_t> preds,
                      const std::optional<std::vector<std::uint8_t>>& labels);

struct ScoreTable {
  std::vector<real> scores;
  std::vector<std::uint8_t> predictions;
  std::optional<std::vector<std::uint8_t>> labels;
};
ScoreTable read_scores_csv(std::istream& in);

}  // namespace edad
