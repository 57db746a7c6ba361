#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edad/tensor.hpp"

namespace edad {

/// N x D observations with optional 0/1 labels (1 = anomaly).
struct TimeSeries {
  std::string name;
  std::vector<std::string> columns;
  Tensor values;  // N x D
  std::optional<std::vector<std::uint8_t>> labels;

  std::size_t length() const { return values.rows(); }
  std::size_t dims() const { return values.cols(); }
  std::vector<real> channel(std::size_t j) const;

  static TimeSeries univariate(std::string name, std::span<const real> values,
                               std::optional<std::vector<std::uint8_t>> labels = std::nullopt);
};

/// Mean and population standard deviation of one channel.
struct ChannelStats {
  real mean = 0;
  real stddev = 1;
};

/// Overlapping length-B windows of one univariate channel.
struct WindowBatch {
  std::size_t channel = 0;
  std::size_t window = 0;
  std::size_t stride = 1;
  std::vector<std::size_t> offsets;
  std::vector<real> series;

  std::size_t size() const { return offsets.size(); }
  std::span<const real> operator[](std::size_t i) const { return {series.data() + offsets[i], window}; }
};

enum class AnomalyKind { global, contextual, shapelet, seasonal, trend };

std::string to_string(AnomalyKind kind);
AnomalyKind parse_anomaly_kind(const std::string& s);

struct InjectionSpec {
  AnomalyKind kind = AnomalyKind::global;
  /// Fraction of points (point kinds) or of the series covered by segments.
  double ratio = 0.01;
  double magnitude = 3.0;
  std::uint64_t seed = 0;
  /// Segment length for shapelet/seasonal/trend.
  std::size_t segment_length = 50;
};

TimeSeries load_csv(const std::filesystem::path& path);
/// Parses CSV text: one header row, ',' delimiter, '.' decimals. A column
/// named `label` becomes the labels; every other column is a channel.
TimeSeries parse_csv(std::istream& in, const std::string& name);
void write_csv(const std::filesystem::path& path, const TimeSeries& ts);
void write_csv(std::ostream& out, const TimeSeries& ts);

std::vector<TimeSeries> channel_split(const TimeSeries& ts);

/// z-score with the given statistics, or with statistics of `series` when
/// none are given. A standard deviation below 1e-12 is replaced by 1.
std::pair<TimeSeries, ChannelStats> standardize(const TimeSeries& series,
                                                std::optional<ChannelStats> stats = std::nullopt);
ChannelStats channel_stats(std::span<const real> values);

/// Offsets 0, stride, 2*stride, ... with offset+B <= N, plus a final window
/// ending at N when the last regular one stops short of it.
WindowBatch windowize(const TimeSeries& series, std::size_t window, std::size_t stride, std::size_t channel = 0);

/// Corrupts a univariate series; labels are 1 exactly where a value changed
/// (OR-ed with any labels already present). Deterministic in spec.seed.
TimeSeries inject_anomalies(const TimeSeries& series, const InjectionSpec& spec);

/// Training-set contamination: ceil(ratio*N) points, half global and half
/// contextual. ratio == 0 returns the series unchanged with zero labels.
TimeSeries contaminate(const TimeSeries& series, double ratio, std::uint64_t seed, double magnitude = 3.0);

/// Leading `fraction` of rows and the trailing remainder.
std::pair<TimeSeries, TimeSeries> train_test_split(const TimeSeries& ts, double fraction);

/// sin(2*pi*t/period) plus N(0, noise^2) noise.
TimeSeries synthetic_sine(std::size_t length, double period, double noise, std::uint64_t seed);
TimeSeries synthetic_flat(std::size_t length, double level = 0.0);

/// ceil(ratio * n) with a small tolerance against representation error
/// (so 0.01 * 1000 counts 10, not 11).
std::size_t ceil_count(double ratio, std::size_t n);

/// Shortest round-trip decimal text for a real.
std::string format_real(double v);

}  // namespace edad
