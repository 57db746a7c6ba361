#include "edad/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "edad/rng.hpp"

namespace edad {

namespace {

constexpr real kMinStd = 1e-12;
constexpr std::size_t kContextWidth = 32;

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

void require_univariate(const TimeSeries& s, const char* op) {
  if (s.dims() != 1) throw ConfigError(std::string(op) + " needs a univariate series, got D=" + std::to_string(s.dims()));
}

void validate(const InjectionSpec& spec) {
  if (!(spec.ratio > 0 && spec.ratio <= 0.5))
    throw ConfigError("injection ratio must lie in (0, 0.5], got " + format_real(spec.ratio));
  if (!(spec.magnitude > 0)) throw ConfigError("injection magnitude must be positive");
  if (spec.segment_length == 0) throw ConfigError("segment length must be positive");
}

real safe_std(real s, real fallback) { return s < kMinStd ? fallback : s; }

ChannelStats local_stats(std::span<const real> x, std::size_t t) {
  const std::size_t half = kContextWidth / 2;
  const std::size_t lo = t >= half ? t - half : 0;
  const std::size_t hi = std::min(x.size(), lo + kContextWidth);
  return channel_stats(x.subspan(lo, hi - lo));
}

/// Writes `target` into x[t], or `alternate` if `target` would leave the value unchanged.
void set_changed(std::vector<real>& x, std::size_t t, real target, real alternate) {
  x[t] = (target != x[t]) ? target : alternate;
}

void corrupt_global(std::vector<real>& x, std::span<const real> original, std::size_t t, double magnitude, Rng& rng) {
  const auto g = channel_stats(original);
  const real sigma = safe_std(g.stddev, 1);
  const real sign = rng.uniform() < 0.5 ? -1 : 1;
  set_changed(x, t, g.mean + sign * magnitude * sigma, g.mean - sign * magnitude * sigma);
}

void corrupt_contextual(std::vector<real>& x, std::span<const real> original, std::size_t t, double magnitude,
                        Rng& rng) {
  const auto g = channel_stats(original);
  const auto local = local_stats(original, t);
  const real sigma = safe_std(local.stddev, safe_std(g.stddev, 1));
  const real sign = rng.uniform() < 0.5 ? -1 : 1;
  set_changed(x, t, local.mean + sign * magnitude * sigma, local.mean - sign * magnitude * sigma);
}

std::vector<std::size_t> segment_starts(std::size_t n, const InjectionSpec& spec, Rng& rng) {
  const std::size_t len = spec.segment_length;
  if (len > n) throw ConfigError("segment length " + std::to_string(len) + " exceeds series length");
  const std::size_t count = std::max<std::size_t>(1, ceil_count(spec.ratio * static_cast<double>(n) / len, 1));
  const std::size_t slots = n / len;
  if (count > slots) throw ConfigError("ratio needs " + std::to_string(count) + " segments but only " +
                                       std::to_string(slots) + " fit");
  const std::size_t origin = rng.below(n - slots * len + 1);
  auto chosen = rng.sample_without_replacement(slots, count);
  std::sort(chosen.begin(), chosen.end());
  for (auto& c : chosen) c = origin + c * len;
  return chosen;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::size_t ceil_count(double ratio, std::size_t n) {
  const double x = ratio * static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

std::vector<real> TimeSeries::channel(std::size_t j) const {
  if (j >= dims()) throw DimensionError("channel index out of range");
  std::vector<real> out(length());
  for (std::size_t i = 0; i < length(); ++i) out[i] = values(i, j);
  return out;
}

TimeSeries TimeSeries::univariate(std::string name, std::span<const real> values,
                                  std::optional<std::vector<std::uint8_t>> labels) {
  if (values.empty()) throw DimensionError("time series needs at least one observation");
  if (labels && labels->size() != values.size()) throw DimensionError("label length differs from series length");
  return TimeSeries{std::move(name), {"value"}, Tensor::column(values), std::move(labels)};
}

std::string to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::global: return "global";
    case AnomalyKind::contextual: return "contextual";
    case AnomalyKind::shapelet: return "shapelet";
    case AnomalyKind::seasonal: return "seasonal";
    case AnomalyKind::trend: return "trend";
  }
  return "?";
}

AnomalyKind parse_anomaly_kind(const std::string& s) {
  for (auto k : {AnomalyKind::global, AnomalyKind::contextual, AnomalyKind::shapelet, AnomalyKind::seasonal,
                 AnomalyKind::trend})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown anomaly kind '" + s + "'");
}

TimeSeries parse_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(name + ": empty file");
  const auto header = split_line(line);
  std::optional<std::size_t> label_col;
  std::vector<std::string> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") {
      if (label_col) throw IngestionError(name + ": duplicate label column");
      label_col = c;
    } else {
      columns.push_back(header[c]);
    }
  }
  if (columns.empty()) throw IngestionError(name + ": no value columns");

  std::vector<real> data;
  std::vector<std::uint8_t> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw IngestionError(name + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0;
      if (!parse_number(cells[c], v))
        throw IngestionError(name + ": row " + std::to_string(row) + ", column '" + header[c] +
                             "': non-numeric value '" + cells[c] + "'");
      if (label_col && c == *label_col) {
        if (v != 0.0 && v != 1.0)
          throw IngestionError(name + ": row " + std::to_string(row) + ", column 'label': expected 0 or 1");
        labels.push_back(static_cast<std::uint8_t>(v));
      } else {
        data.push_back(static_cast<real>(v));
      }
    }
  }
  if (data.empty()) throw IngestionError(name + ": no data rows");
  const std::size_t d = columns.size(), n = data.size() / d;
  TimeSeries ts{name, std::move(columns), Tensor({n, d}, std::move(data)), std::nullopt};
  if (label_col) ts.labels = std::move(labels);
  return ts;
}

TimeSeries load_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IngestionError("cannot open " + path.string());
  return parse_csv(f, path.stem().string());
}

void write_csv(std::ostream& out, const TimeSeries& ts) {
  for (std::size_t j = 0; j < ts.dims(); ++j) out << (j ? "," : "") << ts.columns[j];
  if (ts.labels) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < ts.length(); ++i) {
    for (std::size_t j = 0; j < ts.dims(); ++j) out << (j ? "," : "") << format_real(ts.values(i, j));
    if (ts.labels) out << ',' << int((*ts.labels)[i]);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const TimeSeries& ts) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IngestionError("cannot open " + path.string() + " for writing");
  write_csv(f, ts);
}

std::vector<TimeSeries> channel_split(const TimeSeries& ts) {
  std::vector<TimeSeries> out;
  out.reserve(ts.dims());
  for (std::size_t j = 0; j < ts.dims(); ++j) {
    const auto col = ts.channel(j);
    auto s = TimeSeries::univariate(ts.name + "/" + ts.columns[j], col, ts.labels);
    s.columns = {ts.columns[j]};
    out.push_back(std::move(s));
  }
  return out;
}

ChannelStats channel_stats(std::span<const real> values) {
  if (values.empty()) return {};
  real mean = 0;
  for (auto v : values) mean += v;
  mean /= static_cast<real>(values.size());
  real var = 0;
  for (auto v : values) var += (v - mean) * (v - mean);
  var /= static_cast<real>(values.size());
  return {mean, std::sqrt(var)};
}

std::pair<TimeSeries, ChannelStats> standardize(const TimeSeries& series, std::optional<ChannelStats> stats) {
  require_univariate(series, "standardize");
  const auto x = series.channel(0);
  ChannelStats s = stats ? *stats : channel_stats(x);
  s.stddev = safe_std(s.stddev, 1);
  TimeSeries out = series;
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = (x[i] - s.mean) / s.stddev;
  return {std::move(out), s};
}

WindowBatch windowize(const TimeSeries& series, std::size_t window, std::size_t stride, std::size_t channel) {
  require_univariate(series, "windowize");
  const std::size_t n = series.length();
  if (window == 0 || window > n)
    throw ConfigError("window length " + std::to_string(window) + " must lie in [1, N=" + std::to_string(n) + "]");
  if (stride == 0) throw ConfigError("stride must be positive");
  WindowBatch batch{channel, window, stride, {}, series.channel(0)};
  std::size_t off = 0;
  for (; off + window <= n; off += stride) batch.offsets.push_back(off);
  if (batch.offsets.back() + window < n) batch.offsets.push_back(n - window);
  return batch;
}

TimeSeries inject_anomalies(const TimeSeries& series, const InjectionSpec& spec) {
  require_univariate(series, "inject_anomalies");
  validate(spec);
  const auto original = series.channel(0);
  const std::size_t n = original.size();
  std::vector<real> x = original;
  Rng rng = Rng(spec.seed).split("inject/" + to_string(spec.kind));

  switch (spec.kind) {
    case AnomalyKind::global:
    case AnomalyKind::contextual: {
      const auto points = rng.sample_without_replacement(n, ceil_count(spec.ratio, n));
      for (auto t : points) {
        if (spec.kind == AnomalyKind::global)
          corrupt_global(x, original, t, spec.magnitude, rng);
        else
          corrupt_contextual(x, original, t, spec.magnitude, rng);
      }
      break;
    }
    case AnomalyKind::shapelet:
    case AnomalyKind::seasonal:
    case AnomalyKind::trend: {
      const std::size_t len = spec.segment_length;
      const real sigma = safe_std(channel_stats(original).stddev, 1);
      const std::size_t ramp = (len + 1) / 2;
      for (auto s : segment_starts(n, spec, rng)) {
        const std::span<const real> seg(original.data() + s, len);
        if (spec.kind == AnomalyKind::shapelet) {
          const real level = channel_stats(seg).mean;
          for (std::size_t k = 0; k < len; ++k) x[s + k] = level;
        } else if (spec.kind == AnomalyKind::seasonal) {
          for (std::size_t k = 0; k < len; ++k) x[s + k] = seg[(2 * k) % len];
        } else {
          for (std::size_t k = 0; k < len; ++k)
            x[s + k] = seg[k] + static_cast<real>(spec.magnitude) * sigma *
                                    std::min<real>(1, static_cast<real>(k + 1) / static_cast<real>(ramp));
        }
      }
      break;
    }
  }

  std::vector<std::uint8_t> labels = series.labels.value_or(std::vector<std::uint8_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] != original[i]) labels[i] = 1;
  auto out = TimeSeries::univariate(series.name, x, std::move(labels));
  out.columns = series.columns;
  return out;
}

TimeSeries contaminate(const TimeSeries& series, double ratio, std::uint64_t seed, double magnitude) {
  require_univariate(series, "contaminate");
  const std::size_t n = series.length();
  std::vector<std::uint8_t> labels = series.labels.value_or(std::vector<std::uint8_t>(n, 0));
  if (ratio == 0.0) {
    TimeSeries out = series;
    out.labels = std::move(labels);
    return out;
  }
  validate(InjectionSpec{AnomalyKind::global, ratio, magnitude, seed, 1});
  const auto original = series.channel(0);
  std::vector<real> x = original;
  Rng rng = Rng(seed).split("contaminate");
  const std::size_t k = ceil_count(ratio, n);
  const auto points = rng.sample_without_replacement(n, k);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i < (k + 1) / 2)
      corrupt_global(x, original, points[i], magnitude, rng);
    else
      corrupt_contextual(x, original, points[i], magnitude, rng);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] != original[i]) labels[i] = 1;
  auto out = TimeSeries::univariate(series.name, x, std::move(labels));
  out.columns = series.columns;
  return out;
}

std::pair<TimeSeries, TimeSeries> train_test_split(const TimeSeries& ts, double fraction) {
  if (!(fraction > 0 && fraction < 1)) throw ConfigError("split fraction must lie in (0, 1)");
  const std::size_t n = ts.length();
  const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (cut == 0 || cut == n) throw ConfigError("split leaves an empty part");
  auto part = [&](std::size_t lo, std::size_t hi, const std::string& suffix) {
    const std::size_t d = ts.dims();
    std::vector<real> data(ts.values.data() + lo * d, ts.values.data() + hi * d);
    TimeSeries s{ts.name + suffix, ts.columns, Tensor({hi - lo, d}, std::move(data)), std::nullopt};
    if (ts.labels) s.labels = std::vector<std::uint8_t>(ts.labels->begin() + lo, ts.labels->begin() + hi);
    return s;
  };
  return {part(0, cut, "/train"), part(cut, n, "/test")};
}

TimeSeries synthetic_sine(std::size_t length, double period, double noise, std::uint64_t seed) {
  if (length == 0 || !(period > 0)) throw ConfigError("sine fixture needs positive length and period");
  Rng rng = Rng(seed).split("sine");
  std::vector<real> x(length);
  for (std::size_t t = 0; t < length; ++t)
    x[t] = static_cast<real>(std::sin(2 * std::numbers::pi * static_cast<double>(t) / period) + noise * rng.normal());
  return TimeSeries::univariate("sine", x);
}

TimeSeries synthetic_flat(std::size_t length, double level) {
  std::vector<real> x(length, static_cast<real>(level));
  return TimeSeries::univariate("flat", x);
}

}  // namespace edad
