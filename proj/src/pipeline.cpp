#include "edad/pipeline.hpp"

#include <fstream>

namespace edad {

namespace {

std::vector<TimeSeries> univariate_channels(const TimeSeries& ts) {
  return ts.dims() == 1 ? std::vector<TimeSeries>{ts} : channel_split(ts);
}

std::uint64_t derived_seed(std::uint64_t seed, const char* tag) { return Rng(seed).split(tag).next_u64(); }

Dataset standardize_split(const TimeSeries& train, const TimeSeries& test) {
  if (train.dims() != test.dims()) throw IngestionError("train and test files have different channel counts");
  Dataset d;
  d.train_labels = train.labels;
  d.test_labels = test.labels;
  const auto tr = univariate_channels(train), te = univariate_channels(test);
  for (std::size_t c = 0; c < tr.size(); ++c) {
    auto [s_train, stats] = standardize(tr[c]);
    d.train.push_back(std::move(s_train));
    d.test.push_back(standardize(te[c], stats).first);
  }
  return d;
}

}  // namespace

TimeSeries synthetic_fixture(const RunConfig& config) {
  return synthetic_sine(config.length, config.period, config.noise, derived_seed(config.seed, "data/series"));
}

Dataset prepare_dataset(const RunConfig& config) {
  if (!config.train_csv.empty() || !config.test_csv.empty()) {
    if (config.train_csv.empty() || config.test_csv.empty())
      throw ConfigError("train_csv and test_csv must be given together");
    return standardize_split(load_csv(config.train_csv), load_csv(config.test_csv));
  }
  if (!config.input_csv.empty()) {
    const auto [train, test] = train_test_split(load_csv(config.input_csv), config.split);
    return standardize_split(train, test);
  }
  auto [train, test] = train_test_split(synthetic_fixture(config), config.split);
  train = contaminate(train, config.contamination, derived_seed(config.seed, "data/contaminate"), config.magnitude);
  InjectionSpec spec{config.kind, config.inject_ratio, config.magnitude, derived_seed(config.seed, "data/inject"),
                     config.segment_length};
  test = config.inject_ratio > 0 ? inject_anomalies(test, spec)
                                 : TimeSeries::univariate(test.name, test.channel(0),
                                                          std::vector<std::uint8_t>(test.length(), 0));
  return standardize_split(train, test);
}

std::vector<WindowBatch> training_windows(const std::vector<TimeSeries>& channels, std::size_t window,
                                          std::size_t stride) {
  std::vector<WindowBatch> out;
  for (std::size_t c = 0; c < channels.size(); ++c) out.push_back(windowize(channels[c], window, stride, c));
  return out;
}

Detection detect(const RunConfig& config, const WindowScorer& scorer, const Dataset& data) {
  const auto options = config.scoring_options();
  Detection d;
  d.scores = score_series(scorer, config.window, data.test, options);
  if (config.pool_train_scores) {
    const auto train_scores = score_series(scorer, config.window, data.train, options);
    d.predictions = threshold_pooled(d.scores.scores, train_scores.scores, config.anomaly_ratio);
  } else {
    d.predictions = threshold(d.scores.scores, config.anomaly_ratio);
  }
  if (data.test_labels) {
    if (config.point_adjust) d.predictions = point_adjust(d.predictions, *data.test_labels);
    bool pos = false, neg = false;
    for (auto l : *data.test_labels) (l ? pos : neg) = true;
    if (pos && neg) d.report = evaluate(d.scores.scores, d.predictions, *data.test_labels, config.buffer_width());
  }
  return d;
}

Detection detect(const RunConfig& config, const Model& model, const Dataset& data) {
  if (!all_finite(model.params)) throw ScoringError("model parameters contain non-finite values");
  return detect(config, [&](std::span<const real> w) { return score_window(model, w); }, data);
}

Detection detect(const RunConfig& config, const BaselineModel& model, const Dataset& data) {
  return detect(config, [&](std::span<const real> w) { return baseline_window_scores(model, w); }, data);
}

CellResult run_cell(const RunConfig& config, bool with_baseline) {
  config.validate();
  const Dataset data = prepare_dataset(config);
  const auto windows = training_windows(data.train, config.window, config.stride);
  CellResult r;
  r.training = train(windows, config.model_config(), config.train_config());
  r.edad = detect(config, r.training.best.model, data);
  if (with_baseline) {
    r.baseline_training = train_reconstruction_baseline(windows, config.baseline_config());
    r.baseline = detect(config, r.baseline_training->model, data);
  }
  return r;
}

void write_config_snapshot(const std::filesystem::path& dir, const RunConfig& config, const std::string& command) {
  std::filesystem::create_directories(dir);
  const auto path = dir / (command.empty() ? std::string("config.txt") : command + "_config.txt");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_config(out, config);
}

}  // namespace edad
