#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "edad/baseline.hpp"
#include "edad/config.hpp"
#include "edad/metrics.hpp"
#include "edad/scoring.hpp"
#include "edad/trainer.hpp"

namespace edad {

struct Dataset {
  /// Standardized univariate channels (test uses the train statistics).
  std::vector<TimeSeries> train;
  std::vector<TimeSeries> test;
  std::optional<std::vector<std::uint8_t>> train_labels;
  std::optional<std::vector<std::uint8_t>> test_labels;
};

/// The synthetic sine series for `config`, before splitting.
TimeSeries synthetic_fixture(const RunConfig& config);

/// Loads or synthesizes the data. The synthetic fixture is split, the train
/// part contaminated and the test part injected; CSV data is used as given.
Dataset prepare_dataset(const RunConfig& config);

std::vector<WindowBatch> training_windows(const std::vector<TimeSeries>& channels, std::size_t window,
                                          std::size_t stride);

struct Detection {
  AnomalyScoreSeries scores;
  std::vector<std::uint8_t> predictions;
  /// Present when the test labels contain both classes.
  std::optional<EvalReport> report;
};

/// Scores the test split, thresholds (optionally pooled with train scores),
/// applies point adjustment if enabled and evaluates against labels.
Detection detect(const RunConfig& config, const WindowScorer& scorer, const Dataset& data);
Detection detect(const RunConfig& config, const Model& model, const Dataset& data);
Detection detect(const RunConfig& config, const BaselineModel& model, const Dataset& data);

struct CellResult {
  TrainResult training;
  Detection edad;
  std::optional<BaselineResult> baseline_training;
  std::optional<Detection> baseline;
};

/// Trains EDAD (and the baseline when asked) on one config and evaluates both.
CellResult run_cell(const RunConfig& config, bool with_baseline);

/// Writes `<command>_config.txt` (or `config.txt` without a command) into `dir`.
void write_config_snapshot(const std::filesystem::path& dir, const RunConfig& config,
                           const std::string& command = {});

}  // namespace edad
