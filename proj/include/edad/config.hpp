#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "edad/baseline.hpp"
#include "edad/data.hpp"
#include "edad/model.hpp"
#include "edad/scoring.hpp"
#include "edad/trainer.hpp"

namespace edad {

/// Everything a command needs, as a flat set of named keys.
struct RunConfig {
  // data
  std::string train_csv;
  std::string test_csv;
  /// Single CSV split into train/test by `split`.
  std::string input_csv;
  double split = 0.7;
  // synthetic fixture, used when no CSV is given
  std::size_t length = 10000;
  double period = 50;
  double noise = 0.1;
  // injection into the test split and contamination of the train split
  AnomalyKind kind = AnomalyKind::global;
  double inject_ratio = 0.02;
  double magnitude = 3;
  std::size_t segment_length = 50;
  double contamination = 0.05;
  // model
  std::size_t window = 100;
  std::size_t d_model = 256;
  std::size_t layers = 3;
  std::size_t heads = 8;
  std::size_t d_ff = 0;
  bool conventional_addnorm = false;
  CriticKind critic = CriticKind::separable;
  std::size_t critic_hidden = 0;
  std::size_t critic_embedding = 0;
  EstimatorKind estimator = EstimatorKind::infonce;
  bool standard_infonce = false;
  bool untie_wp = false;
  // training
  double lambda1 = 1, lambda2 = 1, lambda3 = 1;
  double lr = 5e-4;
  std::size_t max_epochs = 10;
  std::size_t patience = 3;
  double min_improvement = 1e-4;
  std::size_t batch_size = 64;
  double ema_decay = 0.99;
  std::size_t stride = 10;
  std::size_t threads = 0;
  // scoring and evaluation
  std::size_t score_stride = 10;
  double anomaly_ratio = 0.01;
  Aggregation overlap = Aggregation::mean;
  Aggregation channel_aggregation = Aggregation::mean;
  bool point_adjust = false;
  bool pool_train_scores = false;
  /// 0 selects window / 2.
  std::size_t max_buffer = 0;
  // baseline
  double baseline_lr = 1e-3;
  std::size_t baseline_hidden = 0;
  std::size_t baseline_epochs = 10;
  // sweep
  std::string grid = "contamination";
  std::string grid_ratios = "0.01,0.02,0.04,0.06,0.08,0.1,0.2";
  // run
  std::uint64_t seed = 0;
  std::string out = "out";

  void validate() const;

  ModelConfig model_config() const;
  TrainConfig train_config() const;
  BaselineConfig baseline_config() const;
  ScoringOptions scoring_options() const;
  std::size_t buffer_width() const { return max_buffer ? max_buffer : window / 2; }
  std::vector<double> ratios() const;
};

/// Every key in canonical order.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form; unknown keys and unparsable values throw ConfigError.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

/// Flat "key = value" lines; '#' starts a comment.
void apply_config_text(RunConfig& config, std::istream& in, const std::string& source = "config");
void load_config_file(RunConfig& config, const std::filesystem::path& path);
void write_config(std::ostream& out, const RunConfig& config);

}  // namespace edad
