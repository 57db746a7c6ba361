#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "edad/data.hpp"
#include "edad/params.hpp"

namespace edad {

/// Bottleneck autoencoder B -> h -> B (ReLU hidden layer, biases on both
/// layers) scored by per-timestamp squared reconstruction error.
struct BaselineConfig {
  std::size_t window = 100;
  /// 0 selects window / 4.
  std::size_t hidden = 0;
  real lr = 1e-3;
  std::size_t max_epochs = 10;
  std::size_t patience = 3;
  real min_improvement = 1e-4;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  std::size_t hidden_width() const { return hidden ? hidden : window / 4; }
  void validate() const;
};

struct BaselineModel {
  BaselineConfig config;
  ParamSet params;  // ae.w1 (B x h), ae.b1, ae.w2 (h x B), ae.b2

  static BaselineModel initialize(const BaselineConfig& config);
};

/// Rows of `windows` stacked into an n x B matrix on the tape, reconstructed.
Var reconstruct(Var windows, const BoundParams& params);

/// Mean over windows of the summed squared error.
Var reconstruction_loss(Var windows, const BoundParams& params);

struct BaselineResult {
  BaselineModel model;
  std::vector<double> epoch_loss;
};

BaselineResult train_reconstruction_baseline(std::span<const WindowBatch> data, const BaselineConfig& config);

/// Per-timestamp squared reconstruction error of one window.
std::vector<real> baseline_window_scores(const BaselineModel& model, std::span<const real> window);

}  // namespace edad
