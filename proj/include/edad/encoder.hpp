#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "edad/autodiff.hpp"
#include "edad/params.hpp"

namespace edad {

struct EncoderConfig {
  std::size_t d_model = 256;
  std::size_t layers = 3;
  std::size_t heads = 8;
  /// MLP hidden width; 0 selects 4 * d_model.
  std::size_t d_ff = 0;
  real eps = 1e-5;
  /// false: Y2 = Y1 + norm(Y1) as printed; true: Y2 = norm(X + Y1).
  bool conventional_addnorm = false;

  std::size_t ff_width() const { return d_ff ? d_ff : 4 * d_model; }
  std::size_t head_width() const { return d_model / heads; }
  void validate() const;
};

/// Adds encoder parameters under `prefix` (e.g. "encoder.layer0.wq").
void init_encoder(ParamSet& params, const EncoderConfig& config, Rng& rng, const std::string& prefix = "encoder");

/// Per-window normalization with learnable scalar gain/shift; x is B x 1.
Var instance_norm(Var x, Var gamma, Var beta, real eps);

/// Captures the softmax attention matrices of a forward pass.
struct AttentionTrace {
  std::vector<Tensor> maps;
};

/// One encoder block: multi-head self-attention, add&norm, ReLU MLP,
/// add&norm. `x` is B x d.
Var attention_layer(Var x, const BoundParams& params, const std::string& layer_prefix, const EncoderConfig& config,
                    AttentionTrace* trace = nullptr);

/// instance_norm -> linear embedding -> `layers` attention blocks; B x d.
Var encode(Tape& tape, const BoundParams& params, std::span<const real> window, const EncoderConfig& config,
           const std::string& prefix = "encoder", AttentionTrace* trace = nullptr);

std::string layer_prefix(const std::string& prefix, std::size_t layer);

}  // namespace edad
