#pragma once

#include <cstdint>
#include <span>

#include "edad/decomposer.hpp"
#include "edad/encoder.hpp"
#include "edad/mi.hpp"
#include "edad/params.hpp"

namespace edad {

struct ModelConfig {
  std::size_t window = 100;
  EncoderConfig encoder;
  CriticConfig critic;
  EstimatorConfig estimator;
  bool untie_wp = false;

  void validate() const;
};

/// Encoder, decomposer projection and critic parameters.
struct Model {
  ModelConfig config;
  ParamSet params;

  static Model initialize(const ModelConfig& config, std::uint64_t seed);

  /// The "encoder.*" subset (what the teacher mirrors).
  ParamSet encoder_params() const;
  const std::string& stable_projection_name() const;
};

}  // namespace edad
