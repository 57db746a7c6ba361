#include "edad/model.hpp"

#include "edad/rng.hpp"

namespace edad {

void ModelConfig::validate() const {
  encoder.validate();
  if (encoder.d_model % 2 != 0) throw ConfigError("d_model must be even for the stable/auxiliary split");
  if (window < 2) throw ConfigError("window length must be at least 2");
  if (!(estimator.clamp > 0)) throw ConfigError("score clamp must be positive");
  if (!(estimator.mine_decay > 0 && estimator.mine_decay < 1)) throw ConfigError("MINE decay must lie in (0, 1)");
}

Model Model::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m{config, {}};
  const Rng root(seed);
  Rng enc = root.split("init/encoder");
  Rng dec = root.split("init/decomposer");
  Rng cri = root.split("init/critic");
  init_encoder(m.params, config.encoder, enc);
  init_decomposer(m.params, config.encoder.d_model, config.untie_wp, dec);
  init_critic(m.params, config.critic, config.encoder.d_model, config.encoder.d_model / 2, cri);
  return m;
}

ParamSet Model::encoder_params() const {
  ParamSet out;
  for (const auto& [name, t] : params)
    if (name.starts_with("encoder.")) out.emplace(name, t);
  return out;
}

const std::string& Model::stable_projection_name() const {
  static const std::string tied = "decomposer.wp", untied = "decomposer.wp_sta";
  return config.untie_wp ? untied : tied;
}

}  // namespace edad
