#include "edad/encoder.hpp"

#include <cmath>

namespace edad {

void EncoderConfig::validate() const {
  if (d_model == 0 || heads == 0) throw ConfigError("encoder width and head count must be positive");
  if (d_model % heads != 0)
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by heads " + std::to_string(heads));
  if (!(eps > 0)) throw ConfigError("encoder eps must be positive");
}

std::string layer_prefix(const std::string& prefix, std::size_t layer) {
  return prefix + ".layer" + std::to_string(layer);
}

void init_encoder(ParamSet& params, const EncoderConfig& config, Rng& rng, const std::string& prefix) {
  config.validate();
  const std::size_t d = config.d_model, ff = config.ff_width();
  params[prefix + ".in_norm.gamma"] = Tensor::matrix(1, 1, 1);
  params[prefix + ".in_norm.beta"] = Tensor::matrix(1, 1, 0);
  params[prefix + ".embed"] = uniform_init(1, d, 1, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const auto p = layer_prefix(prefix, l);
    params[p + ".wq"] = uniform_init(d, d, d, rng);
    params[p + ".wk"] = uniform_init(d, d, d, rng);
    params[p + ".wv"] = uniform_init(d, d, d, rng);
    params[p + ".wmult"] = uniform_init(d, d, d, rng);
    params[p + ".norm1.gamma"] = Tensor::matrix(1, d, 1);
    params[p + ".norm1.beta"] = Tensor::matrix(1, d, 0);
    params[p + ".ff1"] = uniform_init(d, ff, d, rng);
    params[p + ".ff2"] = uniform_init(ff, d, ff, rng);
    params[p + ".norm2.gamma"] = Tensor::matrix(1, d, 1);
    params[p + ".norm2.beta"] = Tensor::matrix(1, d, 0);
  }
}

Var instance_norm(Var x, Var gamma, Var beta, real eps) {
  return add_row(mul_row(normalize_all(x, eps), gamma), beta);
}

namespace {

// Statistics over the whole matrix for the literal form, per row for the conventional one.
Var affine_norm(Var x, Var gamma, Var beta, real eps, bool per_row) {
  return add_row(mul_row(per_row ? normalize_rows(x, eps) : normalize_all(x, eps), gamma), beta);
}

}  // namespace

Var attention_layer(Var x, const BoundParams& params, const std::string& p, const EncoderConfig& config,
                    AttentionTrace* trace) {
  const std::size_t dh = config.head_width();
  const real inv_sqrt = real{1} / std::sqrt(static_cast<real>(dh));
  const Var q = matmul(x, params[p + ".wq"]);
  const Var k = matmul(x, params[p + ".wk"]);
  const Var v = matmul(x, params[p + ".wv"]);

  std::vector<Var> heads;
  heads.reserve(config.heads);
  for (std::size_t m = 0; m < config.heads; ++m) {
    const std::size_t lo = m * dh, hi = lo + dh;
    const Var logits = scale(matmul(slice_cols(q, lo, hi), transpose(slice_cols(k, lo, hi))), inv_sqrt);
    const Var s = softmax_rows(logits);
    if (trace) trace->maps.push_back(s.value());
    heads.push_back(matmul(s, slice_cols(v, lo, hi)));
  }
  const Var y1 = matmul(concat_cols(heads), params[p + ".wmult"]);

  const Var g1 = params[p + ".norm1.gamma"], b1 = params[p + ".norm1.beta"];
  const Var g2 = params[p + ".norm2.gamma"], b2 = params[p + ".norm2.beta"];
  const bool conv = config.conventional_addnorm;
  const Var y2 = conv ? affine_norm(x + y1, g1, b1, config.eps, true) : y1 + affine_norm(y1, g1, b1, config.eps, false);
  const Var y3 = matmul(relu(matmul(y2, params[p + ".ff1"])), params[p + ".ff2"]);
  return conv ? affine_norm(y2 + y3, g2, b2, config.eps, true) : y3 + affine_norm(y3, g2, b2, config.eps, false);
}

Var encode(Tape& tape, const BoundParams& params, std::span<const real> window, const EncoderConfig& config,
           const std::string& prefix, AttentionTrace* trace) {
  const Var x = tape.constant(Tensor::column(window));
  const Var h = instance_norm(x, params[prefix + ".in_norm.gamma"], params[prefix + ".in_norm.beta"], config.eps);
  Var y = matmul(h, params[prefix + ".embed"]);
  for (std::size_t l = 0; l < config.layers; ++l) y = attention_layer(y, params, layer_prefix(prefix, l), config, trace);
  return y;
}

}  // namespace edad
