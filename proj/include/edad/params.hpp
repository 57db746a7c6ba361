#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "edad/autodiff.hpp"
#include "edad/rng.hpp"
#include "edad/tensor.hpp"

namespace edad {

/// Named parameters, ordered by name so iteration (and serialization) is
/// deterministic.
using ParamSet = std::map<std::string, Tensor>;

/// Weight matrix drawn from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

/// A ParamSet placed on a tape, either as tracked variables or as constants.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamSet& params, bool trainable = true);

  Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.contains(name); }
  const std::map<std::string, Var>& vars() const { return vars_; }

 private:
  std::map<std::string, Var> vars_;
};

/// d loss / d p for every bound parameter; parameters the loss does not
/// reach get zero tensors.
ParamSet gradient(Var loss, const BoundParams& params);

/// Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8.
struct AdamState {
  static constexpr real beta1 = 0.9;
  static constexpr real beta2 = 0.999;
  static constexpr real epsilon = 1e-8;

  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t step = 0;
};

/// One Adam update of `params` in place. Every parameter needs a gradient
/// under the same name (ContractError otherwise).
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, real lr);

void add_into(ParamSet& acc, const ParamSet& other);
void scale_all(ParamSet& params, real s);
bool all_finite(const ParamSet& params);

/// Error while reading or writing a checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[] = "EDADCKPT1";

/// Binary layout: magic, then per tensor (name order): u64 name length,
/// UTF-8 name, u64 rank, u64 extents, f64 values; all little-endian.
std::string encode_checkpoint(const ParamSet& params);
ParamSet decode_checkpoint(const std::string& bytes);
void write_checkpoint(const std::filesystem::path& path, const ParamSet& params);
ParamSet read_checkpoint(const std::filesystem::path& path);

}  // namespace edad
