#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "edad/autodiff.hpp"
#include "edad/params.hpp"

namespace edad {

enum class CriticKind { separable, bilinear, concatenated };
enum class EstimatorKind { infonce, nwj, mine, jsd };

std::string to_string(CriticKind kind);
std::string to_string(EstimatorKind kind);
CriticKind parse_critic_kind(const std::string& s);
EstimatorKind parse_estimator_kind(const std::string& s);

/// Critic f(a, z) scoring every (row of A, row of Z) pair.
///
/// separable:    f = phi_a(a)^T phi_z(z) with phi_x(x) = W_out relu(W_x x + b_x) + b_out;
///               the input layer adapts each argument's width, the output layer is shared.
/// bilinear:     f = a^T W z.
/// concatenated: f = w^T relu(W_a a + W_z z + b) + c, i.e. a two-layer net on [a, z].
struct CriticConfig {
  CriticKind kind = CriticKind::separable;
  /// Hidden width; 0 selects the width of the first argument.
  std::size_t hidden = 0;
  /// Separable embedding width; 0 selects half the first argument's width.
  std::size_t embedding = 0;
};

void init_critic(ParamSet& params, const CriticConfig& config, std::size_t width_a, std::size_t width_z, Rng& rng,
                 const std::string& prefix = "critic");

/// B x B matrix F with F[i,j] = f(A_i, Z_j): the diagonal holds joint
/// samples, off-diagonal entries the within-window negatives.
Var critic_scores(Var a, Var z, const BoundParams& params, const CriticConfig& config,
                  const std::string& prefix = "critic");

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::infonce;
  /// InfoNCE as mean_i(F_ii - log mean_j exp F_ij) instead of the
  /// E[f] - E[e^f] form.
  bool standard_infonce = false;
  /// Scores are clamped to [-clamp, clamp] before exponentiation.
  real clamp = 50;
  real mine_decay = 0.99;
};

/// Running average of the MINE partition term E_marg[e^f].
struct MineAverage {
  real value = 1;
  bool initialized = false;

  /// Denominator to use for a batch whose own partition is `current`.
  real denominator(real current) const { return initialized ? value : current; }
  void observe(real partition, real decay);
};

/// Number of score entries clipped by the exponent clamp since the last reset.
std::uint64_t clamp_event_count();
void reset_clamp_events();

struct MiEstimate {
  Var value;
  /// Mean of exp(F) over off-diagonal entries (what MINE averages).
  real partition = 0;
};

/// Variational MI lower bound from a B x B critic matrix (B >= 2). For MINE
/// the gradient uses the running average as denominator; the caller updates
/// `mine` with the returned partition.
MiEstimate estimate(const EstimatorConfig& config, Var scores, const MineAverage& mine = {});

/// Per-timestamp contributions c_i whose mean equals the estimate (exactly
/// for InfoNCE, standard InfoNCE, NWJ and JSD). MINE uses the row's own
/// partition: c_i = F_ii - log mean_{j != i} exp F_ij. Anomaly score = -c_i.
std::vector<real> pointwise_scores(const EstimatorConfig& config, const Tensor& scores);

}  // namespace edad
