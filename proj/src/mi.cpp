#include "edad/mi.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

namespace edad {

namespace {

std::atomic<std::uint64_t> g_clamp_events{0};

void count_clamps(const Tensor& f, real limit) {
  std::uint64_t n = 0;
  for (auto v : f.values())
    if (v > limit || v < -limit) ++n;
  if (n) g_clamp_events.fetch_add(n, std::memory_order_relaxed);
}

real softplus_value(real x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Tensor diagonal_mask(std::size_t n, bool diagonal) {
  Tensor m = Tensor::matrix(n, n, diagonal ? 0 : 1);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = diagonal ? 1 : 0;
  return m;
}

}  // namespace

std::string to_string(CriticKind kind) {
  switch (kind) {
    case CriticKind::separable: return "separable";
    case CriticKind::bilinear: return "bilinear";
    case CriticKind::concatenated: return "concatenated";
  }
  return "?";
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::infonce: return "infonce";
    case EstimatorKind::nwj: return "nwj";
    case EstimatorKind::mine: return "mine";
    case EstimatorKind::jsd: return "jsd";
  }
  return "?";
}

CriticKind parse_critic_kind(const std::string& s) {
  for (auto k : {CriticKind::separable, CriticKind::bilinear, CriticKind::concatenated})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown critic '" + s + "'");
}

EstimatorKind parse_estimator_kind(const std::string& s) {
  for (auto k : {EstimatorKind::infonce, EstimatorKind::nwj, EstimatorKind::mine, EstimatorKind::jsd})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown estimator '" + s + "'");
}

void MineAverage::observe(real partition, real decay) {
  value = initialized ? decay * value + (1 - decay) * partition : partition;
  initialized = true;
}

std::uint64_t clamp_event_count() { return g_clamp_events.load(); }
void reset_clamp_events() { g_clamp_events.store(0); }

void init_critic(ParamSet& params, const CriticConfig& config, std::size_t width_a, std::size_t width_z, Rng& rng,
                 const std::string& prefix) {
  const std::size_t hidden = config.hidden ? config.hidden : width_a;
  switch (config.kind) {
    case CriticKind::separable: {
      const std::size_t emb = config.embedding ? config.embedding : std::max<std::size_t>(1, width_a / 2);
      params[prefix + ".in_a.w"] = uniform_init(width_a, hidden, width_a, rng);
      params[prefix + ".in_a.b"] = Tensor::matrix(1, hidden, 0);
      params[prefix + ".in_z.w"] = uniform_init(width_z, hidden, width_z, rng);
      params[prefix + ".in_z.b"] = Tensor::matrix(1, hidden, 0);
      params[prefix + ".out.w"] = uniform_init(hidden, emb, hidden, rng);
      params[prefix + ".out.b"] = Tensor::matrix(1, emb, 0);
      break;
    }
    case CriticKind::bilinear:
      params[prefix + ".w"] = uniform_init(width_a, width_z, width_a, rng);
      break;
    case CriticKind::concatenated:
      params[prefix + ".in_a.w"] = uniform_init(width_a, hidden, width_a + width_z, rng);
      params[prefix + ".in_z.w"] = uniform_init(width_z, hidden, width_a + width_z, rng);
      params[prefix + ".in.b"] = Tensor::matrix(1, hidden, 0);
      params[prefix + ".out.w"] = uniform_init(hidden, 1, hidden, rng);
      params[prefix + ".out.b"] = Tensor::matrix(1, 1, 0);
      break;
  }
}

Var critic_scores(Var a, Var z, const BoundParams& params, const CriticConfig& config, const std::string& prefix) {
  if (a.rows() != z.rows()) throw DimensionError("critic_scores: A and Z need the same number of rows");
  switch (config.kind) {
    case CriticKind::separable: {
      auto embed = [&](Var x, const std::string& in) {
        const Var h = relu(add_row(matmul(x, params[prefix + in + ".w"]), params[prefix + in + ".b"]));
        return add_row(matmul(h, params[prefix + ".out.w"]), params[prefix + ".out.b"]);
      };
      return matmul(embed(a, ".in_a"), transpose(embed(z, ".in_z")));
    }
    case CriticKind::bilinear:
      return matmul(matmul(a, params[prefix + ".w"]), transpose(z));
    case CriticKind::concatenated: {
      const std::size_t n = a.rows();
      const Var pa = matmul(a, params[prefix + ".in_a.w"]);
      const Var pz = matmul(z, params[prefix + ".in_z.w"]);
      const Var h = relu(add_row(pairwise_sum(pa, pz), params[prefix + ".in.b"]));
      const Var out = add_row(matmul(h, params[prefix + ".out.w"]), params[prefix + ".out.b"]);
      return reshape(out, n, n);
    }
  }
  throw ContractError("unhandled critic kind");
}

MiEstimate estimate(const EstimatorConfig& config, Var scores, const MineAverage& mine) {
  const std::size_t n = scores.rows();
  if (scores.cols() != n || n < 2) throw DimensionError("estimate needs a square score matrix with B >= 2");
  Tape& tape = *scores.tape();
  count_clamps(scores.value(), config.clamp);
  const Var f = clamp(scores, -config.clamp, config.clamp);
  const Var diag = tape.constant(diagonal_mask(n, true));
  const Var off = tape.constant(diagonal_mask(n, false));
  const real inv_n = real{1} / static_cast<real>(n);
  const real inv_off = real{1} / static_cast<real>(n * (n - 1));

  const Var joint = scale(sum(mul(f, diag)), inv_n);
  const Var exp_f = exp(f);
  const Var partition = scale(sum(mul(exp_f, off)), inv_off);
  const real partition_value = partition.item();

  switch (config.kind) {
    case EstimatorKind::infonce:
      if (config.standard_infonce) {
        const Var log_mean = add_scalar(log(sum_rows(exp_f)), -std::log(static_cast<real>(n)));
        return {joint - mean(log_mean), partition_value};
      }
      return {joint - partition, partition_value};
    case EstimatorKind::nwj:
      return {joint - scale(partition, std::exp(real{-1})), partition_value};
    case EstimatorKind::mine: {
      // Value: joint - log(denominator). Gradient of the partition term is
      // grad(partition) / denominator.
      const real denom = mine.denominator(partition_value);
      const Var term = add_scalar(scale(partition, 1 / denom), std::log(denom) - partition_value / denom);
      return {joint - term, partition_value};
    }
    case EstimatorKind::jsd: {
      const Var pos = scale(sum(mul(softplus(scale(f, -1)), diag)), -inv_n);
      const Var neg = scale(sum(mul(softplus(f), off)), inv_off);
      return {pos - neg, partition_value};
    }
  }
  throw ContractError("unhandled estimator kind");
}

std::vector<real> pointwise_scores(const EstimatorConfig& config, const Tensor& scores) {
  const std::size_t n = scores.rows();
  if (scores.cols() != n || n < 2) throw DimensionError("pointwise_scores needs a square score matrix with B >= 2");
  scores.require_finite("critic scores");
  count_clamps(scores, config.clamp);
  auto at = [&](std::size_t i, std::size_t j) { return std::clamp(scores(i, j), -config.clamp, config.clamp); };
  const real inv_off = real{1} / static_cast<real>(n - 1);

  std::vector<real> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    real exp_off = 0, sp_off = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      exp_off += std::exp(at(i, j));
      sp_off += softplus_value(at(i, j));
    }
    const real fii = at(i, i);
    switch (config.kind) {
      case EstimatorKind::infonce:
        c[i] = config.standard_infonce ? fii - std::log((exp_off + std::exp(fii)) / static_cast<real>(n))
                                       : fii - exp_off * inv_off;
        break;
      case EstimatorKind::nwj: c[i] = fii - std::exp(real{-1}) * exp_off * inv_off; break;
      case EstimatorKind::mine: c[i] = fii - std::log(exp_off * inv_off); break;
      case EstimatorKind::jsd: c[i] = -softplus_value(-fii) - sp_off * inv_off; break;
    }
  }
  return c;
}

}  // namespace edad
