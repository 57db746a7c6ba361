#include "edad/decomposer.hpp"

#include <string>

namespace edad {

void init_decomposer(ParamSet& params, std::size_t d_model, bool untie, Rng& rng) {
  params["decomposer.wp"] = uniform_init(d_model, d_model, d_model, rng);
  if (untie) params["decomposer.wp_sta"] = uniform_init(d_model, d_model, d_model, rng);
}

std::pair<Var, Var> split(Var y) {
  const std::size_t d = y.cols();
  if (d % 2 != 0) throw ConfigError("latent width " + std::to_string(d) + " is odd; cannot split in halves");
  return {slice_cols(y, 0, d / 2), slice_cols(y, d / 2, d)};
}

void require_permutation(std::span<const std::size_t> perm, std::size_t n) {
  if (perm.size() != n) throw ContractError("permutation has length " + std::to_string(perm.size()) +
                                            ", expected " + std::to_string(n));
  std::vector<char> seen(n, 0);
  for (auto p : perm) {
    if (p >= n || seen[p]) throw ContractError("not a permutation of 0.." + std::to_string(n - 1));
    seen[p] = 1;
  }
}

Var shuffle(Var x, std::span<const std::size_t> perm) {
  require_permutation(perm, x.rows());
  return gather_rows(x, perm);
}

Var aux_branch(Var y_sta, Var y_aux, std::span<const std::size_t> perm, Var wp) {
  const Var parts[] = {y_sta, shuffle(y_aux, perm)};
  return matmul(concat_cols(parts), wp);
}

Var aux_loss(Var y, Var y_hat_aux, std::span<const std::size_t> perm) {
  return frobenius_sq(shuffle(y, perm) - y_hat_aux);
}

Var sta_branch(Var y_sta, Var y_aux, std::span<const std::size_t> perm, Var wp) {
  const Var parts[] = {shuffle(y_sta, perm), y_aux};
  return matmul(concat_cols(parts), wp);
}

StableLoss sta_loss(Var y, Var y_hat_sta, Var y_sta, const BoundParams& params, const CriticConfig& critic,
                    const EstimatorConfig& estimator, const MineAverage& mine, real mi_weight) {
  const Var rec = frobenius_sq(y - y_hat_sta);
  if (mi_weight == 0) return {rec, rec, MiEstimate{y.tape()->constant(Tensor::scalar(0)), 0}};
  MiEstimate mi = estimate(estimator, critic_scores(y, y_sta, params, critic), mine);
  return {rec - scale(mi.value, mi_weight), rec, mi};
}

}  // namespace edad
