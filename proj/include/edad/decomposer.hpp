#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "edad/autodiff.hpp"
#include "edad/mi.hpp"
#include "edad/params.hpp"

namespace edad {

/// W_p: d x d projection of the re-concatenated halves. With `untie` the
/// stable branch gets its own copy ("decomposer.wp_sta").
void init_decomposer(ParamSet& params, std::size_t d_model, bool untie, Rng& rng);

/// Column halves of Y: (Y_sta, Y_aux). ConfigError for odd widths.
std::pair<Var, Var> split(Var y);

/// Row i of the result is row perm[i] of x. ContractError unless perm is a
/// bijection on 0..rows-1.
Var shuffle(Var x, std::span<const std::size_t> perm);
void require_permutation(std::span<const std::size_t> perm, std::size_t n);

/// concat(Y_sta, shuffle(Y_aux)) * W_p
Var aux_branch(Var y_sta, Var y_aux, std::span<const std::size_t> perm, Var wp);
/// ||shuffle(Y) - Yhat_aux||_F^2 with the same perm as aux_branch.
Var aux_loss(Var y, Var y_hat_aux, std::span<const std::size_t> perm);

/// concat(shuffle(Y_sta), Y_aux) * W_p
Var sta_branch(Var y_sta, Var y_aux, std::span<const std::size_t> perm, Var wp);

struct StableLoss {
  Var value;           // reconstruction - mi
  Var reconstruction;  // ||Y - Yhat_sta||_F^2
  MiEstimate mi;       // I(Y, Y_sta)
};

/// ||Y - Yhat_sta||_F^2 - I(Y, Y_sta); with mi_weight = 0 the MI term is dropped.
StableLoss sta_loss(Var y, Var y_hat_sta, Var y_sta, const BoundParams& params, const CriticConfig& critic,
                    const EstimatorConfig& estimator, const MineAverage& mine = {}, real mi_weight = 1);

}  // namespace edad
