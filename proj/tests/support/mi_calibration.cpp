#include "mi_calibration.hpp"

#include <cmath>

namespace edad::testing {

double calibrated_mi(const EstimatorConfig& estimator, double rho, std::size_t steps, std::size_t batch,
                     std::size_t tail) {
  CriticConfig critic;
  critic.hidden = 32;
  critic.embedding = 16;
  const Rng root(1);
  ParamSet params;
  Rng init = root.split("init");
  init_critic(params, critic, 1, 1, init);
  Rng data = root.split("data");
  AdamState adam;
  MineAverage mine;
  double mean = 0;
  for (std::size_t step = 0; step < steps; ++step) {
    Tensor x({batch, 1}), y({batch, 1});
    for (std::size_t i = 0; i < batch; ++i) {
      const double a = data.normal(), b = data.normal();
      x[i] = static_cast<real>(a);
      y[i] = static_cast<real>(rho * a + std::sqrt(1 - rho * rho) * b);
    }
    Tape tape;
    const BoundParams bound(tape, params);
    const MiEstimate e = estimate(estimator, critic_scores(tape.constant(x), tape.constant(y), bound, critic), mine);
    if (step + tail >= steps) mean += e.value.item() / static_cast<double>(tail);
    adam_step(params, gradient(scale(e.value, -1), bound), adam, 1e-3);
    if (estimator.kind == EstimatorKind::mine) mine.observe(e.partition, estimator.mine_decay);
  }
  return mean;
}

}  // namespace edad::testing
