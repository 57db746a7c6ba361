#include "edad/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "edad/trainer.hpp"

namespace edad {

void BaselineConfig::validate() const {
  if (window < 2) throw ConfigError("baseline window must be at least 2");
  if (hidden_width() == 0) throw ConfigError("baseline hidden width is zero");
  if (!(lr > 0)) throw ConfigError("baseline learning rate must be positive");
  if (batch_size == 0 || max_epochs == 0) throw ConfigError("baseline batch size and epochs must be positive");
}

BaselineModel BaselineModel::initialize(const BaselineConfig& config) {
  config.validate();
  Rng rng = Rng(config.seed).split("init/baseline");
  const std::size_t b = config.window, h = config.hidden_width();
  BaselineModel m{config, {}};
  m.params["ae.w1"] = uniform_init(b, h, b, rng);
  m.params["ae.b1"] = Tensor({1, h});
  m.params["ae.w2"] = uniform_init(h, b, h, rng);
  m.params["ae.b2"] = Tensor({1, b});
  return m;
}

Var reconstruct(Var windows, const BoundParams& params) {
  const Var hidden = relu(add_row(matmul(windows, params["ae.w1"]), params["ae.b1"]));
  return add_row(matmul(hidden, params["ae.w2"]), params["ae.b2"]);
}

Var reconstruction_loss(Var windows, const BoundParams& params) {
  const Var err = frobenius_sq(reconstruct(windows, params) - windows);
  return scale(err, real{1} / static_cast<real>(windows.value().rows()));
}

namespace {

Tensor stack(std::span<const WindowBatch> data, std::span<const std::pair<std::size_t, std::size_t>> refs,
             std::size_t window) {
  Tensor out({refs.size(), window});
  for (std::size_t r = 0; r < refs.size(); ++r) {
    const auto w = data[refs[r].first][refs[r].second];
    std::copy(w.begin(), w.end(), out.data() + r * window);
  }
  return out;
}

}  // namespace

BaselineResult train_reconstruction_baseline(std::span<const WindowBatch> data, const BaselineConfig& config) {
  std::vector<std::pair<std::size_t, std::size_t>> refs;
  for (std::size_t b = 0; b < data.size(); ++b) {
    if (data[b].window != config.window) throw ConfigError("baseline window does not match the data");
    for (std::size_t i = 0; i < data[b].size(); ++i) refs.emplace_back(b, i);
  }
  if (refs.empty()) throw ConfigError("no training windows");

  BaselineResult result{BaselineModel::initialize(config), {}};
  BaselineModel best = result.model;
  AdamState adam;
  EarlyStopping stopper(config.patience, config.min_improvement);
  const Rng root = Rng(config.seed).split("baseline/batches");

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng rng = root.split(epoch);
    const auto order = rng.permutation(refs.size());
    double total = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - lo);
      std::vector<std::pair<std::size_t, std::size_t>> batch(n);
      for (std::size_t k = 0; k < n; ++k) batch[k] = refs[order[lo + k]];
      Tape tape;
      const BoundParams params(tape, result.model.params, true);
      const Var loss = reconstruction_loss(tape.constant(stack(data, batch, config.window)), params);
      if (!std::isfinite(loss.value().item())) throw TrainingError("non-finite baseline reconstruction loss");
      total += loss.value().item() * static_cast<double>(n);
      adam_step(result.model.params, gradient(loss, params), adam, config.lr);
    }
    const double mean = total / static_cast<double>(refs.size());
    result.epoch_loss.push_back(mean);
    const bool stop = stopper.update(mean);
    if (stopper.last_improved()) best = result.model;
    if (stop) break;
  }
  result.model = std::move(best);
  return result;
}

std::vector<real> baseline_window_scores(const BaselineModel& model, std::span<const real> window) {
  if (window.size() != model.config.window) throw DimensionError("baseline window length mismatch");
  Tape tape(false);
  const BoundParams params(tape, model.params, false);
  const Var x = tape.constant(Tensor({1, window.size()}, std::vector<real>(window.begin(), window.end())));
  const Tensor& y = reconstruct(x, params).value();
  std::vector<real> out(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    const real e = y[i] - window[i];
    out[i] = e * e;
  }
  return out;
}

}  // namespace edad
