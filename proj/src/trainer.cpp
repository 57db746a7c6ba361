#include "edad/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

#include "edad/parallel.hpp"
#include "edad/rng.hpp"

namespace edad {

namespace {

constexpr std::size_t kChunk = 8;

template <class F>
auto guarded(const char* term, F&& f) {
  try {
    return f();
  } catch (const NumericError& e) {
    throw TrainingError(std::string("non-finite loss in ") + term + ": " + e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) throw ConfigError("loss weights must be non-negative");
  if (!(ema_decay > 0 && ema_decay < 1)) throw ConfigError("ema_decay must lie in (0, 1)");
  if (!(lr > 0)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
}

Var consistency_loss(Var y_student, Var y_teacher, Var wp) {
  return frobenius_sq(matmul(y_student, wp) - matmul(y_teacher, wp));
}

void ema_update(ParamSet& teacher, const ParamSet& student, real decay) {
  for (auto& [name, t] : teacher) {
    auto it = student.find(name);
    if (it == student.end()) throw ContractError("ema_update: student has no '" + name + "'");
    const Tensor& s = it->second;
    if (s.size() != t.size()) throw DimensionError("ema_update: shape mismatch for '" + name + "'");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = decay * t[i] + (1 - decay) * s[i];
  }
}

LossValues values_of(const LossTerms& terms) {
  return {terms.total.item(), terms.sta.item(), terms.aux.item(), terms.reg.item()};
}

LossTerms window_objective(const BoundParams& student, const BoundParams& teacher, const ModelConfig& model,
                           std::span<const real> window, std::span<const std::size_t> perm_aux,
                           std::span<const std::size_t> perm_sta, const TrainConfig& config,
                           const MineAverage& mine) {
  const Var wp = student["decomposer.wp"];
  Tape& tape = *wp.tape();
  const Var wp_sta = student[model.untie_wp ? "decomposer.wp_sta" : "decomposer.wp"];

  const Var y = guarded("encoder", [&] { return encode(tape, student, window, model.encoder); });
  const auto [y_sta, y_aux] = split(y);

  const auto stable = guarded("L_sta", [&] {
    return sta_loss(y, sta_branch(y_sta, y_aux, perm_sta, wp_sta), y_sta, student, model.critic, model.estimator, mine);
  });
  const Var aux = guarded("L_aux", [&] { return aux_loss(y, aux_branch(y_sta, y_aux, perm_aux, wp), perm_aux); });
  const Var reg = guarded("L_reg", [&] {
    const Var y_teacher = encode(tape, teacher, window, model.encoder);
    return consistency_loss(y, y_teacher, wp);
  });
  const Var total = guarded("total", [&] {
    return scale(stable.value, config.lambda1) + scale(aux, config.lambda2) + scale(reg, config.lambda3);
  });
  return {total, stable.value, aux, reg, stable.mi.partition};
}

LossTerms total_loss(Tape& tape, const BoundParams& student, const BoundParams& teacher, const ModelConfig& model,
                     std::span<const std::span<const real>> windows,
                     std::span<const std::vector<std::size_t>> perms_aux,
                     std::span<const std::vector<std::size_t>> perms_sta, const TrainConfig& config,
                     const MineAverage& mine) {
  if (windows.empty()) throw ContractError("total_loss on an empty batch");
  if (perms_aux.size() != windows.size() || perms_sta.size() != windows.size())
    throw ContractError("total_loss: one permutation pair per window required");
  LossTerms acc;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    auto t = window_objective(student, teacher, model, windows[k], perms_aux[k], perms_sta[k], config, mine);
    if (k == 0) {
      acc = t;
    } else {
      acc.total = acc.total + t.total;
      acc.sta = acc.sta + t.sta;
      acc.aux = acc.aux + t.aux;
      acc.reg = acc.reg + t.reg;
      acc.partition += t.partition;
    }
  }
  const real inv = real{1} / static_cast<real>(windows.size());
  (void)tape;
  return {scale(acc.total, inv), scale(acc.sta, inv), scale(acc.aux, inv), scale(acc.reg, inv), acc.partition * inv};
}

bool EarlyStopping::update(double loss) {
  if (!has_best_ || loss < best_ - min_delta_) {
    best_ = loss;
    has_best_ = true;
    streak_ = 0;
    last_improved_ = true;
    return false;
  }
  last_improved_ = false;
  ++streak_;
  return streak_ >= std::max<std::size_t>(patience_, 1);
}

ParamSet to_checkpoint(const TrainState& state) {
  ParamSet out = state.model.params;
  for (const auto& [name, t] : state.teacher) out.emplace("teacher." + name, t);
  for (const auto& [name, t] : state.adam.first_moment) out.emplace("adam.m." + name, t);
  for (const auto& [name, t] : state.adam.second_moment) out.emplace("adam.v." + name, t);
  out.emplace("adam.step", Tensor::scalar(static_cast<real>(state.adam.step)));
  out.emplace("mine.average", Tensor::scalar(state.mine.value));
  out.emplace("mine.initialized", Tensor::scalar(state.mine.initialized ? 1 : 0));
  out.emplace("train.epochs_done", Tensor::scalar(static_cast<real>(state.epochs_done)));
  return out;
}

TrainState from_checkpoint(const ParamSet& tensors, const ModelConfig& config) {
  TrainState state{Model::initialize(config, 0), {}, {}, {}, 0};
  auto take = [&](const std::string& name, const Shape& shape) -> const Tensor& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw CheckpointError("checkpoint lacks '" + name + "'");
    if (it->second.shape() != shape)
      throw CheckpointError("checkpoint tensor '" + name + "' has shape " + shape_string(it->second.shape()) +
                            ", expected " + shape_string(shape));
    return it->second;
  };
  std::size_t consumed = 0;
  for (auto& [name, t] : state.model.params) {
    t = take(name, t.shape());
    ++consumed;
  }
  for (const auto& [name, t] : state.model.encoder_params()) {
    state.teacher.emplace(name, take("teacher." + name, t.shape()));
    ++consumed;
  }
  for (const auto& [name, t] : state.model.params) {
    if (tensors.contains("adam.m." + name)) {
      state.adam.first_moment.emplace(name, take("adam.m." + name, t.shape()));
      state.adam.second_moment.emplace(name, take("adam.v." + name, t.shape()));
      consumed += 2;
    }
  }
  state.adam.step = static_cast<std::uint64_t>(take("adam.step", {1, 1}).item());
  state.mine.value = take("mine.average", {1, 1}).item();
  state.mine.initialized = take("mine.initialized", {1, 1}).item() != 0;
  state.epochs_done = static_cast<std::size_t>(take("train.epochs_done", {1, 1}).item());
  consumed += 4;
  if (consumed != tensors.size()) throw CheckpointError("checkpoint holds tensors this model does not use");
  return state;
}

void write_log_header(std::ostream& out) { out << "epoch,total,l_sta,l_aux,l_reg,seconds\n"; }

void write_log_row(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << format_real(r.total) << ',' << format_real(r.sta) << ',' << format_real(r.aux) << ','
      << format_real(r.reg) << ',' << format_real(r.seconds) << '\n';
}

std::vector<std::size_t> draw_permutation(Rng& rng, std::size_t n) {
  for (;;) {
    auto p = rng.permutation(n);
    if (n <= 1 || n > 3) return p;
    bool identity = true;
    for (std::size_t i = 0; i < n; ++i) identity = identity && p[i] == i;
    if (!identity) return p;
  }
}

TrainResult train(std::span<const WindowBatch> data, const ModelConfig& model_config, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  model_config.validate();
  struct Ref {
    std::size_t batch, index;
  };
  std::vector<Ref> refs;
  for (std::size_t b = 0; b < data.size(); ++b) {
    if (data[b].window != model_config.window)
      throw ConfigError("window batch length " + std::to_string(data[b].window) + " differs from model window " +
                        std::to_string(model_config.window));
    if (data[b].size() == 0) throw ConfigError("channel " + std::to_string(data[b].channel) + " has no windows");
    for (std::size_t i = 0; i < data[b].size(); ++i) refs.push_back({b, i});
  }
  if (refs.empty()) throw ConfigError("no training windows");

  const Rng root(config.seed);
  TrainState state{Model::initialize(model_config, config.seed), {}, {}, {}, 0};
  state.teacher = state.model.encoder_params();
  const std::size_t workers = config.threads ? config.threads : worker_count();

  TrainResult result;
  EarlyStopping stopper(config.patience, config.min_improvement);
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    Rng order_rng = root.split("batches").split(epoch);
    const auto order = order_rng.permutation(refs.size());
    LossValues epoch_sum;

    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size, ++step) {
      const std::size_t n = std::min(config.batch_size, order.size() - lo);
      Rng perm_rng = root.split("permutations").split(step);
      std::vector<std::vector<std::size_t>> perm_aux(n), perm_sta(n);
      for (std::size_t k = 0; k < n; ++k) {
        perm_aux[k] = draw_permutation(perm_rng, model_config.window);
        perm_sta[k] = draw_permutation(perm_rng, model_config.window);
      }

      const std::size_t chunks = (n + kChunk - 1) / kChunk;
      std::vector<ParamSet> chunk_grads(chunks);
      std::vector<LossValues> values(n);
      std::vector<real> partitions(n);
      const real inv_n = real{1} / static_cast<real>(n);
      parallel_for(chunks, workers, [&](std::size_t c) {
        for (std::size_t k = c * kChunk; k < std::min(n, (c + 1) * kChunk); ++k) {
          const Ref ref = refs[order[lo + k]];
          Tape tape;
          const BoundParams student(tape, state.model.params, true);
          const BoundParams teacher(tape, state.teacher, false);
          const auto terms = window_objective(student, teacher, model_config, data[ref.batch][ref.index],
                                              perm_aux[k], perm_sta[k], config, state.mine);
          values[k] = values_of(terms);
          partitions[k] = terms.partition;
          add_into(chunk_grads[c], gradient(scale(terms.total, inv_n), student));
        }
      });
      ParamSet grads = std::move(chunk_grads[0]);
      for (std::size_t c = 1; c < chunks; ++c) add_into(grads, chunk_grads[c]);
      if (!all_finite(grads)) throw TrainingError("non-finite gradient at step " + std::to_string(step));

      adam_step(state.model.params, grads, state.adam, config.lr);
      ema_update(state.teacher, state.model.params, config.ema_decay);
      if (model_config.estimator.kind == EstimatorKind::mine) {
        real p = 0;
        for (auto v : partitions) p += v;
        state.mine.observe(p * inv_n, model_config.estimator.mine_decay);
      }
      for (const auto& v : values) {
        epoch_sum.total += v.total;
        epoch_sum.sta += v.sta;
        epoch_sum.aux += v.aux;
        epoch_sum.reg += v.reg;
      }
    }

    const double count = static_cast<double>(refs.size());
    EpochRecord rec{epoch + 1, epoch_sum.total / count, epoch_sum.sta / count, epoch_sum.aux / count,
                    epoch_sum.reg / count,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()};
    if (!std::isfinite(rec.total)) throw TrainingError("non-finite epoch loss at epoch " + std::to_string(rec.epoch));
    state.epochs_done = epoch + 1;
    result.log.push_back(rec);
    const bool stop = stopper.update(rec.total);
    if (stopper.last_improved()) {
      result.best = state;
      result.best_epoch = rec.epoch;
    }
    if (on_epoch) on_epoch(rec, state, stopper.last_improved());
    if (stop) break;
  }
  result.last = std::move(state);
  return result;
}

}  // namespace edad
