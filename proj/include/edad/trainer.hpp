#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "edad/data.hpp"
#include "edad/model.hpp"
#include "edad/params.hpp"

namespace edad {

struct TrainConfig {
  real lambda1 = 1;  // stable loss
  real lambda2 = 1;  // auxiliary loss
  real lambda3 = 1;  // teacher-student consistency
  real lr = 5e-4;
  std::size_t max_epochs = 10;
  std::size_t patience = 3;
  real min_improvement = 1e-4;
  std::size_t batch_size = 64;
  real ema_decay = 0.99;
  std::uint64_t seed = 0;
  /// 0 selects worker_count().
  std::size_t threads = 0;

  void validate() const;
};

/// Training diverged; the message names the offending loss term.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ||Y_student W_p - Y_teacher W_p||_F^2; the teacher output is a constant.
Var consistency_loss(Var y_student, Var y_teacher, Var wp);

/// teacher := decay * teacher + (1 - decay) * student, for every teacher tensor.
void ema_update(ParamSet& teacher, const ParamSet& student, real decay);

struct LossTerms {
  Var total;
  Var sta;
  Var aux;
  Var reg;
  real partition = 0;
};

/// Plain-number view of LossTerms.
struct LossValues {
  double total = 0, sta = 0, aux = 0, reg = 0;
};
LossValues values_of(const LossTerms& terms);

/// Full objective for one window: encode, decompose, branch losses, MI
/// term and consistency. `teacher` must be bound as constants.
LossTerms window_objective(const BoundParams& student, const BoundParams& teacher, const ModelConfig& model,
                           std::span<const real> window, std::span<const std::size_t> perm_aux,
                           std::span<const std::size_t> perm_sta, const TrainConfig& config,
                           const MineAverage& mine = {});

/// Batch mean of window_objective on one tape.
LossTerms total_loss(Tape& tape, const BoundParams& student, const BoundParams& teacher, const ModelConfig& model,
                     std::span<const std::span<const real>> windows,
                     std::span<const std::vector<std::size_t>> perms_aux,
                     std::span<const std::vector<std::size_t>> perms_sta, const TrainConfig& config,
                     const MineAverage& mine = {});

/// Training-loss patience: stops once `patience` consecutive epochs (at
/// least one) fail to improve on the best loss by more than min_delta.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

  /// Feeds one epoch loss; true means stop now.
  bool update(double loss);
  bool last_improved() const { return last_improved_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_ = 0;
  bool has_best_ = false;
  bool last_improved_ = false;
  std::size_t streak_ = 0;
};

struct TrainState {
  Model model;
  ParamSet teacher;
  AdamState adam;
  MineAverage mine;
  std::size_t epochs_done = 0;
};

/// Checkpoint tensors: model params as-is, "teacher.*", "adam.m.*",
/// "adam.v.*", "adam.step", "mine.average", "mine.initialized".
ParamSet to_checkpoint(const TrainState& state);
TrainState from_checkpoint(const ParamSet& tensors, const ModelConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double total = 0, sta = 0, aux = 0, reg = 0;
  double seconds = 0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochRecord& rec);

struct TrainResult {
  TrainState best;
  TrainState last;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&, const TrainState& state, bool improved)>;

/// Adam over shuffled window batches drawn across all channels, teacher EMA
/// after each step, early stopping on the epoch-mean training loss.
/// Deterministic for a given seed regardless of thread count.
TrainResult train(std::span<const WindowBatch> data, const ModelConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Draws a uniform permutation of 0..n-1; for n <= 3 the identity is redrawn.
std::vector<std::size_t> draw_permutation(Rng& rng, std::size_t n);

}  // namespace edad
