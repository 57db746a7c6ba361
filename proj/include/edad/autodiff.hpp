#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "edad/tensor.hpp"

namespace edad {

class Tape;

/// Handle to a tensor recorded on a Tape. Cheap to copy; valid while the
/// tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  real item() const { return value().item(); }
  bool tracked() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient tape. One tape per thread; a tape built with
/// grad_enabled=false records values only.
class Tape {
 public:
  /// Accumulates the incoming output gradient into parent gradient slots.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var variable(Tensor value);
  /// Leaf that never receives a gradient.
  Var constant(Tensor value);

  /// Records an op result. `parents` decide whether the result is tracked.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward, const char* op);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool tracked(std::size_t id) const { return nodes_[id].tracked; }
  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient slot for node `id` during backward; zero-initialized on first use.
  Tensor& grad(std::size_t id);

  /// d loss / d param for each of `params`, in order. Params the loss does
  /// not depend on get zeros. Throws ContractError if loss is not a scalar.
  std::vector<Tensor> gradient(Var loss, std::span<const Var> params);

 private:
  struct Node {
    Tensor value;
    BackwardFn backward;
    bool tracked = false;
  };

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<char> has_grad_;
};

// Differentiable ops. Shapes follow the matrix view of Tensor.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, real s);
Var add_scalar(Var a, real s);
/// a (r x c) + row (1 x c) broadcast over rows.
Var add_row(Var a, Var row);
/// a (r x c) * row (1 x c) broadcast over rows.
Var mul_row(Var a, Var row);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);
/// Elementwise clamp; the gradient is zero where the input was clipped.
Var clamp(Var a, real lo, real hi);
Var softmax_rows(Var a);
Var sum(Var a);
Var mean(Var a);
/// r x c -> r x 1.
Var sum_rows(Var a);
/// Squared Frobenius norm, 1x1.
Var frobenius_sq(Var a);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_cols(std::span<const Var> parts);
/// Output row i is input row perm[i]; ContractError unless perm is a bijection.
Var gather_rows(Var a, std::span<const std::size_t> perm);
/// Per-row (x - mean) / sqrt(var + eps), population variance.
Var normalize_rows(Var a, real eps);
/// (x - mean) / sqrt(var + eps) with statistics over every entry.
Var normalize_all(Var a, real eps);
/// p (n x h), q (n x h) -> (n*n) x h with row i*n+j = p_i + q_j.
Var pairwise_sum(Var p, Var q);
Var reshape(Var a, std::size_t rows, std::size_t cols);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, real s) { return scale(a, s); }
inline Var operator*(real s, Var a) { return scale(a, s); }

}  // namespace edad
