#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "edad/errors.hpp"

namespace edad {

#ifdef EDAD_FLOAT32
using real = float;
#else
using real = double;
#endif

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major real array. Every op in the library views tensors as
/// matrices: rank 0 is 1x1, rank 1 is a 1xn row, rank 2 is rows x cols.
class Tensor {
 public:
  Tensor() : shape_{1, 1}, data_(1, real{0}) {}
  explicit Tensor(Shape shape, real fill = real{0});
  Tensor(Shape shape, std::vector<real> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, real fill = real{0});
  static Tensor scalar(real value);
  static Tensor column(std::span<const real> values);
  static Tensor row(std::span<const real> values);
  static Tensor from_rows(std::initializer_list<std::initializer_list<real>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  real* data() { return data_.data(); }
  const real* data() const { return data_.data(); }
  std::span<real> values() { return data_; }
  std::span<const real> values() const { return data_; }
  std::vector<real>& storage() { return data_; }

  real& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  real operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  real& operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }

  /// Value of a single-element tensor.
  real item() const;

  bool all_finite() const;
  /// Throws NumericError naming `what` if any entry is NaN/Inf.
  void require_finite(const char* what) const;

  bool same_shape(const Tensor& other) const { return rows() == other.rows() && cols() == other.cols(); }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(real s);
  void fill(real v);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<real> data_;
};

/// Plain (untracked) matrix product, used by oracles and inference helpers.
Tensor matmul_values(const Tensor& a, const Tensor& b);
Tensor transpose_values(const Tensor& a);
real max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace edad
