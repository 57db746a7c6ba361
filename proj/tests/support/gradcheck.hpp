#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "edad/params.hpp"

namespace edad::testing {

/// A scalar function of named tensors; every tensor is differentiated.
struct GradCase {
  std::string name;
  ParamSet inputs;
  std::function<Var(const BoundParams&)> loss;
};

struct GradReport {
  std::string name;
  /// Worst over tensors of |analytic - numeric|_inf / max(|analytic|_inf, |numeric|_inf, 1e-8).
  double max_rel_error = 0;
  std::string worst_tensor;
};

GradReport check_gradient(const GradCase& c, double h = 1e-6);

/// Randomized cases for every differentiable op and the composed objective.
std::vector<GradCase> gradient_suite(std::uint64_t seed);

}  // namespace edad::testing
