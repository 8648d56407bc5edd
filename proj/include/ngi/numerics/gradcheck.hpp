// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ngi/numerics/optim.hpp"

namespace ngi {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = false;
  /// Elements re-differenced at a finer step after missing the tolerance.
  int refined = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  bool passed() const;
  double worst() const;
};

inline constexpr double kGradCheckRelativeFloor = 1e-4;
inline constexpr double kGradCheckRefineFactor = 16.0;

template <typename T>
using ScalarFn = std::function<Tensor<T>(const ParameterList<T>&)>;

/// Compares reverse-mode gradients of `fn` against central differences for
/// every element of every input.
///
/// The error of an input is max_i |analytic_i - numeric_i| divided by the
/// larger of the two gradients' max-norms. That scale is floored at
/// kGradCheckRelativeFloor times the largest gradient over all inputs, so
/// inputs whose gradient vanishes identically are judged on absolute error.
/// Elements outside the tolerance get one retry at step / kGradCheckRefineFactor.
template <typename T>
GradCheckReport grad_check(const ScalarFn<T>& fn, ParameterList<T> inputs, double tolerance,
                           double step = 0.0);

/// Checks the reverse-mode gradients of `fn` against central differences of
/// `reference`, a 64-bit evaluation of the same function over
/// `reference_inputs` (the same parameters, in the same order, widened to
/// double). Used where 32-bit differencing cannot resolve small gradients.
template <typename T>
GradCheckReport grad_check_against(const ScalarFn<T>& fn, ParameterList<T> inputs,
                                   const ScalarFn<double>& reference,
                                   ParameterList<double> reference_inputs, double tolerance,
                                   double step = 1e-5);

/// Default finite-difference step for a scalar type.
template <typename T>
constexpr double default_fd_step() {
  return sizeof(T) == sizeof(double) ? 1e-6 : 1e-2;
}

}  // namespace ngi
