// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ngi/numerics/rng.hpp"
#include "ngi/numerics/tensor.hpp"

namespace ngi {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> value;
};

template <typename T>
using ParameterList = std::vector<NamedTensor<T>>;

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments for one parameter group, in parameter order.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;

  static AdamState create(const ParameterList<T>& params, AdamConfig config = {});
};

/// One bias-corrected Adam update of every parameter in `params` from its
/// gradient buffer. Elements whose gradient is exactly zero are skipped
/// (value and moments untouched). Throws if a parameter has no gradient.
template <typename T>
void adam_step(AdamState<T>& state, ParameterList<T>& params);

/// Uniform Glorot initialisation. For [out, in, k, k] kernels the fans are
/// in*k*k and out*k*k; for 2-d [out, in] shapes they are in and out.
template <typename T>
Tensor<T> xavier_init(const Shape& shape, Rng& rng);

void zero_grads(std::vector<NamedTensor<float>>& params);
void zero_grads(std::vector<NamedTensor<double>>& params);

extern template struct AdamState<float>;
extern template struct AdamState<double>;

}  // namespace ngi
