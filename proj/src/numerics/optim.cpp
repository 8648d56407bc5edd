// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/numerics/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ngi {

template <typename T>
AdamState<T> AdamState<T>::create(const ParameterList<T>& params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.value.data().size(), T(0));
    state.second_moment.emplace_back(p.value.data().size(), T(0));
  }
  return state;
}

template <typename T>
void adam_step(AdamState<T>& state, ParameterList<T>& params) {
  if (params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: optimizer state holds " +
                                std::to_string(state.first_moment.size()) + " moments for " +
                                std::to_string(params.size()) + " parameters");
  }
  for (const auto& p : params) {
    if (!p.value.has_grad()) throw std::invalid_argument("adam_step: parameter '" + p.name + "' has no gradient");
  }
  ++state.step;
  const T b1 = static_cast<T>(state.config.beta1);
  const T b2 = static_cast<T>(state.config.beta2);
  const T lr = static_cast<T>(state.config.learning_rate);
  const T eps = static_cast<T>(state.config.epsilon);
  const T c1 = static_cast<T>(1.0 - std::pow(state.config.beta1, static_cast<double>(state.step)));
  const T c2 = static_cast<T>(1.0 - std::pow(state.config.beta2, static_cast<double>(state.step)));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value.mutable_data();
    auto grad = params[i].value.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != value.size()) {
      throw std::invalid_argument("adam_step: moment shape mismatch for '" + params[i].name + "'");
    }
    for (std::size_t k = 0; k < value.size(); ++k) {
      const T g = grad[k];
      if (g == T(0)) continue;
      m[k] = b1 * m[k] + (T(1) - b1) * g;
      v[k] = b2 * v[k] + (T(1) - b2) * g * g;
      const T mhat = m[k] / c1;
      const T vhat = v[k] / c2;
      value[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template <typename T>
Tensor<T> xavier_init(const Shape& shape, Rng& rng) {
  if (shape.size() < 2) throw ShapeError("xavier_init: need rank >= 2, got " + to_string(shape));
  std::int64_t receptive = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) receptive *= shape[i];
  const double fan_in = static_cast<double>(shape[1] * receptive);
  const double fan_out = static_cast<double>(shape[0] * receptive);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::vector<T> data(static_cast<std::size_t>(numel(shape)));
  for (auto& d : data) d = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>::from(shape, std::move(data));
}

void zero_grads(std::vector<NamedTensor<float>>& params) {
  for (auto& p : params) p.value.zero_grad();
}
void zero_grads(std::vector<NamedTensor<double>>& params) {
  for (auto& p : params) p.value.zero_grad();
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(AdamState<float>&, ParameterList<float>&);
template void adam_step(AdamState<double>&, ParameterList<double>&);
template Tensor<float> xavier_init(const Shape&, Rng&);
template Tensor<double> xavier_init(const Shape&, Rng&);

}  // namespace ngi
