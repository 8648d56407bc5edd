// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "ngi/numerics/rng.hpp"
#include "ngi/numerics/tensor.hpp"

namespace ngi {

// Differentiable operators. Image tensors are NCHW. Every op records a
// backward closure when grad mode is on and an input requires grad.

/// Cross-correlation of x[N,C,H,W] with kernel[F,C,k,k]; `bias` is [F] or
/// undefined. Output is [N,F,(H+2p-k)/s+1,(W+2p-k)/s+1]. k must be odd.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                 int stride = 1, int padding = 0);
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, int stride = 1, int padding = 0) {
  return conv2d(x, kernel, Tensor<T>(), stride, padding);
}

/// Nearest-neighbour 2x upsampling followed by a same-padded stride-1 conv.
template <typename T>
Tensor<T> upsample_conv(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias = {});

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x);
/// 2x2 mean pooling; H and W must be even.
template <typename T>
Tensor<T> avg_pool2x2(const Tensor<T>& x);

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(0.2));

inline constexpr double kExpClampLo = -30.0;
inline constexpr double kExpClampHi = 20.0;
/// exp(clamp(x, -30, 20)); zero gradient in the clamped region.
template <typename T>
Tensor<T> exp_activation(const Tensor<T>& x);

template <typename T>
Tensor<T> log1p(const Tensor<T>& x);

/// Max-subtracted softmax along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits, int axis = -1);

/// Batched product a[...,M,K] * b[...,K,N] with numpy-style batch broadcasting.
template <typename T>
Tensor<T> matmul_batched(const Tensor<T>& a, const Tensor<T>& b);

/// Swaps the last two axes.
template <typename T>
Tensor<T> transpose_last2(const Tensor<T>& x);

/// Inverted dropout: in training, zeroes with probability `rate` and scales
/// survivors by 1/(1-rate). Identity otherwise.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, bool training);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);
/// Concatenates along `axis` (all other extents must match).
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& xs, int axis = 1);
/// Channels [begin, end) of an NCHW-like tensor (axis 1).
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t begin, std::int64_t end);
/// Repeats every batch entry `times` consecutively: [B,...] -> [B*times,...].
/// The backward pass sums the copies of each entry in index order.
template <typename T>
Tensor<T> repeat_interleave_batch(const Tensor<T>& x, std::int64_t times);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);
/// mean(|a - b|); subgradient 0 where a == b.
template <typename T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b);
/// mean((x - target)^2) for a constant target.
template <typename T>
Tensor<T> mean_squared_from(const Tensor<T>& x, T target);

/// Forward identity whose backward multiplies the incoming gradient by
/// `factor`. Only useful for gradient-checker negative controls.
template <typename T>
Tensor<T> scale_gradient(const Tensor<T>& x, T factor);

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, b);
}
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) {
  return sub(a, b);
}
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) {
  return mul(a, b);
}
template <typename T>
Tensor<T> operator*(T s, const Tensor<T>& x) {
  return scale(x, s);
}

}  // namespace ngi
