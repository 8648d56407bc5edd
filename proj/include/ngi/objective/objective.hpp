// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ngi/numerics/ops.hpp"
#include "ngi/numerics/optim.hpp"

namespace ngi {

struct LossWeights {
  double content = 0.7;
  double perceptual = 0.28;
  double adversarial = 0.02;
  /// Per-tap perceptual weights; empty means 1 for every tap.
  std::vector<double> taps;

  /// Throws std::invalid_argument on a negative weight.
  void validate() const;
};

/// mean of 0.5 e^2 / delta where |e| < delta, |e| - 0.5 delta elsewhere.
template <typename T>
Tensor<T> smooth_l1(const Tensor<T>& pred, const Tensor<T>& target, T delta = T(1));

template <typename T>
struct AdversarialLosses {
  Tensor<T> discriminator;
  Tensor<T> generator;
};

/// Least-squares GAN losses on patch scores laid out as [3B, 1, h, w] rows in
/// (frame, channel) order. Each loss is computed per color channel and the
/// three are averaged. Either score map may be undefined when only one loss
/// is needed.
template <typename T>
AdversarialLosses<T> adversarial_losses(const Tensor<T>& real_scores, const Tensor<T>& fake_scores);

/// Fixed multi-scale conv stack used as the perceptual feature network. Each
/// stage is a conv followed by leaky ReLU; every stage output is a tap.
template <typename T>
struct FrozenFeatureExtractor {
  struct Stage {
    Tensor<T> weight;
    Tensor<T> bias;
    int stride = 2;
  };
  std::vector<Stage> stages;
  T leaky_slope = T(0.2);

  /// Three stride-2 3x3 stages of widths `widths` on 3-channel input, with
  /// seeded Xavier weights and zero biases.
  static FrozenFeatureExtractor random(std::uint64_t seed,
                                       const std::vector<int>& widths = {8, 16, 32});
  /// Rebuilds an extractor from tensors named "extractor.<i>.w" / ".b".
  static FrozenFeatureExtractor from_tensors(const ParameterList<T>& tensors, int stride = 2);
  ParameterList<T> tensors() const;

  /// Smallest input side length that leaves every tap at least one pixel.
  std::int64_t min_resolution() const;
  std::vector<Tensor<T>> features(const Tensor<T>& x) const;
};

/// Σ_l λ_l mean|Φ_l(log1p(target)) - Φ_l(log1p(pred))| on [B, 3, H, W] radiance.
template <typename T>
Tensor<T> perceptual_loss(const Tensor<T>& pred, const Tensor<T>& target,
                          const FrozenFeatureExtractor<T>& extractor,
                          const std::vector<double>& lambdas = {});

/// ω_a L_a + ω_c L_c + ω_p L_p.
template <typename T>
Tensor<T> total_loss(const Tensor<T>& content, const Tensor<T>& perceptual,
                     const Tensor<T>& adversarial, const LossWeights& weights);

}  // namespace ngi
