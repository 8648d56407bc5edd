// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "ngi/network/model.hpp"
#include "ngi/numerics/ops.hpp"
#include "ngi/numerics/rng.hpp"

namespace ngi {

enum class Mode { kTrain, kInfer };

/// Encoded geometry per U level. `hat[l]` is `features[l]` concatenated with
/// the raw geometry average-pooled to level l.
template <typename T>
struct GeometryFeatures {
  std::vector<Tensor<T>> features;
  std::vector<Tensor<T>> raw;
  std::vector<Tensor<T>> hat;
};

/// Stacks N (3), D/extent (1), P/extent (3) into [B, 7, H, W].
template <typename T>
Tensor<T> normalize_geometry(const Tensor<T>& normals, const Tensor<T>& depth,
                             const Tensor<T>& positions, const std::vector<double>& extents);

/// U-shaped geometry encoder over [B, 7, H, W] normalized geometry.
template <typename T>
GeometryFeatures<T> encode_geometry(const Tensor<T>& geometry, const Model<T>& model);

/// γ and β maps of the GCM block `prefix` (e.g. "gen.gcm2") from f̂_g.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> gcm_factors(const Tensor<T>& hat, const Model<T>& model,
                                            const std::string& prefix);
/// γ ⊗ x ⊕ β. Throws ShapeError if the spatial sizes differ.
template <typename T>
Tensor<T> gcm_apply(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta);
template <typename T>
Tensor<T> gcm_modulate(const Tensor<T>& x, const Tensor<T>& hat, const Model<T>& model,
                       const std::string& prefix);

/// Per-head attention [B, HW, HW]; row i is softmax_j(Q_k(f̂^i)·K_k(f̂^j)/√d_k).
template <typename T>
std::vector<Tensor<T>> gfa_weights(const Tensor<T>& hat, const Model<T>& model);

/// x + merge(concat_k Σ_j V_k(x^j) Attn_k(j|i)). `attn` holds one [N, HW, HW]
/// tensor per head, with N equal to the batch of x.
template <typename T>
Tensor<T> gfa_aggregate(const Tensor<T>& x, const std::vector<Tensor<T>>& attn,
                        const Model<T>& model);

/// Geometry-only products of one frame batch, broadcast to the generator
/// batch: γ/β per decoder level (index = level) and bottleneck attention.
template <typename T>
struct Conditioning {
  std::vector<Tensor<T>> gamma, beta;
  std::vector<Tensor<T>> attn;
};

/// Computes all GCM factors and attention once; `repeat` copies each batch
/// entry for the color channels sharing it.
template <typename T>
Conditioning<T> build_conditioning(const GeometryFeatures<T>& g, const Model<T>& model,
                                   std::int64_t repeat);

/// One pass of the shading generator over [N, Cin, H, W] inputs, where Cin is
/// 2 (log1p(L_d,c), R_c) for the monochromatic model. Returns exp-activated
/// shading [N, Cout, H, W].
template <typename T>
Tensor<T> generator_forward(const Tensor<T>& input, const Conditioning<T>& cond,
                            const Model<T>& model, Mode mode, Rng* rng);

/// Generator on a single color channel: L_d,c and R_c are [B, 1, H, W].
template <typename T>
Tensor<T> generator_forward_channel(const Tensor<T>& ld_c, const Tensor<T>& r_c,
                                    const Conditioning<T>& cond, const Model<T>& model,
                                    Mode mode, Rng* rng);

template <typename T>
struct Prediction {
  Tensor<T> S_ind, L_ind, L;
};

/// Full inference path on [B, 3, H, W] L_d and R and [B, 7, H, W] geometry.
/// The geometry encoder and conditioning run once; the generator handles the
/// three channels as one batch of 3B single-channel rows.
template <typename T>
Prediction<T> predict_indirect(const Tensor<T>& ld, const Tensor<T>& r, const Tensor<T>& geometry,
                               const Model<T>& model, Mode mode, Rng* rng);

/// Splits [B, 3, H, W] into [3B, 1, H, W] rows ordered (b, channel).
template <typename T>
Tensor<T> channels_to_rows(const Tensor<T>& x);
template <typename T>
Tensor<T> rows_to_channels(const Tensor<T>& x);

/// PatchGAN logits [N, 1, H/16, W/16] for [N, 3, H, W] inputs
/// (log1p(L_c), log1p(L_d,c), R_c).
template <typename T>
Tensor<T> discriminator_forward(const Tensor<T>& input, const Model<T>& model);

/// Discriminator input rows for composited radiance `l` [B, 3, H, W].
template <typename T>
Tensor<T> discriminator_input(const Tensor<T>& l, const Tensor<T>& ld, const Tensor<T>& r);

}  // namespace ngi
