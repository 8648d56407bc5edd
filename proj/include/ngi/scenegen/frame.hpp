// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "ngi/scenegen/image.hpp"
#include "ngi/scenegen/tracer.hpp"

namespace ngi {

inline constexpr float kDemodEpsilon = 1e-3f;

/// Factorized buffers of one rendered view.
struct FrameRecord {
  Image L_d, L_ind, R, N, D, P, S_ind;
  Camera camera;
  std::uint64_t scene_seed = 0;
  std::uint64_t render_seed = 0;
  int spp = 0;
  double scene_extent = 1.0;
};

struct RenderConfig {
  int spp = 256;
  int max_bounces = 4;
  float demod_epsilon = kDemodEpsilon;
};

/// S = L_ind / R per channel where R ≥ eps, else 0.
Image demodulate_shading(const Image& L_ind, const Image& R, float eps = kDemodEpsilon);
/// L = L_d + R ⊙ S. Throws std::invalid_argument on shape mismatch.
Image compose_global(const Image& L_d, const Image& R, const Image& S);

/// Renders every buffer. Deterministic in (scene, camera, render_seed).
FrameRecord render_frame(const Scene& scene, const Camera& camera, const RenderConfig& cfg,
                         std::uint64_t render_seed);

struct ViewFilterConfig {
  double min_mean_depth = 0.8;
  double min_depth_var = 0.05;
  double max_dark_fraction = 0.10;
  int probe_size = 32;
};

struct ViewFilterResult {
  bool accepted = false;
  double mean_depth = 0.0;
  double depth_var = 0.0;
  double dark_fraction = 1.0;
};

/// Probes the view with primary rays only. Escaped rays and back-face hits
/// count as dark; depth statistics are over the remaining pixels.
ViewFilterResult filter_viewpoint(const Camera& camera, const Scene& scene,
                                  const ViewFilterConfig& cfg = {});

/// Random camera inside the room (or the unit cube without one), unfiltered.
Camera random_camera(const Scene& scene, Rng& rng, int width, int height);

/// Near-top-down camera over the floor of a long-range scene, below its slab.
Camera long_range_camera(Rng& rng, int width, int height);

/// Draws random cameras inside the room until one passes the filter.
/// Returns nullopt after `max_attempts` rejections.
std::optional<Camera> sample_viewpoint(const Scene& scene, Rng& rng, int width, int height,
                                       const ViewFilterConfig& cfg = {}, int max_attempts = 64);

}  // namespace ngi
