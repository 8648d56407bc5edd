// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/scenegen/frame.hpp"

#include <stdexcept>

namespace ngi {

Image demodulate_shading(const Image& L_ind, const Image& R, float eps) {
  if (!L_ind.same_shape(R)) throw std::invalid_argument("demodulate_shading: shape mismatch");
  Image S(L_ind.channels, L_ind.height, L_ind.width);
  for (std::size_t i = 0; i < S.data.size(); ++i) {
    S.data[i] = R.data[i] >= eps ? L_ind.data[i] / R.data[i] : 0.0f;
  }
  return S;
}

Image compose_global(const Image& L_d, const Image& R, const Image& S) {
  if (!L_d.same_shape(R) || !L_d.same_shape(S)) {
    throw std::invalid_argument("compose_global: shape mismatch");
  }
  Image L = L_d;
  for (std::size_t i = 0; i < L.data.size(); ++i) L.data[i] += R.data[i] * S.data[i];
  return L;
}

FrameRecord render_frame(const Scene& scene, const Camera& camera, const RenderConfig& cfg,
                         std::uint64_t render_seed) {
  auto direct = trace_direct(scene, camera);
  FrameRecord f;
  f.L_ind = trace_indirect(scene, camera, cfg.spp, cfg.max_bounces, render_seed);
  f.S_ind = demodulate_shading(f.L_ind, direct.R, cfg.demod_epsilon);
  f.L_d = std::move(direct.L_d);
  f.R = std::move(direct.R);
  f.N = std::move(direct.N);
  f.D = std::move(direct.D);
  f.P = std::move(direct.P);
  f.camera = camera;
  f.scene_seed = scene.seed;
  f.render_seed = render_seed;
  f.spp = cfg.spp;
  f.scene_extent = scene.extent();
  return f;
}

ViewFilterResult filter_viewpoint(const Camera& camera, const Scene& scene,
                                  const ViewFilterConfig& cfg) {
  ViewFilterResult r;
  Camera probe = camera;
  probe.width = probe.height = cfg.probe_size;
  CameraBasis basis;
  try {
    basis = CameraBasis::from(probe);
  } catch (const CameraError&) {
    return r;
  }
  double sum = 0.0, sum2 = 0.0;
  int valid = 0, dark = 0;
  for (int y = 0; y < probe.height; ++y) {
    for (int x = 0; x < probe.width; ++x) {
      const Ray ray = primary_ray(probe, basis, x, y);
      auto hit = intersect(scene, ray);
      if (!hit || hit->back_face) {
        ++dark;
        continue;
      }
      const double depth = (hit->point - probe.position).dot(basis.forward);
      sum += depth;
      sum2 += depth * depth;
      ++valid;
    }
  }
  const int total = probe.width * probe.height;
  r.dark_fraction = static_cast<double>(dark) / total;
  if (valid > 0) {
    r.mean_depth = sum / valid;
    r.depth_var = std::max(0.0, sum2 / valid - r.mean_depth * r.mean_depth);
  }
  r.accepted = r.mean_depth >= cfg.min_mean_depth && r.depth_var >= cfg.min_depth_var &&
               r.dark_fraction <= cfg.max_dark_fraction;
  return r;
}

Camera random_camera(const Scene& scene, Rng& rng, int width, int height) {
  Vec3 lo = Vec3::Constant(-1.0), hi = Vec3::Constant(1.0);
  if (scene.room) {
    lo = scene.room->lo;
    hi = scene.room->hi;
  }
  const Vec3 size = hi - lo;
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.vfov_deg = rng.uniform(50.0, 70.0);
  cam.position = Vec3(lo.x() + rng.uniform(0.1, 0.9) * size.x(),
                      lo.y() + rng.uniform(0.35, 0.7) * size.y(),
                      lo.z() + rng.uniform(0.1, 0.9) * size.z());
  cam.look_at = Vec3(lo.x() + rng.uniform(0.0, 1.0) * size.x(),
                     lo.y() + rng.uniform(0.1, 0.6) * size.y(),
                     lo.z() + rng.uniform(0.0, 1.0) * size.z());
  return cam;
}

Camera long_range_camera(Rng& rng, int width, int height) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.vfov_deg = 60.0;
  cam.position = Vec3(rng.uniform(1.9, 2.1), 2.4, rng.uniform(1.4, 1.6));
  cam.look_at = cam.position + Vec3(0.0, -2.4, 0.3);
  return cam;
}

std::optional<Camera> sample_viewpoint(const Scene& scene, Rng& rng, int width, int height,
                                       const ViewFilterConfig& cfg, int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const Camera cam = random_camera(scene, rng, width, height);
    if (filter_viewpoint(cam, scene, cfg).accepted) return cam;
  }
  return std::nullopt;
}

}  // namespace ngi
