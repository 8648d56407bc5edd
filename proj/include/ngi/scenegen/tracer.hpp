// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "ngi/numerics/rng.hpp"
#include "ngi/scenegen/image.hpp"
#include "ngi/scenegen/scene.hpp"

namespace ngi {

class CameraError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Camera {
  Vec3 position = Vec3::Zero();
  Vec3 look_at = Vec3(0, 0, -1);
  double vfov_deg = 60.0;
  int width = 128;
  int height = 128;
};

/// Orthonormal camera frame. Camera space is x = right, y = up, z = -forward.
struct CameraBasis {
  Vec3 right, up, forward;

  /// Throws CameraError for a zero-length view direction, a view direction
  /// parallel to world up, or a non-positive field of view or resolution.
  static CameraBasis from(const Camera& camera);
  Vec3 to_camera_dir(const Vec3& v) const { return {v.dot(right), v.dot(up), -v.dot(forward)}; }
};

struct Ray {
  Vec3 origin;
  Vec3 dir;
};

/// Primary ray through the center of pixel (x, y); row 0 is the top row.
Ray primary_ray(const Camera& camera, const CameraBasis& basis, int x, int y);

struct Hit {
  double t = 0.0;
  Vec3 point = Vec3::Zero();
  /// Shading normal, oriented against the incoming ray for front-face hits.
  Vec3 normal = Vec3::Zero();
  Rgb albedo = Rgb::Zero();
  /// The ray struck the back of a one-sided surface (the outside of the room
  /// shell, or the inside of an obstacle). Such hits are treated as empty.
  bool back_face = false;
};

inline constexpr double kRayEpsilon = 1e-4;

/// Closest intersection along `ray` with t in (tmin, tmax).
std::optional<Hit> intersect(const Scene& scene, const Ray& ray, double tmin = 1e-7,
                             double tmax = 1e30);
/// True if anything blocks the segment origin + t·dir, t in (tmin, tmax).
/// The room shell is skipped when `include_room` is false.
bool occluded(const Scene& scene, const Ray& ray, double tmax, bool include_room = true);

/// Irradiance at `hit` from all lights, per channel. Spherical lights use a
/// 4×4 stratified cone quadrature when `rng` is null, otherwise one jittered
/// sample from `rng`.
Rgb direct_irradiance(const Scene& scene, const Hit& hit, Rng* rng = nullptr);

/// Lambertian outgoing radiance (ρ/π)·E at `hit` due to direct lighting.
inline Rgb direct_radiance(const Scene& scene, const Hit& hit, Rng* rng = nullptr) {
  return hit.albedo * direct_irradiance(scene, hit, rng) / 3.14159265358979323846;
}

/// Cosine-weighted direction on the hemisphere around unit normal `n`.
Vec3 sample_cosine_hemisphere(const Vec3& n, Rng& rng);

/// Indirect outgoing radiance at a surface point: the mean over `spp` paths of
/// up to `max_bounces` cosine-sampled segments, each vertex lit by NEE.
Rgb indirect_radiance(const Scene& scene, const Hit& hit, int spp, int max_bounces, Rng& rng);

struct DirectBuffers {
  Image L_d, R, N, D, P;
};

DirectBuffers trace_direct(const Scene& scene, const Camera& camera);

/// Indirect radiance with `spp` cosine-weighted paths per pixel and next-event
/// estimation at every vertex after the first. Pixel i draws from stream
/// (seed, i).
Image trace_indirect(const Scene& scene, const Camera& camera, int spp, int max_bounces,
                     std::uint64_t seed);

}  // namespace ngi
