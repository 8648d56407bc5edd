// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/scenegen/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ngi/util/parallel.hpp"

namespace ngi {

CameraBasis CameraBasis::from(const Camera& camera) {
  if (camera.width <= 0 || camera.height <= 0) {
    throw CameraError("camera resolution must be positive");
  }
  if (!(camera.vfov_deg > 0.0 && camera.vfov_deg < 180.0)) {
    throw CameraError("camera vertical FOV must be in (0, 180) degrees");
  }
  const Vec3 view = camera.look_at - camera.position;
  if (!view.allFinite() || view.norm() < 1e-9) {
    throw CameraError("camera look-at coincides with position");
  }
  CameraBasis b;
  b.forward = view.normalized();
  const Vec3 side = b.forward.cross(Vec3::UnitY());
  if (side.norm() < 1e-6) throw CameraError("camera view direction is parallel to world up");
  b.right = side.normalized();
  b.up = b.right.cross(b.forward);
  return b;
}

Ray primary_ray(const Camera& camera, const CameraBasis& basis, int x, int y) {
  const double tan_half = std::tan(camera.vfov_deg * std::numbers::pi / 360.0);
  const double aspect = static_cast<double>(camera.width) / camera.height;
  const double sx = (2.0 * (x + 0.5) / camera.width - 1.0) * tan_half * aspect;
  const double sy = (1.0 - 2.0 * (y + 0.5) / camera.height) * tan_half;
  return {camera.position, (basis.forward + sx * basis.right + sy * basis.up).normalized()};
}

namespace {

struct Slab {
  double t0, t1;
  int axis0, axis1;
};

// Entry and exit parameters of a ray against an axis-aligned box.
std::optional<Slab> slab_test(const Vec3& lo, const Vec3& hi, const Ray& ray) {
  Slab s{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), -1, -1};
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a], d = ray.dir[a];
    if (std::abs(d) < 1e-300) {
      if (o < lo[a] || o > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - o) / d, tb = (hi[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    if (ta > s.t0) {
      s.t0 = ta;
      s.axis0 = a;
    }
    if (tb < s.t1) {
      s.t1 = tb;
      s.axis1 = a;
    }
  }
  if (s.t0 > s.t1) return std::nullopt;
  return s;
}

Vec3 axis_normal(int axis, double sign) {
  Vec3 n = Vec3::Zero();
  n[axis] = sign;
  return n;
}

void consider(std::optional<Hit>& best, double& tmax, Hit h) {
  if (h.t < tmax) {
    tmax = h.t;
    best = std::move(h);
  }
}

void intersect_room(const Room& room, const Ray& ray, double tmin, double& tmax,
                    std::optional<Hit>& best) {
  auto slab = slab_test(room.lo, room.hi, ray);
  if (!slab) return;
  if (room.contains(ray.origin)) {
    if (slab->t1 <= tmin || slab->t1 >= tmax || slab->axis1 < 0) return;
    const int a = slab->axis1;
    const bool high = ray.dir[a] > 0;
    Hit h;
    h.t = slab->t1;
    h.point = ray.origin + h.t * ray.dir;
    h.normal = axis_normal(a, high ? -1.0 : 1.0);
    h.albedo = room.walls[static_cast<std::size_t>(2 * a + (high ? 1 : 0))].albedo_at(h.point);
    consider(best, tmax, std::move(h));
    return;
  }
  if (slab->t0 > tmin && slab->t0 < tmax && slab->axis0 >= 0) {
    Hit h;
    h.t = slab->t0;
    h.point = ray.origin + h.t * ray.dir;
    h.normal = axis_normal(slab->axis0, ray.dir[slab->axis0] > 0 ? -1.0 : 1.0);
    h.back_face = true;
    consider(best, tmax, std::move(h));
  }
}

void intersect_box(const Box& box, const Ray& ray, double tmin, double& tmax,
                   std::optional<Hit>& best) {
  auto slab = slab_test(box.lo, box.hi, ray);
  if (!slab) return;
  if (slab->t0 > tmin) {
    if (slab->t0 >= tmax || slab->axis0 < 0) return;
    Hit h;
    h.t = slab->t0;
    h.point = ray.origin + h.t * ray.dir;
    h.normal = axis_normal(slab->axis0, ray.dir[slab->axis0] > 0 ? -1.0 : 1.0);
    h.albedo = box.material.albedo_at(h.point);
    consider(best, tmax, std::move(h));
  } else if (slab->t1 > tmin && slab->t1 < tmax && slab->axis1 >= 0) {
    Hit h;
    h.t = slab->t1;
    h.point = ray.origin + h.t * ray.dir;
    h.normal = axis_normal(slab->axis1, ray.dir[slab->axis1] > 0 ? 1.0 : -1.0);
    h.back_face = true;
    consider(best, tmax, std::move(h));
  }
}

void intersect_quad(const Quad& q, const Ray& ray, double tmin, double& tmax,
                    std::optional<Hit>& best) {
  const Vec3 n = q.edge_u.cross(q.edge_v);
  const double denom = ray.dir.dot(n);
  if (std::abs(denom) < 1e-14 * n.norm()) return;
  const double t = (q.origin - ray.origin).dot(n) / denom;
  if (t <= tmin || t >= tmax) return;
  const Vec3 p = ray.origin + t * ray.dir;
  const Vec3 rel = p - q.origin;
  const Vec3 w = n / n.squaredNorm();
  const double alpha = w.dot(rel.cross(q.edge_v));
  const double beta = w.dot(q.edge_u.cross(rel));
  if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0) return;
  Hit h;
  h.t = t;
  h.point = p;
  h.normal = n.normalized();
  if (denom > 0) h.normal = -h.normal;
  h.albedo = q.material.albedo_at(p);
  consider(best, tmax, std::move(h));
}

// Orthonormal tangents for a unit normal (Duff et al. 2017).
void tangent_frame(const Vec3& n, Vec3& t, Vec3& b) {
  const double sign = std::copysign(1.0, n.z());
  const double a = -1.0 / (sign + n.z());
  const double c = n.x() * n.y() * a;
  t = Vec3(1.0 + sign * n.x() * n.x() * a, sign * c, -sign * n.x());
  b = Vec3(c, sign + n.y() * n.y() * a, -n.y());
}

Rgb spherical_irradiance(const Scene& scene, const Light& l, const Hit& hit, const Vec3& origin,
                         Rng* rng) {
  const Vec3 to = l.position - hit.point;
  const double dc = to.norm();
  const Vec3 w = to / dc;
  Vec3 tu, tv;
  tangent_frame(w, tu, tv);
  const double cos_max = std::sqrt(std::max(0.0, 1.0 - (l.radius * l.radius) / (dc * dc)));
  const double solid_angle = 2.0 * std::numbers::pi * (1.0 - cos_max);
  const double dc2_minus_r2 = dc * dc - l.radius * l.radius;
  auto sample = [&](double u1, double u2) -> double {
    const double cos_t = 1.0 - u1 * (1.0 - cos_max);
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = 2.0 * std::numbers::pi * u2;
    const Vec3 dir = (cos_t * w + sin_t * std::cos(phi) * tu + sin_t * std::sin(phi) * tv).normalized();
    const double c = hit.normal.dot(dir);
    if (c <= 0.0) return 0.0;
    const double b = dir.dot(to);
    const double t = b - std::sqrt(std::max(0.0, b * b - dc2_minus_r2));
    if (occluded(scene, {origin, dir}, t)) return 0.0;
    return c;
  };
  double acc = 0.0;
  int count = 0;
  if (rng) {
    const double u1 = rng->uniform(), u2 = rng->uniform();
    acc = sample(u1, u2);
    count = 1;
  } else {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) acc += sample((i + 0.5) / 4.0, (j + 0.5) / 4.0);
    }
    count = 16;
  }
  const Rgb radiance = l.intensity / (std::numbers::pi * l.radius * l.radius);
  return radiance * (acc * solid_angle / count);
}

}  // namespace

std::optional<Hit> intersect(const Scene& scene, const Ray& ray, double tmin, double tmax) {
  std::optional<Hit> best;
  if (scene.room) intersect_room(*scene.room, ray, tmin, tmax, best);
  for (const auto& b : scene.boxes) intersect_box(b, ray, tmin, tmax, best);
  for (const auto& q : scene.quads) intersect_quad(q, ray, tmin, tmax, best);
  return best;
}

bool occluded(const Scene& scene, const Ray& ray, double tmax, bool include_room) {
  std::optional<Hit> best;
  const double tmin = 1e-7;
  double limit = tmax;
  for (const auto& b : scene.boxes) {
    intersect_box(b, ray, tmin, limit, best);
    if (best) return true;
  }
  for (const auto& q : scene.quads) {
    intersect_quad(q, ray, tmin, limit, best);
    if (best) return true;
  }
  if (include_room && scene.room) {
    intersect_room(*scene.room, ray, tmin, limit, best);
    if (best) return true;
  }
  return false;
}

Rgb direct_irradiance(const Scene& scene, const Hit& hit, Rng* rng) {
  Rgb e = Rgb::Zero();
  const Vec3 origin = hit.point + kRayEpsilon * hit.normal;
  for (const auto& l : scene.lights) {
    switch (l.kind) {
      case LightKind::kSpherical: {
        const Vec3 to = l.position - hit.point;
        if (to.norm() > l.radius * (1.0 + 1e-9)) {
          e += spherical_irradiance(scene, l, hit, origin, rng);
          break;
        }
        // Shading point inside the emitter: use the point-light limit.
        [[fallthrough]];
      }
      case LightKind::kPoint: {
        const Vec3 to = l.position - hit.point;
        const double d2 = to.squaredNorm();
        if (d2 <= 0.0) break;
        const double d = std::sqrt(d2);
        const Vec3 w = to / d;
        const double c = hit.normal.dot(w);
        if (c <= 0.0) break;
        if (occluded(scene, {origin, w}, (l.position - origin).norm())) break;
        e += l.intensity * (c / d2);
        break;
      }
      case LightKind::kDirectional: {
        const Vec3 w = -l.direction;
        const double c = hit.normal.dot(w);
        if (c <= 0.0) break;
        if (occluded(scene, {origin, w}, std::numeric_limits<double>::infinity(), false)) break;
        e += l.intensity * c;
        break;
      }
    }
  }
  return e;
}

Vec3 sample_cosine_hemisphere(const Vec3& n, Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform();
  const double r = std::sqrt(u1);
  const double phi = 2.0 * std::numbers::pi * u2;
  Vec3 t, b;
  tangent_frame(n, t, b);
  const double z = std::sqrt(std::max(0.0, 1.0 - u1));
  return (r * std::cos(phi) * t + r * std::sin(phi) * b + z * n).normalized();
}

namespace {

std::optional<Hit> first_hit(const Scene& scene, const Camera& camera, const CameraBasis& basis,
                             int x, int y) {
  auto hit = intersect(scene, primary_ray(camera, basis, x, y));
  if (!hit || hit->back_face) return std::nullopt;
  return hit;
}

}  // namespace

DirectBuffers trace_direct(const Scene& scene, const Camera& camera) {
  const CameraBasis basis = CameraBasis::from(camera);
  const int W = camera.width, H = camera.height;
  DirectBuffers out{Image(3, H, W), Image(3, H, W), Image(3, H, W), Image(1, H, W),
                    Image(3, H, W)};
  parallel_for(H, [&](std::int64_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < W; ++x) {
      auto hit = first_hit(scene, camera, basis, x, y);
      if (!hit) continue;
      const Rgb ld = direct_radiance(scene, *hit);
      const Vec3 n = basis.to_camera_dir(hit->normal);
      const Vec3 p = basis.to_camera_dir(hit->point - camera.position);
      for (int c = 0; c < 3; ++c) {
        out.L_d.at(c, y, x) = static_cast<float>(ld[c]);
        out.R.at(c, y, x) = static_cast<float>(hit->albedo[c]);
        out.N.at(c, y, x) = static_cast<float>(n[c]);
        out.P.at(c, y, x) = static_cast<float>(p[c]);
      }
      out.D.at(0, y, x) = static_cast<float>(-p.z());
    }
  });
  return out;
}

Rgb indirect_radiance(const Scene& scene, const Hit& hit, int spp, int max_bounces, Rng& rng) {
  Rgb sum = Rgb::Zero();
  if (spp <= 0) return sum;
  for (int s = 0; s < spp; ++s) {
    Hit cur = hit;
    Rgb beta = cur.albedo;
    for (int bounce = 0; bounce < max_bounces; ++bounce) {
      if ((beta == 0.0).all()) break;
      const Vec3 dir = sample_cosine_hemisphere(cur.normal, rng);
      auto next = intersect(scene, {cur.point + kRayEpsilon * cur.normal, dir});
      if (!next || next->back_face) break;
      sum += beta * direct_radiance(scene, *next, &rng);
      beta *= next->albedo;
      cur = *next;
    }
  }
  return sum / spp;
}

Image trace_indirect(const Scene& scene, const Camera& camera, int spp, int max_bounces,
                     std::uint64_t seed) {
  const CameraBasis basis = CameraBasis::from(camera);
  const int W = camera.width, H = camera.height;
  Image out(3, H, W);
  if (spp <= 0 || max_bounces <= 0) return out;
  parallel_for(H, [&](std::int64_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < W; ++x) {
      auto first = first_hit(scene, camera, basis, x, y);
      if (!first) continue;
      Rng rng(seed, static_cast<std::uint64_t>(y) * W + x);
      const Rgb mean = indirect_radiance(scene, *first, spp, max_bounces, rng);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = static_cast<float>(mean[c]);
    }
  });
  return out;
}

}  // namespace ngi
