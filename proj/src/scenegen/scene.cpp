// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/scenegen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ngi/numerics/rng.hpp"

namespace ngi {

Rgb Material::albedo_at(const Vec3& p) const {
  if (texture == Texture::kSolid) return albedo;
  const double s = texture_scale;
  long cell = 0;
  if (texture == Texture::kChecker) {
    cell = static_cast<long>(std::floor(p.x() / s) + std::floor(p.y() / s) + std::floor(p.z() / s));
  } else {
    // Horizontal stripes on walls, parallel lines on floors.
    cell = static_cast<long>(std::floor((p.y() + p.x()) / s));
  }
  return (cell & 1) ? albedo2 : albedo;
}

double Material::max_albedo() const {
  double m = albedo.maxCoeff();
  if (texture != Texture::kSolid) m = std::max(m, albedo2.maxCoeff());
  return m;
}

bool Room::contains(const Vec3& p) const {
  return (p.array() > lo.array()).all() && (p.array() < hi.array()).all();
}

double Scene::extent() const {
  if (room) return (room->hi - room->lo).norm();
  Eigen::AlignedBox3d bounds;
  for (const auto& b : boxes) {
    bounds.extend(b.lo);
    bounds.extend(b.hi);
  }
  for (const auto& q : quads) {
    bounds.extend(q.origin);
    bounds.extend(Vec3(q.origin + q.edge_u));
    bounds.extend(Vec3(q.origin + q.edge_v));
    bounds.extend(Vec3(q.origin + q.edge_u + q.edge_v));
  }
  for (const auto& l : lights) {
    if (l.kind != LightKind::kDirectional) bounds.extend(l.position);
  }
  if (bounds.isEmpty()) return 1.0;
  return std::max(bounds.diagonal().norm(), 1e-6);
}

double Scene::max_albedo() const {
  double m = 0.0;
  if (room) {
    for (const auto& w : room->walls) m = std::max(m, w.max_albedo());
  }
  for (const auto& b : boxes) m = std::max(m, b.material.max_albedo());
  for (const auto& q : quads) m = std::max(m, q.material.max_albedo());
  return m;
}

Scene Scene::scaled_lights(double factor) const {
  Scene s = *this;
  for (auto& l : s.lights) l.intensity *= factor;
  return s;
}

namespace {

Material textured(Texture t, const Rgb& a, const Rgb& b, double scale) {
  return {a, t, b, scale};
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(v.size()) - 1))];
}

}  // namespace

SceneRules SceneRules::defaults() {
  SceneRules r;
  r.wall_palette = {
      Material::solid(Rgb(0.75, 0.75, 0.75)),
      Material::solid(Rgb(0.70, 0.16, 0.12)),
      Material::solid(Rgb(0.16, 0.58, 0.20)),
      Material::solid(Rgb(0.20, 0.30, 0.70)),
      Material::solid(Rgb(0.80, 0.72, 0.55)),
      textured(Texture::kStripe, Rgb(0.78, 0.76, 0.70), Rgb(0.45, 0.50, 0.62), 0.4),
  };
  r.floor_palette = {
      textured(Texture::kChecker, Rgb(0.55, 0.38, 0.22), Rgb(0.32, 0.20, 0.11), 0.6),
      textured(Texture::kChecker, Rgb(0.70, 0.70, 0.70), Rgb(0.25, 0.25, 0.25), 0.5),
      Material::solid(Rgb(0.45, 0.35, 0.28)),
      textured(Texture::kStripe, Rgb(0.60, 0.45, 0.30), Rgb(0.48, 0.34, 0.22), 0.25),
  };
  r.ceiling_palette = {
      Material::solid(Rgb(0.80, 0.80, 0.80)),
      Material::solid(Rgb(0.72, 0.70, 0.66)),
  };
  r.obstacle_palette = {
      Material::solid(Rgb(0.80, 0.55, 0.20)),
      Material::solid(Rgb(0.25, 0.45, 0.75)),
      Material::solid(Rgb(0.65, 0.65, 0.65)),
      Material::solid(Rgb(0.55, 0.20, 0.55)),
      textured(Texture::kChecker, Rgb(0.85, 0.85, 0.80), Rgb(0.15, 0.15, 0.18), 0.15),
      textured(Texture::kStripe, Rgb(0.70, 0.20, 0.15), Rgb(0.85, 0.80, 0.70), 0.12),
  };
  return r;
}

SceneRules SceneRules::single_palette(const Material& m) {
  SceneRules r = defaults();
  r.wall_palette = r.floor_palette = r.ceiling_palette = r.obstacle_palette = {m};
  return r;
}

Scene build_random_scene(std::uint64_t seed, const SceneRules& rules) {
  Rng rng(seed, 0x5ce4e);
  Scene scene;
  scene.seed = seed;

  Room room;
  room.lo = Vec3::Zero();
  for (int a = 0; a < 3; ++a) room.hi[a] = rng.uniform(rules.room_min[a], rules.room_max[a]);
  for (int w : {0, 1, 4, 5}) room.walls[static_cast<std::size_t>(w)] = pick(rules.wall_palette, rng);
  room.walls[2] = pick(rules.floor_palette, rng);
  room.walls[3] = pick(rules.ceiling_palette, rng);
  scene.room = room;
  const Vec3 size = room.hi;

  const auto n_boxes = rng.uniform_int(rules.min_obstacles, rules.max_obstacles);
  for (std::int64_t i = 0; i < n_boxes; ++i) {
    Box b;
    const double sx = rng.uniform(0.3, std::min(1.2, 0.4 * size.x()));
    const double sz = rng.uniform(0.3, std::min(1.2, 0.4 * size.z()));
    const double sy = rng.uniform(0.3, std::min(1.8, 0.6 * size.y()));
    const double x0 = rng.uniform(0.2, size.x() - 0.2 - sx);
    const double z0 = rng.uniform(0.2, size.z() - 0.2 - sz);
    b.lo = Vec3(x0, 0.0, z0);
    b.hi = Vec3(x0 + sx, sy, z0 + sz);
    b.material = pick(rules.obstacle_palette, rng);
    scene.boxes.push_back(b);
  }

  const auto n_lights = rng.uniform_int(rules.min_lights, rules.max_lights);
  for (std::int64_t i = 0; i < n_lights; ++i) {
    const bool spherical = rng.uniform() < rules.spherical_probability;
    const double radius = spherical ? rng.uniform(rules.radius_min, rules.radius_max) : 0.0;
    const double margin = radius + 0.05;
    const double band_lo = size.y() * (1.0 - rules.light_band);
    const Vec3 pos(rng.uniform(0.5, size.x() - 0.5), rng.uniform(band_lo, size.y() - margin),
                   rng.uniform(0.5, size.z() - 0.5));
    const double power = std::exp(
        rng.uniform(std::log(rules.intensity_min), std::log(rules.intensity_max)));
    Rgb tint = Rgb::Ones();
    if (rng.uniform() < rules.colored_light_probability) {
      tint = Rgb(rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0));
      tint /= tint.mean();
    }
    scene.lights.push_back(spherical ? Light::spherical(pos, power * tint, radius)
                                     : Light::point(pos, power * tint));
  }
  return scene;
}

Scene build_long_range_scene(std::uint64_t seed) {
  Rng rng(seed, 0x10a6);
  Scene scene;
  scene.seed = seed;
  auto albedo = [&rng](double lo, double hi) {
    const double g = rng.uniform(lo, hi);
    Rgb a(g * rng.uniform(0.8, 1.2), g * rng.uniform(0.8, 1.2), g * rng.uniform(0.8, 1.2));
    return Material::solid(a.min(0.95));
  };

  Room room;
  room.hi = Vec3(4.0, 3.0, 3.0);
  for (auto& w : room.walls) w = albedo(0.4, 0.8);
  room.walls[2] = albedo(0.3, 0.9);
  scene.room = room;

  const double edge = rng.uniform(1.2, 1.5);
  scene.boxes.push_back({Vec3(edge, kLongRangeSlabHeight, -0.5),
                         Vec3(4.5, kLongRangeSlabHeight + 0.1, 3.5), albedo(0.5, 0.9)});
  const auto n_boxes = rng.uniform_int(0, 2);
  for (std::int64_t i = 0; i < n_boxes; ++i) {
    const double s = rng.uniform(0.2, 0.4);
    const double x0 = rng.uniform(0.6, 3.4 - s), z0 = rng.uniform(0.3, 2.7 - s);
    scene.boxes.push_back({Vec3(x0, 0.0, z0), Vec3(x0 + s, rng.uniform(0.1, 0.4), z0 + s),
                           albedo(0.3, 0.9)});
  }

  const double irradiance = std::exp(rng.uniform(std::log(1.0), std::log(12.0)));
  Rgb tint(rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0));
  tint /= tint.mean();
  scene.lights.push_back(Light::directional(
      Vec3(rng.uniform(-0.05, 0.05), -1.0, rng.uniform(-0.05, 0.05)), irradiance * tint));
  return scene;
}

}  // namespace ngi
