// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace ngi {

using Vec3 = Eigen::Vector3d;
using Rgb = Eigen::Array3d;

enum class Texture { kSolid, kChecker, kStripe };

/// Lambertian material. Textured materials alternate between `albedo` and
/// `albedo2` on a world-space grid of cell size `texture_scale` meters.
struct Material {
  Rgb albedo = Rgb::Constant(0.5);
  Texture texture = Texture::kSolid;
  Rgb albedo2 = Rgb::Constant(0.5);
  double texture_scale = 0.5;

  static Material solid(const Rgb& rho) { return {rho, Texture::kSolid, rho, 0.5}; }
  Rgb albedo_at(const Vec3& p) const;
  /// Largest reflectance over both texture colors and all channels.
  double max_albedo() const;
};

enum class LightKind { kPoint, kSpherical, kDirectional };

/// Light source. For point and spherical lights `intensity` is radiant
/// intensity (W/sr); for directional lights it is the irradiance normal to
/// `direction`, the unit vector along which the light travels.
struct Light {
  LightKind kind = LightKind::kPoint;
  Vec3 position = Vec3::Zero();
  Vec3 direction = Vec3(0, -1, 0);
  Rgb intensity = Rgb::Ones();
  double radius = 0.0;

  static Light point(const Vec3& p, const Rgb& i) { return {LightKind::kPoint, p, {0, -1, 0}, i, 0}; }
  static Light spherical(const Vec3& p, const Rgb& i, double r) {
    return {LightKind::kSpherical, p, {0, -1, 0}, i, r};
  }
  static Light directional(const Vec3& dir, const Rgb& e) {
    return {LightKind::kDirectional, Vec3::Zero(), dir.normalized(), e, 0};
  }
};

/// Axis-aligned room seen from inside. Walls are one-sided with inward normals,
/// ordered -x, +x, -y (floor), +y (ceiling), -z, +z.
struct Room {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  std::array<Material, 6> walls{};

  bool contains(const Vec3& p) const;
};

/// Solid axis-aligned box with outward normals.
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  Material material;
};

/// Two-sided parallelogram spanned by `edge_u` and `edge_v` from `origin`.
struct Quad {
  Vec3 origin = Vec3::Zero();
  Vec3 edge_u = Vec3::UnitX();
  Vec3 edge_v = Vec3::UnitZ();
  Material material;

  Vec3 normal() const { return edge_u.cross(edge_v).normalized(); }
  double area() const { return edge_u.cross(edge_v).norm(); }
};

struct Scene {
  std::optional<Room> room;
  std::vector<Box> boxes;
  std::vector<Quad> quads;
  std::vector<Light> lights;
  std::uint64_t seed = 0;

  /// Diagonal of the geometry bounding box, used to normalize positions.
  double extent() const;
  double max_albedo() const;
  /// Copy with every light intensity multiplied by `factor`.
  Scene scaled_lights(double factor) const;
};

/// Material palettes per surface class and placement ranges for random scenes.
struct SceneRules {
  std::vector<Material> wall_palette;
  std::vector<Material> floor_palette;
  std::vector<Material> ceiling_palette;
  std::vector<Material> obstacle_palette;
  Vec3 room_min = Vec3(3.5, 2.6, 3.5);
  Vec3 room_max = Vec3(6.0, 3.2, 6.0);
  int min_obstacles = 1;
  int max_obstacles = 4;
  int min_lights = 1;
  int max_lights = 3;
  double light_band = 0.2;
  double intensity_min = 8.0;
  double intensity_max = 40.0;
  double spherical_probability = 0.5;
  double radius_min = 0.05;
  double radius_max = 0.15;
  /// Probability that a light gets a random tint instead of white.
  double colored_light_probability = 0.0;

  static SceneRules defaults();
  static SceneRules single_palette(const Material& m);
};

Scene build_random_scene(std::uint64_t seed, const SceneRules& rules);

/// Open-topped room lit only by a near-vertical directional light. An
/// overhead slab at `kLongRangeSlabHeight` shades every floor point with x
/// beyond a random edge, so the shaded side is lit purely by bounces off the
/// sunlit side. Irradiance, tint and albedos vary per seed.
Scene build_long_range_scene(std::uint64_t seed);
inline constexpr double kLongRangeSlabHeight = 2.6;

}  // namespace ngi
