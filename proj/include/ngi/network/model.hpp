// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ngi/numerics/optim.hpp"
#include "ngi/numerics/tensor.hpp"

namespace ngi {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Geometry input channels: camera-space normal (3), depth (1), position (3).
inline constexpr int kGeometryChannels = 7;

struct ModelConfig {
  int levels = 4;
  int base_width = 16;
  /// Width of the geometry encoder's first level; doubles per level.
  int geometry_width = 8;
  int heads = 8;
  int key_dim = 8;
  int height = 128;
  int width = 128;
  double dropout = 0.1;
  double leaky_slope = 0.2;
  int disc_width = 16;
  bool use_gfa = true;
  /// False selects the RGB-in/RGB-out generator without channel sharing.
  bool monochromatic = true;

  int width_at(int level) const { return base_width << level; }
  int geometry_width_at(int level) const { return geometry_width << level; }
  /// Channels of f̂_g at a level: encoded features plus raw geometry.
  int conditioning_channels(int level) const {
    return geometry_width_at(level) + kGeometryChannels;
  }
  int generator_in_channels() const { return monochromatic ? 2 : 6; }
  int generator_out_channels() const { return monochromatic ? 1 : 3; }

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
  /// Throws ConfigError if an H×W input cannot pass through the network.
  void check_resolution(std::int64_t h, std::int64_t w) const;
};

/// Named parameter tensors in creation order.
template <typename T>
class ParamStore {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> value);
  const Tensor<T>& operator[](const std::string& name) const;
  Tensor<T>& at(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const ParameterList<T>& list() const { return list_; }
  ParameterList<T>& list() { return list_; }
  /// Parameters whose names start with any of `prefixes`, in creation order.
  /// The returned tensors alias the stored ones.
  ParameterList<T> group(const std::vector<std::string>& prefixes) const;
  std::int64_t count(const std::string& prefix = "") const;

 private:
  ParameterList<T> list_;
  std::map<std::string, std::size_t> index_;
};

/// Counters for checking how often expensive stages run.
struct CallCounters {
  std::int64_t geometry_encoder_calls = 0;
  std::int64_t geometry_encoder_frames = 0;
  std::int64_t generator_passes = 0;
  std::int64_t generator_channel_rows = 0;
};

/// Geometry encoder, shading generator and discriminator parameters. The
/// generator holds one copy of its weights for all color channels.
template <typename T>
struct Model {
  ModelConfig config;
  ParamStore<T> params;
  mutable CallCounters counters;

  /// Xavier-initialized model; identical seeds give identical weights.
  static Model create(const ModelConfig& config, std::uint64_t seed);

  ParameterList<T> generator_params() const { return params.group({"geo.", "gen."}); }
  ParameterList<T> discriminator_params() const { return params.group({"disc."}); }
};

template <typename To, typename From>
Model<To> cast_model(const Model<From>& m);

/// Parameter totals derived from the config alone, for cross-checking.
struct ParamCount {
  std::int64_t geometry = 0;
  std::int64_t generator = 0;
  std::int64_t gfa = 0;
  std::int64_t discriminator = 0;
  std::int64_t total() const { return geometry + generator + discriminator; }
};
ParamCount analytic_param_count(const ModelConfig& c);
/// Parameters added to the GFA block by one more attention head.
std::int64_t gfa_params_per_head(const ModelConfig& c);

/// Radius in input pixels (Chebyshev distance) beyond which an input pixel
/// cannot influence an output pixel when GFA is disabled.
int receptive_field_radius(const ModelConfig& c);

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template struct Model<float>;
extern template struct Model<double>;

}  // namespace ngi
