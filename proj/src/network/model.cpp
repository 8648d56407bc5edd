// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/network/model.hpp"

#include <algorithm>

namespace ngi {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (levels < 1 || levels > 8) fail("levels must be in [1, 8]");
  if (base_width < 1 || geometry_width < 1 || disc_width < 1) fail("widths must be positive");
  if (use_gfa) {
    if (heads < 1 || key_dim < 1) fail("heads and key_dim must be positive");
    if (heads * key_dim > width_at(levels)) {
      fail("heads * key_dim = " + std::to_string(heads * key_dim) +
           " exceeds bottleneck width " + std::to_string(width_at(levels)));
    }
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (!(leaky_slope >= 0.0)) fail("leaky_slope must be nonnegative");
  check_resolution(height, width);
}

void ModelConfig::check_resolution(std::int64_t h, std::int64_t w) const {
  const std::int64_t step = std::int64_t{1} << levels;
  if (h <= 0 || w <= 0 || h % step != 0 || w % step != 0) {
    throw ConfigError("resolution " + std::to_string(w) + "x" + std::to_string(h) +
                      " is not divisible by 2^levels = " + std::to_string(step));
  }
}

template <typename T>
Tensor<T>& ParamStore<T>::add(const std::string& name, Tensor<T> value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
  value.set_requires_grad(true);
  index_[name] = list_.size();
  list_.push_back({name, std::move(value)});
  return list_.back().value;
}

template <typename T>
const Tensor<T>& ParamStore<T>::operator[](const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
  return list_[it->second].value;
}

template <typename T>
Tensor<T>& ParamStore<T>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
  return list_[it->second].value;
}

template <typename T>
ParameterList<T> ParamStore<T>::group(const std::vector<std::string>& prefixes) const {
  ParameterList<T> out;
  for (const auto& p : list_) {
    for (const auto& pre : prefixes) {
      if (p.name.rfind(pre, 0) == 0) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

template <typename T>
std::int64_t ParamStore<T>::count(const std::string& prefix) const {
  std::int64_t n = 0;
  for (const auto& p : list_) {
    if (p.name.rfind(prefix, 0) == 0) n += p.value.numel();
  }
  return n;
}

namespace {

template <typename T>
void add_conv(ParamStore<T>& ps, Rng& rng, const std::string& name, std::int64_t out,
              std::int64_t in, std::int64_t k, bool bias = true, T bias_init = T(0)) {
  ps.add(name + ".w", xavier_init<T>({out, in, k, k}, rng));
  if (bias) ps.add(name + ".b", Tensor<T>::full({out}, bias_init));
}

}  // namespace

template <typename T>
Model<T> Model<T>::create(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  Model<T> m;
  m.config = c;
  Rng rng(seed, 0x9e0);
  auto& ps = m.params;
  const int L = c.levels;

  add_conv(ps, rng, "geo.enc0", c.geometry_width_at(0), kGeometryChannels, 3);
  for (int l = 1; l <= L; ++l) {
    add_conv(ps, rng, "geo.enc" + std::to_string(l), c.geometry_width_at(l),
             c.geometry_width_at(l - 1), 3);
  }
  for (int l = L - 1; l >= 0; --l) {
    add_conv(ps, rng, "geo.up" + std::to_string(l), c.geometry_width_at(l),
             c.geometry_width_at(l + 1), 3);
    add_conv(ps, rng, "geo.dec" + std::to_string(l), c.geometry_width_at(l),
             2 * c.geometry_width_at(l), 3);
  }

  auto add_gcm = [&](int l) {
    const std::string p = "gen.gcm" + std::to_string(l);
    add_conv(ps, rng, p + ".gamma", c.width_at(l), c.conditioning_channels(l), 3, true, T(1));
    add_conv(ps, rng, p + ".beta", c.width_at(l), c.conditioning_channels(l), 3);
  };
  add_conv(ps, rng, "gen.enc0", c.width_at(0), c.generator_in_channels(), 3);
  for (int l = 1; l <= L; ++l) {
    add_conv(ps, rng, "gen.enc" + std::to_string(l), c.width_at(l), c.width_at(l - 1), 3);
  }
  add_gcm(L);
  if (c.use_gfa) {
    const int C = c.width_at(L);
    for (int k = 0; k < c.heads; ++k) {
      const std::string h = std::to_string(k);
      add_conv(ps, rng, "gen.gfa.q" + h, c.key_dim, c.conditioning_channels(L), 1);
      add_conv(ps, rng, "gen.gfa.k" + h, c.key_dim, c.conditioning_channels(L), 1);
      add_conv(ps, rng, "gen.gfa.v" + h, C, C, 1);
    }
    add_conv(ps, rng, "gen.gfa.merge", C, static_cast<std::int64_t>(c.heads) * C, 1, false);
  }
  for (int l = L - 1; l >= 0; --l) {
    add_conv(ps, rng, "gen.up" + std::to_string(l), c.width_at(l), c.width_at(l + 1), 3);
    add_conv(ps, rng, "gen.dec" + std::to_string(l), c.width_at(l), 2 * c.width_at(l), 3);
    add_gcm(l);
  }
  add_conv(ps, rng, "gen.out", c.generator_out_channels(), c.width_at(0), 1);

  const int dw = c.disc_width;
  add_conv(ps, rng, "disc.c0", dw, 3, 3);
  add_conv(ps, rng, "disc.c1", 2 * dw, dw, 3);
  add_conv(ps, rng, "disc.c2", 4 * dw, 2 * dw, 3);
  add_conv(ps, rng, "disc.c3", 8 * dw, 4 * dw, 3);
  add_conv(ps, rng, "disc.out", 1, 8 * dw, 1);
  return m;
}

template <typename To, typename From>
Model<To> cast_model(const Model<From>& m) {
  Model<To> out;
  out.config = m.config;
  for (const auto& p : m.params.list()) out.params.add(p.name, cast<To>(p.value));
  return out;
}

template Model<double> cast_model(const Model<float>&);
template Model<float> cast_model(const Model<double>&);
template Model<float> cast_model(const Model<float>&);

namespace {

std::int64_t conv_params(std::int64_t out, std::int64_t in, std::int64_t k, bool bias = true) {
  return out * in * k * k + (bias ? out : 0);
}

}  // namespace

std::int64_t gfa_params_per_head(const ModelConfig& c) {
  const std::int64_t C = c.width_at(c.levels), Cg = c.conditioning_channels(c.levels);
  const std::int64_t dk = c.key_dim;
  return 2 * (Cg * dk + dk) + (C * C + C) + C * C;
}

ParamCount analytic_param_count(const ModelConfig& c) {
  ParamCount n;
  const int L = c.levels;
  auto g = [&](int l) { return static_cast<std::int64_t>(c.geometry_width_at(l)); };
  auto w = [&](int l) { return static_cast<std::int64_t>(c.width_at(l)); };
  n.geometry = conv_params(g(0), kGeometryChannels, 3);
  for (int l = 1; l <= L; ++l) n.geometry += conv_params(g(l), g(l - 1), 3);
  for (int l = 0; l < L; ++l) n.geometry += conv_params(g(l), g(l + 1), 3) + conv_params(g(l), 2 * g(l), 3);

  auto gcm = [&](int l) { return 2 * conv_params(w(l), c.conditioning_channels(l), 3); };
  n.generator = conv_params(w(0), c.generator_in_channels(), 3) + gcm(L);
  for (int l = 1; l <= L; ++l) n.generator += conv_params(w(l), w(l - 1), 3);
  for (int l = 0; l < L; ++l) {
    n.generator += conv_params(w(l), w(l + 1), 3) + conv_params(w(l), 2 * w(l), 3) + gcm(l);
  }
  n.generator += conv_params(c.generator_out_channels(), w(0), 1);
  if (c.use_gfa) {
    n.gfa = c.heads * gfa_params_per_head(c);
    n.generator += n.gfa;
  }
  const std::int64_t d = c.disc_width;
  n.discriminator = conv_params(d, 3, 3) + conv_params(2 * d, d, 3) + conv_params(4 * d, 2 * d, 3) +
                    conv_params(8 * d, 4 * d, 3) + conv_params(1, 8 * d, 1);
  return n;
}

// Radii are distances from an input pixel to the pixel block covered by a
// feature cell. A 3x3 conv at scale s adds s, nearest upsampling into scale s
// adds s, pooling adds nothing, and elementwise joins take the maximum.
int receptive_field_radius(const ModelConfig& c) {
  const int L = c.levels;
  auto s = [](int l) { return 1 << l; };
  std::vector<int> geo_enc(L + 1), geo(L + 1);
  geo_enc[0] = 1;
  for (int l = 1; l <= L; ++l) geo_enc[l] = geo_enc[l - 1] + s(l);
  geo[L] = geo_enc[L];
  for (int l = L - 1; l >= 0; --l) {
    const int up = geo[l + 1] + 2 * s(l);
    geo[l] = std::max(up, geo_enc[l]) + s(l);
  }
  std::vector<int> enc(L + 1);
  enc[0] = 1;
  for (int l = 1; l <= L; ++l) enc[l] = enc[l - 1] + s(l);
  int x = std::max(enc[L], geo[L] + s(L));
  for (int l = L - 1; l >= 0; --l) {
    x = std::max(x + 2 * s(l), enc[l]) + s(l);
    x = std::max(x, geo[l] + s(l));
  }
  return x;
}

template class ParamStore<float>;
template class ParamStore<double>;
template struct Model<float>;
template struct Model<double>;

}  // namespace ngi
