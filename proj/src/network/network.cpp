// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/network/network.hpp"

#include <cmath>

namespace ngi {
namespace {

template <typename T>
Tensor<T> conv(const Tensor<T>& x, const Model<T>& m, const std::string& name, int stride = 1) {
  const Tensor<T>& w = m.params[name + ".w"];
  const int pad = static_cast<int>((w.dim(2) - 1) / 2);
  const std::string bias = name + ".b";
  return m.params.contains(bias) ? conv2d(x, w, m.params[bias], stride, pad)
                                 : conv2d(x, w, stride, pad);
}

template <typename T>
Tensor<T> act(const Tensor<T>& x, const Model<T>& m) {
  return leaky_relu(x, static_cast<T>(m.config.leaky_slope));
}

std::string level_name(const char* prefix, int l) { return prefix + std::to_string(l); }

void require_4d(const Shape& s, std::int64_t channels, const char* what) {
  if (s.size() != 4 || (channels > 0 && s[1] != channels)) {
    throw ShapeError(std::string(what) + ": expected [B, " + std::to_string(channels) +
                     ", H, W], got " + to_string(s));
  }
}

}  // namespace

template <typename T>
Tensor<T> normalize_geometry(const Tensor<T>& normals, const Tensor<T>& depth,
                             const Tensor<T>& positions, const std::vector<double>& extents) {
  require_4d(normals.shape(), 3, "normalize_geometry(N)");
  require_4d(depth.shape(), 1, "normalize_geometry(D)");
  require_4d(positions.shape(), 3, "normalize_geometry(P)");
  const auto B = normals.dim(0), H = normals.dim(2), W = normals.dim(3);
  if (depth.dim(0) != B || positions.dim(0) != B || depth.dim(2) != H || depth.dim(3) != W ||
      positions.dim(2) != H || positions.dim(3) != W) {
    throw ShapeError("normalize_geometry: buffer shapes disagree");
  }
  if (static_cast<std::int64_t>(extents.size()) != B) {
    throw ShapeError("normalize_geometry: need one scene extent per batch entry");
  }
  const auto plane = H * W;
  std::vector<T> out(static_cast<std::size_t>(B * kGeometryChannels * plane));
  for (std::int64_t b = 0; b < B; ++b) {
    const T inv = static_cast<T>(1.0 / extents[static_cast<std::size_t>(b)]);
    T* dst = out.data() + b * kGeometryChannels * plane;
    const T* n = normals.data().data() + b * 3 * plane;
    const T* d = depth.data().data() + b * plane;
    const T* p = positions.data().data() + b * 3 * plane;
    std::copy(n, n + 3 * plane, dst);
    for (std::int64_t i = 0; i < plane; ++i) dst[3 * plane + i] = d[i] * inv;
    for (std::int64_t i = 0; i < 3 * plane; ++i) dst[4 * plane + i] = p[i] * inv;
  }
  return Tensor<T>::from({B, kGeometryChannels, H, W}, std::move(out));
}

template <typename T>
GeometryFeatures<T> encode_geometry(const Tensor<T>& geometry, const Model<T>& m) {
  require_4d(geometry.shape(), kGeometryChannels, "encode_geometry");
  const int L = m.config.levels;
  m.config.check_resolution(geometry.dim(2), geometry.dim(3));
  ++m.counters.geometry_encoder_calls;
  m.counters.geometry_encoder_frames += geometry.dim(0);

  std::vector<Tensor<T>> enc(static_cast<std::size_t>(L + 1));
  enc[0] = act(conv(geometry, m, "geo.enc0"), m);
  for (int l = 1; l <= L; ++l) {
    enc[l] = act(conv(avg_pool2x2(enc[l - 1]), m, level_name("geo.enc", l)), m);
  }
  GeometryFeatures<T> g;
  g.features.resize(static_cast<std::size_t>(L + 1));
  g.raw.resize(static_cast<std::size_t>(L + 1));
  g.hat.resize(static_cast<std::size_t>(L + 1));
  g.features[L] = enc[L];
  for (int l = L - 1; l >= 0; --l) {
    const auto& up = m.params[level_name("geo.up", l) + ".w"];
    const auto u = act(upsample_conv(g.features[l + 1], up, m.params[level_name("geo.up", l) + ".b"]), m);
    g.features[l] = act(conv(concat<T>({u, enc[l]}), m, level_name("geo.dec", l)), m);
  }
  g.raw[0] = geometry;
  for (int l = 1; l <= L; ++l) g.raw[l] = avg_pool2x2(g.raw[l - 1]);
  for (int l = 0; l <= L; ++l) g.hat[l] = concat<T>({g.features[l], g.raw[l]});
  return g;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> gcm_factors(const Tensor<T>& hat, const Model<T>& m,
                                            const std::string& prefix) {
  return {conv(hat, m, prefix + ".gamma"), conv(hat, m, prefix + ".beta")};
}

template <typename T>
Tensor<T> gcm_apply(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
  if (x.shape() != gamma.shape() || x.shape() != beta.shape()) {
    throw ShapeError("gcm: features " + to_string(x.shape()) + " do not match modulation " +
                     to_string(gamma.shape()) + " / " + to_string(beta.shape()));
  }
  return add(mul(gamma, x), beta);
}

template <typename T>
Tensor<T> gcm_modulate(const Tensor<T>& x, const Tensor<T>& hat, const Model<T>& m,
                       const std::string& prefix) {
  if (x.rank() != 4 || hat.rank() != 4 || x.dim(2) != hat.dim(2) || x.dim(3) != hat.dim(3)) {
    throw ShapeError("gcm: level mismatch between features " + to_string(x.shape()) +
                     " and geometry " + to_string(hat.shape()));
  }
  auto [gamma, beta] = gcm_factors(hat, m, prefix);
  return gcm_apply(x, gamma, beta);
}

template <typename T>
std::vector<Tensor<T>> gfa_weights(const Tensor<T>& hat, const Model<T>& m) {
  const auto B = hat.dim(0), HW = hat.dim(2) * hat.dim(3);
  const std::int64_t dk = m.config.key_dim;
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));
  std::vector<Tensor<T>> attn;
  for (int k = 0; k < m.config.heads; ++k) {
    const std::string h = std::to_string(k);
    const auto q = transpose_last2(reshape(conv(hat, m, "gen.gfa.q" + h), {B, dk, HW}));
    const auto key = reshape(conv(hat, m, "gen.gfa.k" + h), {B, dk, HW});
    attn.push_back(softmax(scale(matmul_batched(q, key), inv_sqrt), -1));
  }
  return attn;
}

template <typename T>
Tensor<T> gfa_aggregate(const Tensor<T>& x, const std::vector<Tensor<T>>& attn,
                        const Model<T>& m) {
  if (static_cast<int>(attn.size()) != m.config.heads) {
    throw ShapeError("gfa_aggregate: got " + std::to_string(attn.size()) +
                     " attention heads, block has " + std::to_string(m.config.heads));
  }
  require_4d(x.shape(), 0, "gfa_aggregate");
  const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  std::vector<Tensor<T>> heads;
  for (int k = 0; k < m.config.heads; ++k) {
    if (attn[k].shape() != Shape{N, H * W, H * W}) {
      throw ShapeError("gfa_aggregate: attention " + to_string(attn[k].shape()) +
                       " does not match features " + to_string(x.shape()));
    }
    const auto v = reshape(conv(x, m, "gen.gfa.v" + std::to_string(k)), {N, C, H * W});
    heads.push_back(reshape(matmul_batched(v, transpose_last2(attn[k])), {N, C, H, W}));
  }
  return add(x, conv(concat(heads), m, "gen.gfa.merge"));
}

template <typename T>
Conditioning<T> build_conditioning(const GeometryFeatures<T>& g, const Model<T>& m,
                                   std::int64_t repeat) {
  auto rep = [repeat](const Tensor<T>& t) {
    return repeat == 1 ? t : repeat_interleave_batch(t, repeat);
  };
  Conditioning<T> c;
  const int L = m.config.levels;
  for (int l = 0; l <= L; ++l) {
    auto [gamma, beta] = gcm_factors(g.hat[l], m, level_name("gen.gcm", l));
    c.gamma.push_back(rep(gamma));
    c.beta.push_back(rep(beta));
  }
  if (m.config.use_gfa) {
    for (const auto& a : gfa_weights(g.hat[L], m)) c.attn.push_back(rep(a));
  }
  return c;
}

template <typename T>
Tensor<T> generator_forward(const Tensor<T>& input, const Conditioning<T>& cond,
                            const Model<T>& m, Mode mode, Rng* rng) {
  const auto& cfg = m.config;
  require_4d(input.shape(), cfg.generator_in_channels(), "generator");
  cfg.check_resolution(input.dim(2), input.dim(3));
  const bool train = mode == Mode::kTrain && cfg.dropout > 0.0;
  if (train && rng == nullptr) throw std::invalid_argument("generator: training mode needs an Rng");
  ++m.counters.generator_passes;
  m.counters.generator_channel_rows += input.dim(0);

  const int L = cfg.levels;
  std::vector<Tensor<T>> enc(static_cast<std::size_t>(L + 1));
  enc[0] = act(conv(input, m, "gen.enc0"), m);
  for (int l = 1; l <= L; ++l) {
    enc[l] = act(conv(avg_pool2x2(enc[l - 1]), m, level_name("gen.enc", l)), m);
  }
  Tensor<T> x = gcm_apply(enc[L], cond.gamma[L], cond.beta[L]);
  if (cfg.use_gfa) x = gfa_aggregate(x, cond.attn, m);
  for (int l = L - 1; l >= 0; --l) {
    const std::string up = level_name("gen.up", l);
    Tensor<T> u = act(upsample_conv(x, m.params[up + ".w"], m.params[up + ".b"]), m);
    if (train) u = dropout(u, cfg.dropout, *rng, true);
    x = act(conv(concat<T>({u, enc[l]}), m, level_name("gen.dec", l)), m);
    x = gcm_apply(x, cond.gamma[l], cond.beta[l]);
  }
  return exp_activation(conv(x, m, "gen.out"));
}

template <typename T>
Tensor<T> generator_forward_channel(const Tensor<T>& ld_c, const Tensor<T>& r_c,
                                    const Conditioning<T>& cond, const Model<T>& m, Mode mode,
                                    Rng* rng) {
  require_4d(ld_c.shape(), 1, "generator_forward_channel(L_d)");
  require_4d(r_c.shape(), 1, "generator_forward_channel(R)");
  if (ld_c.shape() != r_c.shape()) {
    throw ShapeError("generator_forward_channel: L_d " + to_string(ld_c.shape()) +
                     " and R " + to_string(r_c.shape()) + " differ");
  }
  if (!cond.gamma.empty() && (cond.gamma[0].dim(2) != ld_c.dim(2) ||
                              cond.gamma[0].dim(3) != ld_c.dim(3))) {
    throw ShapeError("generator_forward_channel: buffers " + to_string(ld_c.shape()) +
                     " do not match geometry " + to_string(cond.gamma[0].shape()));
  }
  return generator_forward(concat<T>({log1p(ld_c), r_c}), cond, m, mode, rng);
}

template <typename T>
Tensor<T> channels_to_rows(const Tensor<T>& x) {
  require_4d(x.shape(), 3, "channels_to_rows");
  return reshape(x, {x.dim(0) * 3, 1, x.dim(2), x.dim(3)});
}

template <typename T>
Tensor<T> rows_to_channels(const Tensor<T>& x) {
  require_4d(x.shape(), 1, "rows_to_channels");
  if (x.dim(0) % 3) throw ShapeError("rows_to_channels: row count not a multiple of 3");
  return reshape(x, {x.dim(0) / 3, 3, x.dim(2), x.dim(3)});
}

template <typename T>
Prediction<T> predict_indirect(const Tensor<T>& ld, const Tensor<T>& r, const Tensor<T>& geometry,
                               const Model<T>& m, Mode mode, Rng* rng) {
  require_4d(ld.shape(), 3, "predict_indirect(L_d)");
  if (r.shape() != ld.shape()) {
    throw ShapeError("predict_indirect: R " + to_string(r.shape()) + " differs from L_d " +
                     to_string(ld.shape()));
  }
  require_4d(geometry.shape(), kGeometryChannels, "predict_indirect(geometry)");
  if (geometry.dim(0) != ld.dim(0) || geometry.dim(2) != ld.dim(2) ||
      geometry.dim(3) != ld.dim(3)) {
    throw ShapeError("predict_indirect: geometry " + to_string(geometry.shape()) +
                     " does not match buffers " + to_string(ld.shape()));
  }
  const auto g = encode_geometry(geometry, m);
  Prediction<T> p;
  if (m.config.monochromatic) {
    const auto cond = build_conditioning(g, m, 3);
    const auto input = concat<T>({log1p(channels_to_rows(ld)), channels_to_rows(r)});
    p.S_ind = rows_to_channels(generator_forward(input, cond, m, mode, rng));
  } else {
    const auto cond = build_conditioning(g, m, 1);
    p.S_ind = generator_forward(concat<T>({log1p(ld), r}), cond, m, mode, rng);
  }
  p.L_ind = mul(r, p.S_ind);
  p.L = add(ld, p.L_ind);
  return p;
}

template <typename T>
Tensor<T> discriminator_input(const Tensor<T>& l, const Tensor<T>& ld, const Tensor<T>& r) {
  return concat<T>(
      {log1p(channels_to_rows(l)), log1p(channels_to_rows(ld)), channels_to_rows(r)});
}

template <typename T>
Tensor<T> discriminator_forward(const Tensor<T>& input, const Model<T>& m) {
  require_4d(input.shape(), 3, "discriminator");
  if (input.dim(2) % 16 || input.dim(3) % 16) {
    throw ShapeError("discriminator: spatial size must be divisible by 16, got " +
                     to_string(input.shape()));
  }
  Tensor<T> x = input;
  for (int i = 0; i < 4; ++i) x = act(conv(x, m, "disc.c" + std::to_string(i), 2), m);
  return conv(x, m, "disc.out");
}

#define NGI_INSTANTIATE_NETWORK(T)                                                              \
  template Tensor<T> normalize_geometry(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                        const std::vector<double>&);                            \
  template GeometryFeatures<T> encode_geometry(const Tensor<T>&, const Model<T>&);              \
  template std::pair<Tensor<T>, Tensor<T>> gcm_factors(const Tensor<T>&, const Model<T>&,      \
                                                       const std::string&);                    \
  template Tensor<T> gcm_apply(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> gcm_modulate(const Tensor<T>&, const Tensor<T>&, const Model<T>&,         \
                                  const std::string&);                                         \
  template std::vector<Tensor<T>> gfa_weights(const Tensor<T>&, const Model<T>&);              \
  template Tensor<T> gfa_aggregate(const Tensor<T>&, const std::vector<Tensor<T>>&,            \
                                   const Model<T>&);                                           \
  template Conditioning<T> build_conditioning(const GeometryFeatures<T>&, const Model<T>&,     \
                                              std::int64_t);                                   \
  template Tensor<T> generator_forward(const Tensor<T>&, const Conditioning<T>&,               \
                                       const Model<T>&, Mode, Rng*);                           \
  template Tensor<T> generator_forward_channel(const Tensor<T>&, const Tensor<T>&,             \
                                               const Conditioning<T>&, const Model<T>&, Mode,  \
                                               Rng*);                                          \
  template Tensor<T> channels_to_rows(const Tensor<T>&);                                       \
  template Tensor<T> rows_to_channels(const Tensor<T>&);                                       \
  template Prediction<T> predict_indirect(const Tensor<T>&, const Tensor<T>&,                  \
                                          const Tensor<T>&, const Model<T>&, Mode, Rng*);      \
  template Tensor<T> discriminator_input(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> discriminator_forward(const Tensor<T>&, const Model<T>&);

NGI_INSTANTIATE_NETWORK(float)
NGI_INSTANTIATE_NETWORK(double)

}  // namespace ngi
