// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace ngi {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

using Index = std::int64_t;

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(s));
  }
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " +
                     to_string(b));
  }
}

template <typename T>
bool wants_grad(const NodePtr<T>& n) {
  return n && n->requires_grad;
}

// Column matrix rows are (c, ky, kx); columns are output pixels (oy, ox).
template <typename T>
void im2col(const T* x, Index C, Index H, Index W, Index k, Index s, Index p, Index Ho, Index Wo,
            T* col) {
  const Index P = Ho * Wo;
  for (Index c = 0; c < C; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        T* dst = col + ((c * k + ky) * k + kx) * P;
        for (Index oy = 0; oy < Ho; ++oy) {
          const Index iy = oy * s - p + ky;
          T* row = dst + oy * Wo;
          if (iy < 0 || iy >= H) {
            std::fill(row, row + Wo, T(0));
            continue;
          }
          const T* src = x + (c * H + iy) * W;
          for (Index ox = 0; ox < Wo; ++ox) {
            const Index ix = ox * s - p + kx;
            row[ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, Index C, Index H, Index W, Index k, Index s, Index p, Index Ho, Index Wo,
            T* dx) {
  const Index P = Ho * Wo;
  for (Index c = 0; c < C; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const T* srcrow = col + ((c * k + ky) * k + kx) * P;
        for (Index oy = 0; oy < Ho; ++oy) {
          const Index iy = oy * s - p + ky;
          if (iy < 0 || iy >= H) continue;
          T* dst = dx + (c * H + iy) * W;
          const T* src = srcrow + oy * Wo;
          for (Index ox = 0; ox < Wo; ++ox) {
            const Index ix = ox * s - p + kx;
            if (ix >= 0 && ix < W) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

struct ConvGeom {
  Index N, C, H, W, F, k, stride, pad, Ho, Wo;
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias, int stride,
                 int padding) {
  const Shape& xs = x.shape();
  const Shape& ks = kernel.shape();
  if (xs.size() != 4 || ks.size() != 4 || ks[1] != xs[1] || ks[2] != ks[3] || ks[2] % 2 == 0) {
    throw ShapeError("conv2d: input " + to_string(xs) + " incompatible with kernel " +
                     to_string(ks));
  }
  if (stride < 1 || padding < 0) throw ShapeError("conv2d: invalid stride/padding");
  if (bias.defined() && bias.shape() != Shape{ks[0]}) {
    throw ShapeError("conv2d: bias " + to_string(bias.shape()) + " does not match kernel " +
                     to_string(ks));
  }
  ConvGeom g{xs[0], xs[1], xs[2], xs[3], ks[0], ks[2], stride, padding, 0, 0};
  g.Ho = (g.H + 2 * g.pad - g.k) / g.stride + 1;
  g.Wo = (g.W + 2 * g.pad - g.k) / g.stride + 1;
  if (g.Ho <= 0 || g.Wo <= 0) {
    throw ShapeError("conv2d: input " + to_string(xs) + " too small for kernel " + to_string(ks));
  }
  const Index P = g.Ho * g.Wo;
  const Index CKK = g.C * g.k * g.k;

  std::vector<T> out(static_cast<std::size_t>(g.N * g.F * P));
  std::vector<T> col(g.pointwise() ? 0 : static_cast<std::size_t>(CKK * P));
  ConstMapMat<T> wmat(kernel.data().data(), g.F, CKK);
  for (Index n = 0; n < g.N; ++n) {
    const T* xn = x.data().data() + n * g.C * g.H * g.W;
    const T* colp = xn;
    if (!g.pointwise()) {
      im2col(xn, g.C, g.H, g.W, g.k, g.stride, g.pad, g.Ho, g.Wo, col.data());
      colp = col.data();
    }
    MapMat<T> on(out.data() + n * g.F * P, g.F, P);
    on.noalias() = wmat * ConstMapMat<T>(colp, CKK, P);
    if (bias.defined()) {
      for (Index f = 0; f < g.F; ++f) on.row(f).array() += bias.data()[f];
    }
  }

  auto xn = x.node();
  auto kn = kernel.node();
  auto bn = bias.defined() ? bias.node() : NodePtr<T>();
  return make_result<T>(
      {g.N, g.F, g.Ho, g.Wo}, std::move(out), {x, kernel, bias}, "conv2d",
      [xn, kn, bn, g](const TensorNode<T>& self) {
        const Index P = g.Ho * g.Wo;
        const Index CKK = g.C * g.k * g.k;
        std::vector<T> col(static_cast<std::size_t>(CKK * P));
        std::vector<T> dcol(wants_grad(xn) ? static_cast<std::size_t>(CKK * P) : 0);
        ConstMapMat<T> wmat(kn->data.data(), g.F, CKK);
        for (Index n = 0; n < g.N; ++n) {
          ConstMapMat<T> dout(self.grad.data() + n * g.F * P, g.F, P);
          const T* xdata = xn->data.data() + n * g.C * g.H * g.W;
          if (wants_grad(kn)) {
            const T* colp = xdata;
            if (!g.pointwise()) {
              im2col(xdata, g.C, g.H, g.W, g.k, g.stride, g.pad, g.Ho, g.Wo, col.data());
              colp = col.data();
            }
            MapMat<T> dw(kn->ensure_grad().data(), g.F, CKK);
            dw.noalias() += dout * ConstMapMat<T>(colp, CKK, P).transpose();
          }
          if (wants_grad(bn)) {
            auto& db = bn->ensure_grad();
            for (Index f = 0; f < g.F; ++f) {
              const T* row = dout.data() + f * P;
              T acc = T(0);
              for (Index i = 0; i < P; ++i) acc += row[i];
              db[f] += acc;
            }
          }
          if (wants_grad(xn)) {
            T* dx = xn->ensure_grad().data() + n * g.C * g.H * g.W;
            if (g.pointwise()) {
              MapMat<T>(dx, CKK, P).noalias() += wmat.transpose() * dout;
            } else {
              MapMat<T>(dcol.data(), CKK, P).noalias() = wmat.transpose() * dout;
              col2im(dcol.data(), g.C, g.H, g.W, g.k, g.stride, g.pad, g.Ho, g.Wo, dx);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "upsample_nearest2x");
  const Index N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  std::vector<T> out(static_cast<std::size_t>(N * C * H * W * 4));
  const T* src = x.data().data();
  for (Index nc = 0; nc < N * C; ++nc) {
    for (Index y = 0; y < 2 * H; ++y) {
      const T* srow = src + (nc * H + y / 2) * W;
      T* drow = out.data() + (nc * 2 * H + y) * 2 * W;
      for (Index xx = 0; xx < 2 * W; ++xx) drow[xx] = srow[xx / 2];
    }
  }
  auto xn = x.node();
  return make_result<T>({N, C, 2 * H, 2 * W}, std::move(out), {x}, "upsample_nearest2x",
                        [xn, N, C, H, W](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          for (Index nc = 0; nc < N * C; ++nc) {
                            for (Index y = 0; y < 2 * H; ++y) {
                              const T* grow = self.grad.data() + (nc * 2 * H + y) * 2 * W;
                              T* drow = dx.data() + (nc * H + y / 2) * W;
                              for (Index xx = 0; xx < 2 * W; ++xx) drow[xx / 2] += grow[xx];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> upsample_conv(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  require_rank(kernel.shape(), 4, "upsample_conv");
  const int pad = static_cast<int>((kernel.dim(2) - 1) / 2);
  return conv2d(upsample_nearest2x(x), kernel, bias, 1, pad);
}

template <typename T>
Tensor<T> avg_pool2x2(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "avg_pool2x2");
  const Index N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 || W % 2) throw ShapeError("avg_pool2x2: odd spatial size " + to_string(x.shape()));
  const Index Ho = H / 2, Wo = W / 2;
  std::vector<T> out(static_cast<std::size_t>(N * C * Ho * Wo));
  const T* src = x.data().data();
  for (Index nc = 0; nc < N * C; ++nc) {
    for (Index y = 0; y < Ho; ++y) {
      const T* r0 = src + (nc * H + 2 * y) * W;
      const T* r1 = r0 + W;
      T* d = out.data() + (nc * Ho + y) * Wo;
      for (Index xx = 0; xx < Wo; ++xx) {
        d[xx] = T(0.25) * ((r0[2 * xx] + r0[2 * xx + 1]) + (r1[2 * xx] + r1[2 * xx + 1]));
      }
    }
  }
  auto xn = x.node();
  return make_result<T>({N, C, Ho, Wo}, std::move(out), {x}, "avg_pool2x2",
                        [xn, N, C, H, W](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          const Index Ho = H / 2, Wo = W / 2;
                          for (Index nc = 0; nc < N * C; ++nc) {
                            for (Index y = 0; y < H; ++y) {
                              const T* g = self.grad.data() + (nc * Ho + y / 2) * Wo;
                              T* d = dx.data() + (nc * H + y) * W;
                              for (Index xx = 0; xx < W; ++xx) d[xx] += T(0.25) * g[xx / 2];
                            }
                          }
                        });
}

namespace {

// Shared scaffolding for pointwise unary ops: `f` gives the value, `df` the
// derivative from (input, output).
template <typename T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& x, const char* name, F f, DF df) {
  std::vector<T> out(x.data().size());
  std::transform(x.data().begin(), x.data().end(), out.begin(), f);
  auto xn = x.node();
  return make_result<T>(x.shape(), std::move(out), {x}, name,
                        [xn, df](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          for (std::size_t i = 0; i < dx.size(); ++i) {
                            dx[i] += self.grad[i] * df(xn->data[i], self.data[i]);
                          }
                        });
}

}  // namespace

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  return unary(
      x, "leaky_relu", [slope](T v) { return v >= T(0) ? v : slope * v; },
      [slope](T v, T) { return v >= T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> exp_activation(const Tensor<T>& x) {
  const T lo = static_cast<T>(kExpClampLo);
  const T hi = static_cast<T>(kExpClampHi);
  return unary(
      x, "exp_activation", [lo, hi](T v) { return std::exp(std::clamp(v, lo, hi)); },
      [lo, hi](T v, T y) { return (v < lo || v > hi) ? T(0) : y; });
}

template <typename T>
Tensor<T> log1p(const Tensor<T>& x) {
  return unary(
      x, "log1p", [](T v) { return std::log1p(v); }, [](T v, T) { return T(1) / (T(1) + v); });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits, int axis) {
  const Shape& s = logits.shape();
  const int r = static_cast<int>(s.size());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw ShapeError("softmax: axis out of range for " + to_string(s));
  Index outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= s[static_cast<std::size_t>(i)];
  for (int i = a + 1; i < r; ++i) inner *= s[static_cast<std::size_t>(i)];
  const Index n = s[static_cast<std::size_t>(a)];

  std::vector<T> out(logits.data().size());
  const T* src = logits.data().data();
  for (Index o = 0; o < outer; ++o) {
    for (Index in = 0; in < inner; ++in) {
      const Index base = o * n * inner + in;
      T m = src[base];
      for (Index j = 1; j < n; ++j) m = std::max(m, src[base + j * inner]);
      T total = 0;
      for (Index j = 0; j < n; ++j) {
        const T e = std::exp(src[base + j * inner] - m);
        out[base + j * inner] = e;
        total += e;
      }
      const T inv = T(1) / total;
      for (Index j = 0; j < n; ++j) out[base + j * inner] *= inv;
    }
  }
  auto xn = logits.node();
  return make_result<T>(s, std::move(out), {logits}, "softmax",
                        [xn, outer, inner, n](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          for (Index o = 0; o < outer; ++o) {
                            for (Index in = 0; in < inner; ++in) {
                              const Index base = o * n * inner + in;
                              T dot = 0;
                              for (Index j = 0; j < n; ++j) {
                                const Index k = base + j * inner;
                                dot += self.grad[k] * self.data[k];
                              }
                              for (Index j = 0; j < n; ++j) {
                                const Index k = base + j * inner;
                                dx[k] += self.data[k] * (self.grad[k] - dot);
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> matmul_batched(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() < 2 || bs.size() < 2 || as[as.size() - 1] != bs[bs.size() - 2]) {
    throw ShapeError("matmul_batched: cannot multiply " + to_string(as) + " by " + to_string(bs));
  }
  const Index M = as[as.size() - 2], K = as.back(), N = bs.back();
  const std::size_t ra = as.size() - 2, rb = bs.size() - 2;
  const std::size_t rank = std::max(ra, rb);
  Shape batch(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const Index da = i + ra >= rank ? as[i + ra - rank] : 1;
    const Index db = i + rb >= rank ? bs[i + rb - rank] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("matmul_batched: batch dims of " + to_string(as) + " and " +
                       to_string(bs) + " do not broadcast");
    }
    batch[i] = std::max(da, db);
  }
  const Index nb = numel(batch);
  // Map each output batch index to its source batch index in a and b.
  std::vector<Index> ia(static_cast<std::size_t>(nb)), ib(static_cast<std::size_t>(nb));
  for (Index ob = 0; ob < nb; ++ob) {
    Index rem = ob, sa = 0, sb = 0, stride_a = 1, stride_b = 1;
    for (std::size_t i = rank; i-- > 0;) {
      const Index coord = rem % batch[i];
      rem /= batch[i];
      const Index da = i + ra >= rank ? as[i + ra - rank] : 1;
      const Index db = i + rb >= rank ? bs[i + rb - rank] : 1;
      if (da != 1) sa += coord * stride_a;
      if (db != 1) sb += coord * stride_b;
      stride_a *= da;
      stride_b *= db;
    }
    ia[static_cast<std::size_t>(ob)] = sa;
    ib[static_cast<std::size_t>(ob)] = sb;
  }

  std::vector<T> out(static_cast<std::size_t>(nb * M * N));
  for (Index ob = 0; ob < nb; ++ob) {
    MapMat<T>(out.data() + ob * M * N, M, N).noalias() =
        ConstMapMat<T>(a.data().data() + ia[ob] * M * K, M, K) *
        ConstMapMat<T>(b.data().data() + ib[ob] * K * N, K, N);
  }
  Shape oshape = batch;
  oshape.push_back(M);
  oshape.push_back(N);
  auto an = a.node();
  auto bn = b.node();
  return make_result<T>(
      std::move(oshape), std::move(out), {a, b}, "matmul_batched",
      [an, bn, ia, ib, nb, M, K, N](const TensorNode<T>& self) {
        for (Index ob = 0; ob < nb; ++ob) {
          ConstMapMat<T> g(self.grad.data() + ob * M * N, M, N);
          if (wants_grad(an)) {
            MapMat<T>(an->ensure_grad().data() + ia[ob] * M * K, M, K).noalias() +=
                g * ConstMapMat<T>(bn->data.data() + ib[ob] * K * N, K, N).transpose();
          }
          if (wants_grad(bn)) {
            MapMat<T>(bn->ensure_grad().data() + ib[ob] * K * N, K, N).noalias() +=
                ConstMapMat<T>(an->data.data() + ia[ob] * M * K, M, K).transpose() * g;
          }
        }
      });
}

template <typename T>
Tensor<T> transpose_last2(const Tensor<T>& x) {
  const Shape& s = x.shape();
  if (s.size() < 2) throw ShapeError("transpose_last2: rank < 2 in " + to_string(s));
  const Index R = s[s.size() - 2], C = s.back();
  const Index nb = x.numel() / std::max<Index>(R * C, 1);
  std::vector<T> out(x.data().size());
  for (Index b = 0; b < nb; ++b) {
    MapMat<T>(out.data() + b * R * C, C, R) =
        ConstMapMat<T>(x.data().data() + b * R * C, R, C).transpose();
  }
  Shape os = s;
  std::swap(os[os.size() - 1], os[os.size() - 2]);
  auto xn = x.node();
  return make_result<T>(std::move(os), std::move(out), {x}, "transpose_last2",
                        [xn, nb, R, C](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          for (Index b = 0; b < nb; ++b) {
                            MapMat<T>(dx.data() + b * R * C, R, C) +=
                                ConstMapMat<T>(self.grad.data() + b * R * C, C, R).transpose();
                          }
                        });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.data().size());
  for (auto& m : mask) m = rng.uniform() < rate ? T(0) : keep_scale;
  std::vector<T> out(mask.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * mask[i];
  auto xn = x.node();
  return make_result<T>(x.shape(), std::move(out), {x}, "dropout",
                        [xn, mask = std::move(mask)](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * mask[i];
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  auto xn = x.node();
  return make_result<T>(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()), {x},
                        "reshape", [xn](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& xs, int axis) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = xs.front().shape();
  const int r = static_cast<int>(s0.size());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw ShapeError("concat: axis out of range for " + to_string(s0));
  Shape os = s0;
  os[static_cast<std::size_t>(a)] = 0;
  for (const auto& x : xs) {
    Shape s = x.shape();
    if (s.size() != s0.size()) throw ShapeError("concat: rank mismatch " + to_string(s0) + " vs " + to_string(s));
    for (int i = 0; i < r; ++i) {
      if (i != a && s[static_cast<std::size_t>(i)] != s0[static_cast<std::size_t>(i)]) {
        throw ShapeError("concat: shape mismatch " + to_string(s0) + " vs " + to_string(s));
      }
    }
    os[static_cast<std::size_t>(a)] += s[static_cast<std::size_t>(a)];
  }
  Index outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= s0[static_cast<std::size_t>(i)];
  for (int i = a + 1; i < r; ++i) inner *= s0[static_cast<std::size_t>(i)];
  std::vector<Index> chunk;
  for (const auto& x : xs) chunk.push_back(x.dim(a) * inner);
  const Index row = os[static_cast<std::size_t>(a)] * inner;

  std::vector<T> out(static_cast<std::size_t>(outer * row));
  for (Index o = 0; o < outer; ++o) {
    Index off = 0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const T* src = xs[t].data().data() + o * chunk[t];
      std::copy(src, src + chunk[t], out.data() + o * row + off);
      off += chunk[t];
    }
  }
  std::vector<NodePtr<T>> nodes;
  for (const auto& x : xs) nodes.push_back(x.node());
  return make_result<T>(std::move(os), std::move(out), xs, "concat",
                        [nodes, chunk, outer, row](const TensorNode<T>& self) {
                          for (Index o = 0; o < outer; ++o) {
                            Index off = 0;
                            for (std::size_t t = 0; t < nodes.size(); ++t) {
                              if (wants_grad(nodes[t])) {
                                T* dst = nodes[t]->ensure_grad().data() + o * chunk[t];
                                const T* g = self.grad.data() + o * row + off;
                                for (Index i = 0; i < chunk[t]; ++i) dst[i] += g[i];
                              }
                              off += chunk[t];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t begin, std::int64_t end) {
  const Shape& s = x.shape();
  if (s.size() < 2 || begin < 0 || end > s[1] || begin >= end) {
    throw ShapeError("slice_channels: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + to_string(s));
  }
  Index inner = 1;
  for (std::size_t i = 2; i < s.size(); ++i) inner *= s[i];
  const Index N = s[0], C = s[1], Cs = end - begin;
  std::vector<T> out(static_cast<std::size_t>(N * Cs * inner));
  for (Index n = 0; n < N; ++n) {
    const T* src = x.data().data() + (n * C + begin) * inner;
    std::copy(src, src + Cs * inner, out.data() + n * Cs * inner);
  }
  Shape os = s;
  os[1] = Cs;
  auto xn = x.node();
  return make_result<T>(std::move(os), std::move(out), {x}, "slice_channels",
                        [xn, N, C, Cs, begin, inner](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          for (Index n = 0; n < N; ++n) {
                            T* dst = dx.data() + (n * C + begin) * inner;
                            const T* g = self.grad.data() + n * Cs * inner;
                            for (Index i = 0; i < Cs * inner; ++i) dst[i] += g[i];
                          }
                        });
}

template <typename T>
Tensor<T> repeat_interleave_batch(const Tensor<T>& x, std::int64_t times) {
  if (x.rank() < 1 || times < 1) throw ShapeError("repeat_interleave_batch: bad arguments");
  const Index B = x.dim(0);
  const Index inner = x.numel() / std::max<Index>(B, 1);
  std::vector<T> out(static_cast<std::size_t>(x.numel() * times));
  for (Index b = 0; b < B; ++b) {
    const T* src = x.data().data() + b * inner;
    for (Index t = 0; t < times; ++t) std::copy(src, src + inner, out.data() + (b * times + t) * inner);
  }
  Shape os = x.shape();
  os[0] = B * times;
  auto xn = x.node();
  return make_result<T>(std::move(os), std::move(out), {x}, "repeat_interleave_batch",
                        [xn, B, inner, times](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          for (Index b = 0; b < B; ++b) {
                            T* dst = dx.data() + b * inner;
                            for (Index t = 0; t < times; ++t) {
                              const T* g = self.grad.data() + (b * times + t) * inner;
                              for (Index i = 0; i < inner; ++i) dst[i] += g[i];
                            }
                          }
                        });
}

namespace {

template <typename T, typename F, typename DA, typename DB>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, const char* name, F f, DA da, DB db) {
  require_same(a.shape(), b.shape(), name);
  std::vector<T> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i], b.data()[i]);
  auto an = a.node();
  auto bn = b.node();
  return make_result<T>(a.shape(), std::move(out), {a, b}, name,
                        [an, bn, da, db](const TensorNode<T>& self) {
                          if (wants_grad(an)) {
                            auto& g = an->ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += self.grad[i] * da(an->data[i], bn->data[i]);
                          }
                          if (wants_grad(bn)) {
                            auto& g = bn->ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += self.grad[i] * db(an->data[i], bn->data[i]);
                          }
                        });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      a, b, "add", [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
      [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      a, b, "sub", [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
      [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      a, b, "mul", [](T x, T y) { return x * y; }, [](T, T y) { return y; },
      [](T x, T) { return x; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return unary(
      x, "scale", [factor](T v) { return factor * v; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double acc = 0.0;
  for (T v : x.data()) acc += static_cast<double>(v);
  auto xn = x.node();
  return make_result<T>({}, {static_cast<T>(acc)}, {x}, "sum", [xn](const TensorNode<T>& self) {
    auto& dx = xn->ensure_grad();
    for (auto& d : dx) d += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) throw ShapeError("mean of empty tensor");
  double acc = 0.0;
  for (T v : x.data()) acc += static_cast<double>(v);
  const double n = static_cast<double>(x.numel());
  auto xn = x.node();
  return make_result<T>({}, {static_cast<T>(acc / n)}, {x}, "mean",
                        [xn, n](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          const T g = static_cast<T>(self.grad[0] / n);
                          for (auto& d : dx) d += g;
                        });
}

template <typename T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "l1_mean");
  if (a.numel() == 0) throw ShapeError("l1_mean of empty tensor");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    acc += std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]));
  }
  const double n = static_cast<double>(a.numel());
  auto an = a.node();
  auto bn = b.node();
  return make_result<T>({}, {static_cast<T>(acc / n)}, {a, b}, "l1_mean",
                        [an, bn, n](const TensorNode<T>& self) {
                          const T g = static_cast<T>(self.grad[0] / n);
                          for (std::size_t i = 0; i < an->data.size(); ++i) {
                            const T d = an->data[i] - bn->data[i];
                            const T sgn = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                            if (wants_grad(an)) an->ensure_grad()[i] += g * sgn;
                            if (wants_grad(bn)) bn->ensure_grad()[i] -= g * sgn;
                          }
                        });
}

template <typename T>
Tensor<T> mean_squared_from(const Tensor<T>& x, T target) {
  if (x.numel() == 0) throw ShapeError("mean_squared_from of empty tensor");
  double acc = 0.0;
  for (T v : x.data()) {
    const double d = static_cast<double>(v) - static_cast<double>(target);
    acc += d * d;
  }
  const double n = static_cast<double>(x.numel());
  auto xn = x.node();
  return make_result<T>({}, {static_cast<T>(acc / n)}, {x}, "mean_squared_from",
                        [xn, n, target](const TensorNode<T>& self) {
                          auto& dx = xn->ensure_grad();
                          const T g = static_cast<T>(2.0 * self.grad[0] / n);
                          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g * (xn->data[i] - target);
                        });
}

template <typename T>
Tensor<T> scale_gradient(const Tensor<T>& x, T factor) {
  return unary(
      x, "scale_gradient", [](T v) { return v; }, [factor](T, T) { return factor; });
}

#define NGI_INSTANTIATE_OPS(T)                                                                 \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);   \
  template Tensor<T> upsample_conv(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> upsample_nearest2x(const Tensor<T>&);                                     \
  template Tensor<T> avg_pool2x2(const Tensor<T>&);                                            \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                          \
  template Tensor<T> exp_activation(const Tensor<T>&);                                         \
  template Tensor<T> log1p(const Tensor<T>&);                                                  \
  template Tensor<T> softmax(const Tensor<T>&, int);                                           \
  template Tensor<T> matmul_batched(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> transpose_last2(const Tensor<T>&);                                        \
  template Tensor<T> dropout(const Tensor<T>&, double, Rng&, bool);                            \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                         \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, int);                               \
  template Tensor<T> slice_channels(const Tensor<T>&, std::int64_t, std::int64_t);             \
  template Tensor<T> repeat_interleave_batch(const Tensor<T>&, std::int64_t);                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> scale(const Tensor<T>&, T);                                               \
  template Tensor<T> sum(const Tensor<T>&);                                                    \
  template Tensor<T> mean(const Tensor<T>&);                                                   \
  template Tensor<T> l1_mean(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> mean_squared_from(const Tensor<T>&, T);                                   \
  template Tensor<T> scale_gradient(const Tensor<T>&, T);

NGI_INSTANTIATE_OPS(float)
NGI_INSTANTIATE_OPS(double)

}  // namespace ngi
