// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/objective/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace ngi {

void LossWeights::validate() const {
  auto check = [](double w, const char* name) {
    if (!(w >= 0.0)) throw std::invalid_argument(std::string("loss weight ") + name + " is negative");
  };
  check(content, "content");
  check(perceptual, "perceptual");
  check(adversarial, "adversarial");
  for (double t : taps) check(t, "tap");
}

template <typename T>
Tensor<T> smooth_l1(const Tensor<T>& pred, const Tensor<T>& target, T delta) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("smooth_l1: " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
  }
  if (pred.numel() == 0) throw ShapeError("smooth_l1 of empty tensor");
  if (!(delta > T(0))) throw std::invalid_argument("smooth_l1: delta must be positive");
  const double d = static_cast<double>(delta);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) {
    const double e = static_cast<double>(pred.data()[i]) - static_cast<double>(target.data()[i]);
    acc += std::abs(e) < d ? 0.5 * e * e / d : std::abs(e) - 0.5 * d;
  }
  const double n = static_cast<double>(pred.numel());
  auto pn = pred.node();
  auto tn = target.node();
  return make_result<T>({}, {static_cast<T>(acc / n)}, {pred, target}, "smooth_l1",
                        [pn, tn, n, delta](const TensorNode<T>& self) {
                          const T g = static_cast<T>(self.grad[0] / n);
                          for (std::size_t i = 0; i < pn->data.size(); ++i) {
                            const T e = pn->data[i] - tn->data[i];
                            const T de = std::abs(e) < delta ? e / delta
                                                             : (e > T(0) ? T(1) : T(-1));
                            if (pn->requires_grad) pn->ensure_grad()[i] += g * de;
                            if (tn->requires_grad) tn->ensure_grad()[i] -= g * de;
                          }
                        });
}

namespace {

// Rows of channel c in a [3B, ...] tensor, concatenated along dim 0.
template <typename T>
Tensor<T> channel_rows(const Tensor<T>& x, std::int64_t c) {
  const auto rows = x.dim(0);
  const auto per = x.numel() / rows;
  Shape shape = x.shape();
  shape[0] = 1;
  std::vector<Tensor<T>> parts;
  for (std::int64_t r = c; r < rows; r += 3) {
    parts.push_back(reshape(slice_channels(reshape(x, {1, rows * per}), r * per, (r + 1) * per),
                            shape));
  }
  return concat(parts, 0);
}

template <typename T>
Tensor<T> per_channel_mean_squared(const Tensor<T>& scores, T target) {
  if (scores.rank() < 1 || scores.dim(0) % 3 != 0) {
    throw ShapeError("adversarial loss: expected 3B score rows, got " + to_string(scores.shape()));
  }
  Tensor<T> acc;
  for (std::int64_t c = 0; c < 3; ++c) {
    const auto term = mean_squared_from(channel_rows(scores, c), target);
    acc = acc.defined() ? add(acc, term) : term;
  }
  return scale(acc, T(1) / T(3));
}

}  // namespace

template <typename T>
AdversarialLosses<T> adversarial_losses(const Tensor<T>& real_scores,
                                        const Tensor<T>& fake_scores) {
  AdversarialLosses<T> out;
  if (fake_scores.defined()) out.generator = per_channel_mean_squared(fake_scores, T(1));
  if (real_scores.defined() && fake_scores.defined()) {
    out.discriminator = add(scale(per_channel_mean_squared(real_scores, T(1)), T(0.5)),
                            scale(per_channel_mean_squared(fake_scores, T(0)), T(0.5)));
  }
  return out;
}

template <typename T>
FrozenFeatureExtractor<T> FrozenFeatureExtractor<T>::random(std::uint64_t seed,
                                                            const std::vector<int>& widths) {
  if (widths.empty()) throw std::invalid_argument("feature extractor needs at least one stage");
  FrozenFeatureExtractor e;
  Rng rng(seed, 0xfea7);
  std::int64_t in = 3;
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("feature extractor widths must be positive");
    e.stages.push_back({xavier_init<T>({w, in, 3, 3}, rng), Tensor<T>::zeros({w}), 2});
    in = w;
  }
  return e;
}

template <typename T>
FrozenFeatureExtractor<T> FrozenFeatureExtractor<T>::from_tensors(const ParameterList<T>& tensors,
                                                                  int stride) {
  FrozenFeatureExtractor e;
  for (std::size_t i = 0;; ++i) {
    const std::string w = "extractor." + std::to_string(i) + ".w";
    const std::string b = "extractor." + std::to_string(i) + ".b";
    const NamedTensor<T>* wt = nullptr;
    const NamedTensor<T>* bt = nullptr;
    for (const auto& t : tensors) {
      if (t.name == w) wt = &t;
      if (t.name == b) bt = &t;
    }
    if (!wt) break;
    if (!bt) throw std::invalid_argument("feature extractor: missing " + b);
    e.stages.push_back({wt->value.detach(), bt->value.detach(), stride});
  }
  if (e.stages.empty()) throw std::invalid_argument("feature extractor: no stages found");
  return e;
}

template <typename T>
ParameterList<T> FrozenFeatureExtractor<T>::tensors() const {
  ParameterList<T> out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    out.push_back({"extractor." + std::to_string(i) + ".w", stages[i].weight});
    out.push_back({"extractor." + std::to_string(i) + ".b", stages[i].bias});
  }
  return out;
}

template <typename T>
std::int64_t FrozenFeatureExtractor<T>::min_resolution() const {
  std::int64_t r = 1;
  for (const auto& s : stages) r *= s.stride;
  return r;
}

template <typename T>
std::vector<Tensor<T>> FrozenFeatureExtractor<T>::features(const Tensor<T>& x) const {
  if (x.rank() != 4 || x.dim(2) < min_resolution() || x.dim(3) < min_resolution()) {
    throw ShapeError("feature extractor: input " + to_string(x.shape()) +
                     " is smaller than the deepest tap (" + std::to_string(min_resolution()) + ")");
  }
  std::vector<Tensor<T>> taps;
  Tensor<T> h = x;
  for (const auto& s : stages) {
    const int pad = static_cast<int>((s.weight.dim(2) - 1) / 2);
    h = leaky_relu(conv2d(h, s.weight, s.bias, s.stride, pad), leaky_slope);
    taps.push_back(h);
  }
  return taps;
}

template <typename T>
Tensor<T> perceptual_loss(const Tensor<T>& pred, const Tensor<T>& target,
                          const FrozenFeatureExtractor<T>& extractor,
                          const std::vector<double>& lambdas) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("perceptual_loss: " + to_string(pred.shape()) + " vs " +
                     to_string(target.shape()));
  }
  if (!lambdas.empty() && lambdas.size() != extractor.stages.size()) {
    throw std::invalid_argument("perceptual_loss: " + std::to_string(lambdas.size()) +
                                " tap weights for " + std::to_string(extractor.stages.size()) +
                                " taps");
  }
  const auto fp = extractor.features(log1p(pred));
  std::vector<Tensor<T>> ft;
  {
    NoGradGuard ng;
    ft = extractor.features(log1p(target.detach()));
  }
  Tensor<T> acc;
  for (std::size_t l = 0; l < fp.size(); ++l) {
    const T lambda = static_cast<T>(lambdas.empty() ? 1.0 : lambdas[l]);
    const auto term = scale(l1_mean(ft[l], fp[l]), lambda);
    acc = acc.defined() ? add(acc, term) : term;
  }
  return acc;
}

template <typename T>
Tensor<T> total_loss(const Tensor<T>& content, const Tensor<T>& perceptual,
                     const Tensor<T>& adversarial, const LossWeights& w) {
  return add(add(scale(adversarial, static_cast<T>(w.adversarial)),
                 scale(content, static_cast<T>(w.content))),
             scale(perceptual, static_cast<T>(w.perceptual)));
}

#define NGI_INSTANTIATE_OBJECTIVE(T)                                                           \
  template Tensor<T> smooth_l1(const Tensor<T>&, const Tensor<T>&, T);                         \
  template AdversarialLosses<T> adversarial_losses(const Tensor<T>&, const Tensor<T>&);        \
  template struct FrozenFeatureExtractor<T>;                                                   \
  template Tensor<T> perceptual_loss(const Tensor<T>&, const Tensor<T>&,                       \
                                     const FrozenFeatureExtractor<T>&, const std::vector<double>&); \
  template Tensor<T> total_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                const LossWeights&);

NGI_INSTANTIATE_OBJECTIVE(float)
NGI_INSTANTIATE_OBJECTIVE(double)

}  // namespace ngi
