// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/cli/gradcheck_suite.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include "ngi/network/network.hpp"
#include "ngi/numerics/gradcheck.hpp"
#include "ngi/numerics/ops.hpp"
#include "ngi/objective/objective.hpp"

namespace ngi {
namespace {

template <typename T>
struct Instance {
  ParameterList<T> params;
  ScalarFn<T> fn;
};

// Values are rounded through float so 32-bit and 64-bit instances of one seed
// hold identical numbers.
template <typename T>
Tensor<T> rnd(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<T> d(static_cast<std::size_t>(numel(shape)));
  for (auto& v : d) v = static_cast<T>(static_cast<float>(rng.uniform(lo, hi)));
  return Tensor<T>::from(shape, std::move(d));
}

template <typename T>
Tensor<T> weighted(const Tensor<T>& y) {
  std::vector<T> w(y.data().size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<T>(static_cast<float>(std::sin(1.0 + 0.7 * static_cast<double>(i))));
  }
  return sum(mul(y, Tensor<T>::from(y.shape(), std::move(w))));
}

template <typename T>
using Maker = std::function<Instance<T>(std::uint64_t seed, const std::function<Tensor<T>(const Tensor<T>&)>& tap)>;

template <typename T>
struct Case {
  std::string name;
  bool network = false;
  Maker<T> make;
};

ModelConfig tiny_generator() {
  ModelConfig c;
  c.levels = 2;
  c.base_width = 2;
  c.geometry_width = 2;
  c.heads = 2;
  c.key_dim = 2;
  c.height = c.width = 8;
  c.dropout = 0.25;
  c.disc_width = 2;
  return c;
}

template <typename T>
Model<T> view(const ModelConfig& cfg, const ParameterList<T>& params) {
  Model<T> m;
  m.config = cfg;
  for (const auto& p : params) m.params.add(p.name, p.value);
  return m;
}

template <typename T>
std::vector<Case<T>> cases() {
  using L = ParameterList<T>;
  using Tap = std::function<Tensor<T>(const Tensor<T>&)>;
  auto simple = [](std::string name, std::function<L(Rng&)> inputs,
                   std::function<Tensor<T>(const L&, const Tap&)> body) {
    return Case<T>{name, false, [inputs, body](std::uint64_t seed, const Tap& tap) {
                     Rng rng(1000 + seed, 0);
                     return Instance<T>{inputs(rng), [body, tap](const L& in) { return body(in, tap); }};
                   }};
  };
  std::vector<Case<T>> out = {
      simple("conv2d",
             [](Rng& r) {
               return L{{"x", rnd<T>({2, 2, 5, 4}, r)}, {"w", rnd<T>({3, 2, 3, 3}, r)}, {"b", rnd<T>({3}, r)}};
             },
             [](const L& in, const Tap& tap) {
               return weighted(tap(conv2d(in[0].value, in[1].value, in[2].value, 2, 1)));
             }),
      simple("conv2d_1x1",
             [](Rng& r) { return L{{"x", rnd<T>({2, 3, 3, 3}, r)}, {"w", rnd<T>({2, 3, 1, 1}, r)}}; },
             [](const L& in, const Tap& tap) { return weighted(tap(conv2d(in[0].value, in[1].value, 1, 0))); }),
      simple("upsample_conv",
             [](Rng& r) {
               return L{{"x", rnd<T>({1, 2, 3, 2}, r)}, {"w", rnd<T>({2, 2, 3, 3}, r)}, {"b", rnd<T>({2}, r)}};
             },
             [](const L& in, const Tap& tap) {
               return weighted(tap(upsample_conv(in[0].value, in[1].value, in[2].value)));
             }),
      simple("avg_pool2x2", [](Rng& r) { return L{{"x", rnd<T>({1, 2, 4, 6}, r)}}; },
             [](const L& in, const Tap& tap) { return weighted(tap(avg_pool2x2(in[0].value))); }),
      simple("leaky_relu", [](Rng& r) { return L{{"x", rnd<T>({3, 5}, r)}}; },
             [](const L& in, const Tap& tap) { return weighted(tap(leaky_relu(in[0].value, T(0.2)))); }),
      simple("exp_activation", [](Rng& r) { return L{{"x", rnd<T>({6}, r, -3, 3)}}; },
             [](const L& in, const Tap& tap) { return weighted(tap(exp_activation(in[0].value))); }),
      simple("log1p", [](Rng& r) { return L{{"x", rnd<T>({6}, r, 0, 4)}}; },
             [](const L& in, const Tap& tap) { return weighted(tap(log1p(in[0].value))); }),
      simple("softmax", [](Rng& r) { return L{{"x", rnd<T>({2, 3, 4}, r, -2, 2)}}; },
             [](const L& in, const Tap& tap) { return weighted(tap(softmax(in[0].value, 1))); }),
      simple("matmul_batched",
             [](Rng& r) { return L{{"a", rnd<T>({2, 1, 2, 3}, r)}, {"b", rnd<T>({3, 3, 2}, r)}}; },
             [](const L& in, const Tap& tap) { return weighted(tap(matmul_batched(in[0].value, in[1].value))); }),
      simple("transpose_last2", [](Rng& r) { return L{{"x", rnd<T>({2, 3, 4}, r)}}; },
             [](const L& in, const Tap& tap) { return weighted(tap(transpose_last2(in[0].value))); }),
      simple("dropout", [](Rng& r) { return L{{"x", rnd<T>({20}, r)}}; },
             [](const L& in, const Tap& tap) {
               Rng mask(99, 1);
               return weighted(tap(dropout(in[0].value, 0.5, mask, true)));
             }),
      simple("concat_slice",
             [](Rng& r) { return L{{"a", rnd<T>({2, 2, 3}, r)}, {"b", rnd<T>({2, 1, 3}, r)}}; },
             [](const L& in, const Tap& tap) {
               return weighted(tap(slice_channels(concat<T>({in[0].value, in[1].value}, 1), 1, 3)));
             }),
      simple("repeat_interleave", [](Rng& r) { return L{{"x", rnd<T>({2, 3}, r)}}; },
             [](const L& in, const Tap& tap) {
               return weighted(tap(reshape(repeat_interleave_batch(in[0].value, 3), {3, 6})));
             }),
      simple("mul_add_sub",
             [](Rng& r) { return L{{"a", rnd<T>({4}, r)}, {"b", rnd<T>({4}, r)}}; },
             [](const L& in, const Tap& tap) {
               return weighted(tap(sub(add(mul(in[0].value, in[1].value), in[0].value),
                                       scale(in[1].value, T(3)))));
             }),
      simple("mean", [](Rng& r) { return L{{"x", rnd<T>({5}, r)}}; },
             [](const L& in, const Tap& tap) { return tap(mean(mul(in[0].value, in[0].value))); }),
      simple("l1_mean", [](Rng& r) { return L{{"a", rnd<T>({6}, r)}, {"b", rnd<T>({6}, r)}}; },
             [](const L& in, const Tap& tap) { return tap(l1_mean(in[0].value, in[1].value)); }),
      simple("mean_squared_from", [](Rng& r) { return L{{"x", rnd<T>({6}, r)}}; },
             [](const L& in, const Tap& tap) { return tap(mean_squared_from(in[0].value, T(0.25))); }),
      simple("smooth_l1",
             [](Rng& r) { return L{{"pred", rnd<T>({12}, r, -2, 2)}, {"target", rnd<T>({12}, r, -2, 2)}}; },
             [](const L& in, const Tap& tap) { return tap(smooth_l1(in[0].value, in[1].value)); }),
      simple("gcm_apply",
             [](Rng& r) {
               return L{{"x", rnd<T>({2, 3, 2, 2}, r)}, {"gamma", rnd<T>({2, 3, 2, 2}, r)},
                        {"beta", rnd<T>({2, 3, 2, 2}, r)}};
             },
             [](const L& in, const Tap& tap) {
               return weighted(tap(gcm_apply(in[0].value, in[1].value, in[2].value)));
             }),
      simple("adversarial_losses",
             [](Rng& r) { return L{{"real", rnd<T>({3, 1, 2, 2}, r)}, {"fake", rnd<T>({3, 1, 2, 2}, r)}}; },
             [](const L& in, const Tap& tap) {
               const auto l = adversarial_losses(in[0].value, in[1].value);
               return tap(add(l.discriminator, scale(l.generator, T(0.5))));
             }),
  };

  out.push_back({"perceptual_loss", false, [](std::uint64_t seed, const Tap& tap) {
                   Rng rng(1000 + seed, 0);
                   auto pred = rnd<T>({1, 3, 8, 8}, rng, 0, 3);
                   auto target = rnd<T>({1, 3, 8, 8}, rng, 0, 3);
                   ParameterList<T> ext;
                   const int widths[] = {3, 4, 5};
                   int c_in = 3;
                   for (int i = 0; i < 3; ++i) {
                     ext.push_back({"extractor." + std::to_string(i) + ".w", rnd<T>({widths[i], c_in, 3, 3}, rng)});
                     ext.push_back({"extractor." + std::to_string(i) + ".b", rnd<T>({widths[i]}, rng, -0.1, 0.1)});
                     c_in = widths[i];
                   }
                   const auto extractor = FrozenFeatureExtractor<T>::from_tensors(ext);
                   return Instance<T>{{{"pred", pred}}, [extractor, target, tap](const ParameterList<T>& in) {
                                        return tap(perceptual_loss(in[0].value, target, extractor));
                                      }};
                 }});

  out.push_back({"discriminator", true, [](std::uint64_t seed, const Tap& tap) {
                   ModelConfig cfg = tiny_generator();
                   cfg.height = cfg.width = 16;
                   const auto model = cast_model<T>(Model<float>::create(cfg, 300 + seed));
                   Rng rng(2000 + seed, 0);
                   const auto real = rnd<T>({3, 3, 16, 16}, rng);
                   const auto fake = rnd<T>({3, 3, 16, 16}, rng);
                   return Instance<T>{model.discriminator_params(), [cfg, real, fake, tap](const ParameterList<T>& in) {
                                        const auto m = view(cfg, in);
                                        const auto l = adversarial_losses(discriminator_forward(real, m),
                                                                          discriminator_forward(fake, m));
                                        return tap(l.discriminator);
                                      }};
                 }});

  out.push_back({"generator", true, [](std::uint64_t seed, const Tap& tap) {
                   const ModelConfig cfg = tiny_generator();
                   const auto model = cast_model<T>(Model<float>::create(cfg, 400 + seed));
                   Rng rng(3000 + seed, 0);
                   const auto ld = rnd<T>({1, 3, 8, 8}, rng, 0, 2);
                   const auto r = rnd<T>({1, 3, 8, 8}, rng, 0, 1);
                   const auto g = rnd<T>({1, kGeometryChannels, 8, 8}, rng);
                   const auto w = rnd<T>({1, 3, 8, 8}, rng, 0.5, 1.5);
                   return Instance<T>{model.generator_params(), [cfg, ld, r, g, w, tap](const ParameterList<T>& in) {
                                        const auto m = view(cfg, in);
                                        Rng drop(50, 0);
                                        const auto p = predict_indirect(ld, r, g, m, Mode::kTrain, &drop);
                                        return mean(mul(tap(p.L_ind), w));
                                      }};
                 }});
  return out;
}

template <typename T>
std::function<Tensor<T>(const Tensor<T>&)> tap_for(const std::string& name, const std::string& fault) {
  if (name != fault) return [](const Tensor<T>& y) { return y; };
  return [](const Tensor<T>& y) { return scale_gradient(y, T(1.5)); };
}

void record(GradcheckCaseResult& res, const GradCheckReport& r, std::uint64_t seed) {
  for (const auto& e : r.entries) {
    if (!std::isfinite(e.max_rel_error) || e.max_rel_error > res.worst ||
        (res.worst_input.empty() && e.max_rel_error >= res.worst)) {
      res.worst = e.max_rel_error;
      res.worst_input = e.name;
      res.worst_seed = seed;
    }
  }
  res.passed = res.passed && r.passed();
}

}  // namespace

bool GradcheckSuiteReport::passed() const {
  for (const auto& c : cases) {
    if (!c.passed) return false;
  }
  return true;
}

std::vector<std::string> GradcheckSuiteReport::failed_names() const {
  std::vector<std::string> out;
  for (const auto& c : cases) {
    if (!c.passed) out.push_back(c.name + " (" + c.precision + ")");
  }
  return out;
}

GradcheckSuiteReport run_gradcheck_suite(const GradcheckOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  GradcheckSuiteReport report;
  const auto dcases = cases<double>();
  const auto fcases = cases<float>();
  for (std::size_t i = 0; i < dcases.size(); ++i) {
    const auto& name = dcases[i].name;
    if (dcases[i].network && !o.network) continue;
    const int seeds = dcases[i].network ? std::max(1, o.seeds / 10) : o.seeds;
    if (o.double_mode) {
      GradcheckCaseResult res{name, "float64", 0.0, "", 0, o.double_tolerance, true};
      const auto tap = tap_for<double>(name, o.inject_fault);
      for (int s = 0; s < seeds; ++s) {
        auto inst = dcases[i].make(static_cast<std::uint64_t>(s), tap);
        record(res, grad_check<double>(inst.fn, inst.params, o.double_tolerance, 1e-5), s);
      }
      report.cases.push_back(res);
    }
    if (o.float_mode) {
      GradcheckCaseResult res{name, "float32", 0.0, "", 0, o.float_tolerance, true};
      const auto tap = tap_for<float>(name, o.inject_fault);
      const auto clean = tap_for<double>("", "-");
      for (int s = 0; s < seeds; ++s) {
        auto fi = fcases[i].make(static_cast<std::uint64_t>(s), tap);
        auto di = dcases[i].make(static_cast<std::uint64_t>(s), clean);
        record(res, grad_check_against<float>(fi.fn, fi.params, di.fn, di.params, o.float_tolerance), s);
      }
      report.cases.push_back(res);
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

Json to_json(const GradcheckSuiteReport& r) {
  Json cases = Json::array();
  for (const auto& c : r.cases) {
    cases.push_back({{"name", c.name},
                     {"precision", c.precision},
                     {"worst_rel_error", c.worst},
                     {"worst_input", c.worst_input},
                     {"worst_seed", c.worst_seed},
                     {"tolerance", c.tolerance},
                     {"passed", c.passed}});
  }
  return {{"passed", r.passed()}, {"seconds", r.seconds}, {"failed", r.failed_names()}, {"cases", cases}};
}

}  // namespace ngi
