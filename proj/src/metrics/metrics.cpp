// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>


namespace ngi {
namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": image shapes differ (" +
                                std::to_string(a.channels) + "x" + std::to_string(a.height) + "x" +
                                std::to_string(a.width) + " vs " + std::to_string(b.channels) +
                                "x" + std::to_string(b.height) + "x" + std::to_string(b.width) +
                                ")");
  }
}

double mse(const Image& a, const Image& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

// Summed-area table with a zero first row and column.
std::vector<double> integral(const float* p, int h, int w, bool square,
                             const float* q = nullptr) {
  std::vector<double> s(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      const double v = p[y * w + x];
      row += q ? v * q[y * w + x] : (square ? v * v : v);
      s[(y + 1) * (w + 1) + x + 1] = s[y * (w + 1) + x + 1] + row;
    }
  }
  return s;
}

double box(const std::vector<double>& s, int w, int y, int x, int k) {
  const int W = w + 1;
  return s[(y + k) * W + x + k] - s[y * W + x + k] - s[(y + k) * W + x] + s[y * W + x];
}

}  // namespace

Image tone_map(const Image& hdr) {
  Image out = hdr;
  for (float& v : out.data) {
    if (!(v >= 0.0f)) throw std::invalid_argument("tone_map: negative or NaN radiance");
    const double r = static_cast<double>(v) / (1.0 + static_cast<double>(v));
    v = static_cast<float>(std::pow(r, 1.0 / 2.2));
  }
  return out;
}

double psnr(const Image& a, const Image& b) {
  require_same(a, b, "psnr");
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

double psnr_linear(const Image& prediction, const Image& reference) {
  require_same(prediction, reference, "psnr_linear");
  const double m = mse(prediction, reference);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  double peak = 0.0;
  for (float v : reference.data) peak = std::max(peak, static_cast<double>(v));
  if (peak <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

std::vector<char> far_shadow_mask(const Image& L_d, int radius) {
  if (radius < 0) throw std::invalid_argument("far_shadow_mask: negative radius");
  const int h = L_d.height, w = L_d.width;
  std::vector<int> lit(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  auto at = [w](int y, int x) { return static_cast<std::size_t>(y) * (w + 1) + x; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int c = 0; c < L_d.channels; ++c) any = any || L_d.at(c, y, x) != 0.0f;
      lit[at(y + 1, x + 1)] = lit[at(y, x + 1)] + lit[at(y + 1, x)] - lit[at(y, x)] + (any ? 1 : 0);
    }
  }
  std::vector<char> mask(static_cast<std::size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int y0 = std::max(0, y - radius), y1 = std::min(h, y + radius + 1);
      const int x0 = std::max(0, x - radius), x1 = std::min(w, x + radius + 1);
      const int n = lit[at(y1, x1)] - lit[at(y0, x1)] - lit[at(y1, x0)] + lit[at(y0, x0)];
      mask[static_cast<std::size_t>(y) * w + x] = n == 0 ? 1 : 0;
    }
  }
  return mask;
}

double psnr_masked(const Image& a, const Image& b, const std::vector<char>& mask) {
  require_same(a, b, "psnr_masked");
  if (mask.size() != a.plane()) throw std::invalid_argument("psnr_masked: mask size mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (std::size_t i = 0; i < a.plane(); ++i) {
      if (!mask[i]) continue;
      const double d = static_cast<double>(a.data[c * a.plane() + i]) - b.data[c * b.plane() + i];
      sum += d * d;
      ++n;
    }
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(n) / sum);
}

double ssim(const Image& a, const Image& b) {
  require_same(a, b, "ssim");
  const int k = kSsimWindow;
  if (a.height < k || a.width < k) {
    throw std::invalid_argument("ssim: image smaller than the 8x8 window");
  }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const double n = k * k;
  const int h = a.height, w = a.width;
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const float* pa = a.data.data() + c * a.plane();
    const float* pb = b.data.data() + c * b.plane();
    const auto sa = integral(pa, h, w, false), sb = integral(pb, h, w, false);
    const auto saa = integral(pa, h, w, true), sbb = integral(pb, h, w, true);
    const auto sab = integral(pa, h, w, false, pb);
    double acc = 0.0;
    for (int y = 0; y + k <= h; ++y) {
      for (int x = 0; x + k <= w; ++x) {
        const double ma = box(sa, w, y, x, k) / n, mb = box(sb, w, y, x, k) / n;
        const double va = std::max(0.0, box(saa, w, y, x, k) / n - ma * ma);
        const double vb = std::max(0.0, box(sbb, w, y, x, k) / n - mb * mb);
        const double cov = box(sab, w, y, x, k) / n - ma * mb;
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      }
    }
    total += acc / (static_cast<double>(h - k + 1) * (w - k + 1));
  }
  return total / a.channels;
}

std::array<double, 3> ambient_constant(const std::vector<FrameRecord>& frames) {
  if (frames.empty()) throw DatasetError("ambient baseline: empty training set");
  std::array<double, 3> sum{};
  double count = 0.0;
  for (const auto& f : frames) {
    for (int c = 0; c < 3; ++c) {
      const float* p = f.S_ind.data.data() + c * f.S_ind.plane();
      for (std::size_t i = 0; i < f.S_ind.plane(); ++i) sum[c] += p[i];
    }
    count += static_cast<double>(f.S_ind.plane());
  }
  for (double& s : sum) s /= count;
  return sum;
}

Image baseline_ambient(const FrameRecord& f, const std::array<double, 3>& k) {
  Image out = f.L_d;
  for (int c = 0; c < 3; ++c) {
    const auto kc = static_cast<float>(k[c]);
    for (std::size_t i = 0; i < out.plane(); ++i) {
      const std::size_t j = c * out.plane() + i;
      out.data[j] = f.L_d.data[j] + f.R.data[j] * kc;
    }
  }
  return out;
}

Image baseline_direct(const FrameRecord& f) { return f.L_d; }

Image reference_radiance(const FrameRecord& f) {
  Image out = f.L_d;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += f.L_ind.data[i];
  return out;
}

double report_psnr(double v) { return std::min(v, kPsnrCap); }

void MethodScores::finalize() {
  double p = 0.0, s = 0.0, l = 0.0;
  for (const auto& f : frames) {
    p += report_psnr(f.psnr);
    s += f.ssim;
    l += report_psnr(f.psnr_linear);
  }
  const double n = frames.empty() ? 1.0 : static_cast<double>(frames.size());
  mean_psnr = p / n;
  mean_ssim = s / n;
  mean_psnr_linear = l / n;
}

const MethodScores& EvalReport::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw std::out_of_range("report has no method " + name);
}

FrameScore score_frame(const std::string& id, const Image& prediction, const Image& reference) {
  const Image tp = tone_map(prediction), tr = tone_map(reference);
  return {id, psnr(tp, tr), ssim(tp, tr), psnr_linear(prediction, reference)};
}

EvalReport evaluate(const Dataset& dataset, const std::vector<std::size_t>& train,
                    const std::vector<std::size_t>& test,
                    const std::vector<std::pair<std::string, Predictor>>& predictors) {
  if (train.empty()) throw DatasetError("evaluate: no training frames for the ambient baseline");
  EvalReport r;
  {
    std::array<double, 3> sum{};
    double count = 0.0;
    for (std::size_t i : train) {
      const auto k = ambient_constant({dataset.load_frame(i)});
      for (int c = 0; c < 3; ++c) sum[c] += k[c];
      count += 1.0;
    }
    for (int c = 0; c < 3; ++c) r.ambient_k[c] = sum[c] / count;
  }
  r.dataset_hash = dataset.content_hash();
  r.methods.push_back({"reference", {}, 0, 0, 0});
  for (const auto& p : predictors) r.methods.push_back({p.first, {}, 0, 0, 0});
  r.methods.push_back({"ambient", {}, 0, 0, 0});
  r.methods.push_back({"direct", {}, 0, 0, 0});
  for (auto& m : r.methods) m.frames.resize(test.size());

  for (std::size_t t = 0; t < test.size(); ++t) {
    const FrameRecord f = dataset.load_frame(test[t]);
    const std::string& id = dataset.entry(test[t]).id;
    const Image ref = reference_radiance(f);
    std::size_t m = 0;
    r.methods[m++].frames[t] = score_frame(id, ref, ref);
    for (const auto& p : predictors) r.methods[m++].frames[t] = score_frame(id, p.second(f), ref);
    r.methods[m++].frames[t] = score_frame(id, baseline_ambient(f, r.ambient_k), ref);
    r.methods[m++].frames[t] = score_frame(id, baseline_direct(f), ref);
  }
  for (auto& m : r.methods) m.finalize();
  return r;
}

Json to_json(const EvalReport& r) {
  Json j;
  j["dataset_hash"] = r.dataset_hash;
  j["config"] = r.config;
  j["ambient_k"] = r.ambient_k;
  j["metric_space"] = "tone-mapped (Reinhard, gamma 1/2.2); psnr_linear on HDR radiance";
  Json methods = Json::array();
  for (const auto& m : r.methods) {
    Json mj;
    mj["method"] = m.method;
    mj["mean_psnr"] = m.mean_psnr;
    mj["mean_ssim"] = m.mean_ssim;
    mj["mean_psnr_linear"] = m.mean_psnr_linear;
    Json frames = Json::array();
    for (const auto& f : m.frames) {
      frames.push_back({{"id", f.id},
                        {"psnr", report_psnr(f.psnr)},
                        {"ssim", f.ssim},
                        {"psnr_linear", report_psnr(f.psnr_linear)}});
    }
    mj["frames"] = frames;
    methods.push_back(mj);
  }
  j["methods"] = methods;
  return j;
}

}  // namespace ngi
