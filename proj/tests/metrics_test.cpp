// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "ngi/metrics/metrics.hpp"
#include "test_data.hpp"

namespace ngi {
namespace {

Image random_image(int c, int h, int w, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Image im(c, h, w);
  for (auto& v : im.data) v = static_cast<float>(rng.uniform(lo, hi));
  return im;
}

// Per-window SSIM straight from the definition.
double brute_ssim(const Image& a, const Image& b) {
  const int k = 8;
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    double acc = 0.0;
    int count = 0;
    for (int y = 0; y + k <= a.height; ++y) {
      for (int x = 0; x + k <= a.width; ++x) {
        double ma = 0, mb = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            ma += a.at(c, y + i, x + j);
            mb += b.at(c, y + i, x + j);
          }
        ma /= k * k;
        mb /= k * k;
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double da = a.at(c, y + i, x + j) - ma, db = b.at(c, y + i, x + j) - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
          }
        va /= k * k;
        vb /= k * k;
        cov /= k * k;
        acc += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
    total += acc / count;
  }
  return total / a.channels;
}

TEST(ToneMap, KnownValues) {
  Image im(1, 1, 3);
  im.data = {0.0f, 1.0f, 1e30f};
  const auto t = tone_map(im);
  EXPECT_EQ(t.data[0], 0.0f);
  EXPECT_NEAR(t.data[1], 0.7297, 1e-4);
  EXPECT_NEAR(t.data[1], std::pow(0.5, 1.0 / 2.2), 1e-7);
  EXPECT_NEAR(t.data[2], 1.0, 1e-6);
  im.data[0] = -1.0f;
  EXPECT_THROW(tone_map(im), std::invalid_argument);
}

TEST(Psnr, IdentityAndClosedForm) {
  Rng rng(1, 0);
  const auto a = random_image(3, 8, 8, rng, 0.2, 0.8);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_EQ(report_psnr(psnr(a, a)), kPsnrCap);
  Image b = a;
  for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] += (i % 2 ? 0.1f : -0.1f);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
  EXPECT_THROW(psnr(a, Image(3, 8, 4)), std::invalid_argument);
}

TEST(Psnr, MatchesExtendedPrecision) {
  Rng rng(2, 0);
  for (int t = 0; t < 10; ++t) {
    const auto a = random_image(3, 16, 16, rng), b = random_image(3, 16, 16, rng);
    long double acc = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      const long double d = static_cast<long double>(a.data[i]) - b.data[i];
      acc += d * d;
    }
    const long double ref = 10.0L * std::log10(1.0L / (acc / a.data.size()));
    EXPECT_NEAR(psnr(a, b), static_cast<double>(ref), 1e-6);
  }
}

TEST(Psnr, DecreasesWithNoise) {
  Rng rng(3, 0);
  const auto a = random_image(3, 16, 16, rng, 0.3, 0.7);
  const auto noise = random_image(3, 16, 16, rng, -1.0, 1.0);
  double previous = std::numeric_limits<double>::infinity();
  for (double amp : {0.001, 0.01, 0.05, 0.1, 0.2}) {
    Image b = a;
    for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] += static_cast<float>(amp) * noise.data[i];
    const double p = psnr(a, b);
    EXPECT_LT(p, previous);
    previous = p;
  }
}

TEST(Ssim, IdentityConstantsAndSymmetry) {
  Rng rng(4, 0);
  const auto a = random_image(3, 12, 10, rng), b = random_image(3, 12, 10, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-9);
  EXPECT_LT(ssim(Image(1, 8, 8, 0.0f), Image(1, 8, 8, 1.0f)), 0.01);
  EXPECT_THROW(ssim(Image(1, 7, 8), Image(1, 7, 8)), std::invalid_argument);
}

TEST(Ssim, MatchesWindowDefinition) {
  Rng rng(5, 0);
  for (int t = 0; t < 5; ++t) {
    const auto a = random_image(3, 12, 11, rng);
    Image b = a;
    for (auto& v : b.data) v = std::clamp(v + static_cast<float>(rng.uniform(-0.2, 0.2)), 0.0f, 1.0f);
    EXPECT_NEAR(ssim(a, b), brute_ssim(a, b), 1e-9);
  }
}

FrameRecord constant_frame(float ld, float r, float s) {
  FrameRecord f;
  f.L_d = Image(3, 4, 4, ld);
  f.R = Image(3, 4, 4, r);
  f.S_ind = Image(3, 4, 4, s);
  f.L_ind = Image(3, 4, 4, r * s);
  return f;
}

TEST(Baselines, AmbientConstant) {
  const std::vector<FrameRecord> frames{constant_frame(1, 0.5f, 0.3f), constant_frame(2, 0.1f, 0.3f)};
  const auto k = ambient_constant(frames);
  for (double v : k) EXPECT_NEAR(v, 0.3, 1e-7);
  EXPECT_THROW(ambient_constant({}), DatasetError);
}

TEST(Baselines, ZeroReflectanceAmbientEqualsDirect) {
  const auto f = constant_frame(0.7f, 0.0f, 0.0f);
  const auto a = baseline_ambient(f, {0.4, 0.5, 0.6});
  EXPECT_EQ(a.data, baseline_direct(f).data);
}

TEST(Report, MeansRecomputeFromFrames) {
  MethodScores m;
  m.frames = {{"a", 20.0, 0.5, 10.0}, {"b", 30.0, 0.7, 12.0}, {"c", INFINITY, 1.0, 14.0}};
  m.finalize();
  EXPECT_NEAR(m.mean_psnr, (20.0 + 30.0 + kPsnrCap) / 3, 1e-9);
  EXPECT_NEAR(m.mean_ssim, 2.2 / 3, 1e-9);
  EXPECT_NEAR(m.mean_psnr_linear, 12.0, 1e-9);
}

TEST(Evaluate, BaselinesReferenceRowAndDeterminism) {
  const auto t = test::make_dataset("metrics_eval", 16, 8, 4);
  const auto ds = load_dataset(t.dir / "manifest.json");
  const auto train = ds.split_indices("train"), test = ds.split_indices("test");
  ASSERT_EQ(test.size(), 2u);
  const Predictor truth = [](const FrameRecord& f) { return reference_radiance(f); };
  const auto r = evaluate(ds, train, test, {{"oracle", truth}});
  EXPECT_EQ(r.method("reference").mean_psnr, kPsnrCap);
  EXPECT_EQ(r.method("reference").mean_ssim, 1.0);
  EXPECT_EQ(r.method("oracle").mean_psnr, kPsnrCap);
  EXPECT_EQ(r.method("direct").frames.size(), 2u);
  EXPECT_EQ(r.dataset_hash, ds.content_hash());
  const auto again = evaluate(ds, train, test, {{"oracle", truth}});
  EXPECT_EQ(to_json(r).dump(), to_json(again).dump());
  for (const auto& m : r.methods) {
    double p = 0;
    for (const auto& f : m.frames) p += report_psnr(f.psnr);
    EXPECT_NEAR(m.mean_psnr, p / m.frames.size(), 1e-9);
  }
  EXPECT_THROW(evaluate(ds, {}, test, {}), DatasetError);
}

TEST(ShadowMask, MatchesBruteForceDistance) {
  Rng rng(31, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Image ld(3, 13, 17);
    for (int y = 0; y < 13; ++y) {
      for (int x = 0; x < 17; ++x) {
        if (rng.uniform() < 0.05) ld.at(static_cast<int>(rng.uniform_int(0, 2)), y, x) = 1.0f;
      }
    }
    const int radius = static_cast<int>(rng.uniform_int(0, 5));
    const auto mask = far_shadow_mask(ld, radius);
    for (int y = 0; y < 13; ++y) {
      for (int x = 0; x < 17; ++x) {
        int nearest = 1 << 20;
        for (int v = 0; v < 13; ++v) {
          for (int u = 0; u < 17; ++u) {
            if (ld.at(0, v, u) + ld.at(1, v, u) + ld.at(2, v, u) > 0.0f) {
              nearest = std::min(nearest, std::max(std::abs(v - y), std::abs(u - x)));
            }
          }
        }
        ASSERT_EQ(mask[y * 17 + x] != 0, nearest > radius) << trial << " " << y << " " << x;
      }
    }
  }
}

TEST(ShadowMask, FullMaskPsnrEqualsPsnr) {
  Rng rng(32, 0);
  const auto a = random_image(3, 9, 9, rng), b = random_image(3, 9, 9, rng);
  const std::vector<char> all(81, 1), none(81, 0);
  EXPECT_NEAR(psnr_masked(a, b, all), psnr(a, b), 1e-12);
  EXPECT_TRUE(std::isnan(psnr_masked(a, b, none)));
  std::vector<char> half(81, 0);
  for (int i = 0; i < 40; ++i) half[i] = 1;
  auto c = b;
  for (int ch = 0; ch < 3; ++ch) {
    for (int i = 40; i < 81; ++i) c.data[ch * 81 + i] = 0.5f;
  }
  EXPECT_EQ(psnr_masked(a, b, half), psnr_masked(a, c, half));
}

}  // namespace
}  // namespace ngi
