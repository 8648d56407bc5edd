// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ngi/io/dataset.hpp"
#include "ngi/scenegen/image.hpp"

namespace ngi {

/// PSNR values above this are written as this value in reports.
inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 8;

/// Reinhard x / (1 + x) followed by gamma 1/2.2. Throws std::invalid_argument
/// on negative or NaN input.
Image tone_map(const Image& hdr);

/// 10 log10(1 / MSE) for images in [0, 1]; +inf for identical images.
double psnr(const Image& a, const Image& b);
/// 10 log10(peak^2 / MSE) on linear radiance, peak = max of `reference`.
double psnr_linear(const Image& prediction, const Image& reference);
/// Mean SSIM over all 8x8 windows (stride 1, uniform weights) averaged over
/// channels. C1 = 0.01^2, C2 = 0.03^2 for unit dynamic range.
double ssim(const Image& a, const Image& b);

/// Pixel mask (row-major, H*W) of shadowed pixels: zero direct radiance in
/// every channel and no directly lit pixel within Chebyshev distance `radius`.
std::vector<char> far_shadow_mask(const Image& L_d, int radius);
/// PSNR over all channels of the pixels selected by `mask`; NaN when the
/// mask is empty.
double psnr_masked(const Image& a, const Image& b, const std::vector<char>& mask);

/// Per-channel mean of S_ind over `frames`.
std::array<double, 3> ambient_constant(const std::vector<FrameRecord>& frames);
/// L_d + R * k.
Image baseline_ambient(const FrameRecord& frame, const std::array<double, 3>& k);
Image baseline_direct(const FrameRecord& frame);
/// Reference radiance L_d + L_ind.
Image reference_radiance(const FrameRecord& frame);

struct FrameScore {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
  double psnr_linear = 0.0;
};

struct MethodScores {
  std::string method;
  std::vector<FrameScore> frames;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_psnr_linear = 0.0;

  /// Recomputes the means from the per-frame entries, with PSNR capped.
  void finalize();
};

struct EvalReport {
  std::vector<MethodScores> methods;
  std::array<double, 3> ambient_k{};
  std::string dataset_hash;
  Json config = Json::object();

  const MethodScores& method(const std::string& name) const;
};

/// Scores tone-mapped prediction against tone-mapped reference.
FrameScore score_frame(const std::string& id, const Image& prediction, const Image& reference);

using Predictor = std::function<Image(const FrameRecord&)>;

/// Evaluates the held-out frames `test` with the model rows produced by
/// `predictors` (may be empty) plus the ambient and direct-only baselines.
/// The ambient constant is computed over `train`; throws DatasetError when
/// `train` is empty.
EvalReport evaluate(const Dataset& dataset, const std::vector<std::size_t>& train,
                    const std::vector<std::size_t>& test,
                    const std::vector<std::pair<std::string, Predictor>>& predictors);

Json to_json(const EvalReport& r);
/// Caps infinities at kPsnrCap for JSON output.
double report_psnr(double v);

}  // namespace ngi
