// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ngi/io/dataset.hpp"
#include "ngi/metrics/metrics.hpp"
#include "ngi/network/network.hpp"
#include "ngi/objective/objective.hpp"

namespace ngi {

/// A loss or gradient became NaN or infinite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int epochs = 80;
  int batch_size = 4;
  std::uint64_t model_seed = 1;
  std::uint64_t train_seed = 1;
  std::uint64_t extractor_seed = 7;
  /// Exposure factors are drawn log-uniformly from [alpha_min, alpha_max].
  double alpha_min = 0.5;
  double alpha_max = 2.0;
  bool augment = true;
  LossWeights weights;
  AdamConfig adam_generator{5e-4, 0.5, 0.999, 1e-8};
  AdamConfig adam_discriminator{5e-4, 0.5, 0.999, 1e-8};
  /// Held-out evaluation every this many epochs; 0 disables it.
  int eval_every = 1;
  /// Evaluate on at most this many held-out frames; 0 means all.
  int eval_frames = 0;
  /// When positive, run this many steps on one training frame (overfit
  /// harness) instead of epochs.
  int overfit_iterations = 0;
  std::string overfit_id;
  std::vector<int> extractor_widths{8, 16, 32};

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

Json to_json(const ModelConfig& c);
Json to_json(const TrainConfig& c);
/// Keys missing from `j` keep their defaults; unknown keys throw ConfigError.
ModelConfig model_config_from_json(const Json& j, ModelConfig base = {});
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});

/// Scales L_d, L_ind and S_ind by alpha; reflectance and geometry are kept.
FrameRecord augment_exposure(const FrameRecord& frame, double alpha);

/// Exposure factor of the frame at `position` in epoch `epoch`.
double exposure_factor(const TrainConfig& c, std::int64_t epoch, std::int64_t position);

/// Network inputs and targets for a batch of frames, all [B, C, H, W].
struct Batch {
  Tensor<float> ld, r, geometry, s_ind, l;
};
Batch make_batch(const std::vector<FrameRecord>& frames);

/// Image <-> tensor conversion for one batch entry.
Tensor<float> image_tensor(const std::vector<const Image*>& images);
Image tensor_image(const Tensor<float>& t, std::int64_t b = 0);

struct TrainState {
  Model<float> model;
  FrozenFeatureExtractor<float> extractor;
  AdamState<float> opt_generator;
  AdamState<float> opt_discriminator;
  TrainConfig config;
  std::int64_t epoch = 0;
  std::int64_t iteration = 0;
  /// Free-form record of where the state came from (input hashes).
  Json provenance = Json::object();

  static TrainState create(const ModelConfig& model, const TrainConfig& train);
  /// Deep copy: no tensor is shared with `this`.
  TrainState clone() const;
};

struct StepLosses {
  double content = 0.0;
  double perceptual = 0.0;
  double adversarial = 0.0;
  double discriminator = 0.0;
  double total = 0.0;
};

/// One discriminator update on detached fakes followed by one generator
/// update on the weighted loss. Terms whose weight is zero are skipped, and a
/// zero adversarial weight also skips the discriminator update. Throws
/// NumericalError naming the first non-finite term.
StepLosses train_step(const Batch& batch, TrainState& state, Rng& dropout_rng);

/// Content loss of the current generator on `batch`, inference mode.
double content_loss(const Batch& batch, const TrainState& state);

struct FramePrediction {
  Image S_ind, L_ind, L;
};
/// Inference-mode prediction for one frame.
FramePrediction predict_frame(const Model<float>& model, const FrameRecord& frame);

struct TrainResult {
  TrainState state;
  std::optional<TrainState> best;
  double best_psnr = -1.0;
  /// One entry per epoch (or per overfit iteration).
  Json log = Json::array();
};

using LogSink = std::function<void(const Json&)>;

/// Continues training `state` up to `state.config.epochs` epochs (or runs the
/// overfit harness). Throws DatasetError when there are no training frames.
TrainResult train_loop(const Dataset& dataset, TrainState state, const LogSink& sink = {});

/// Evaluation rows for a model on held-out frames.
EvalReport evaluate_model(const Model<float>& model, const Dataset& dataset, int max_frames = 0);

}  // namespace ngi
