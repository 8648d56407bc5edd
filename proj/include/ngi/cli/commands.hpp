// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include "ngi/cli/gradcheck_suite.hpp"
#include "ngi/scenegen/frame.hpp"
#include "ngi/trainer/trainer.hpp"

namespace ngi {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

struct GenDataConfig {
  int resolution = 128;
  int spp = 256;
  int max_bounces = 4;
  int frames = 232;
  /// Share of frames held out; 32 of the default 232.
  double test_fraction = 32.0 / 232.0;
  std::uint64_t seed = 1;
  /// "random" rooms or "long_range" slab-shaded rooms.
  std::string scene = "random";
  double colored_light_probability = 0.0;
  ViewFilterConfig filter;
  /// Camera draws per scene before a new scene is drawn.
  int views_per_scene = 8;

  void validate() const;
};

Json to_json(const GenDataConfig& c);
GenDataConfig gen_data_config_from_json(const Json& j, GenDataConfig base = {});

struct GenDataStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t scenes = 0;
  /// Rejections by failed criterion (a view can fail several).
  std::int64_t too_close = 0;
  std::int64_t too_flat = 0;
  std::int64_t too_dark = 0;
  /// Largest relative error of L_d + R * S_ind against L_d + L_ind.
  double max_recomposition_error = 0.0;
};

/// Every generated frame must recompose within this relative error.
inline constexpr double kRecompositionTolerance = 1e-5;
Json to_json(const GenDataStats& s);

/// Renders cfg.frames accepted frames into `out` and writes its manifest.
/// A frame that fails recomposition throws NumericalError.
/// Throws DatasetError with the filter statistics once more than 99% of at
/// least 100 viewpoint draws have been rejected.
GenDataStats generate_dataset(const GenDataConfig& cfg, const std::filesystem::path& out,
                              const LogSink& log = {});

/// Configuration file with optional "data", "model" and "train" sections.
struct RunConfig {
  GenDataConfig data;
  ModelConfig model;
  TrainConfig train;
  /// True when the file fixes the model resolution instead of taking the
  /// dataset's.
  bool model_resolution_set = false;
};
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);
RunConfig run_config_from_json(const Json& j);
Json to_json(const RunConfig& c);

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  std::optional<int> epochs;
  /// Overfit harness: train on one frame for this many iterations.
  std::optional<int> overfit_iterations;
  std::optional<std::filesystem::path> resume;
};

/// Writes out/model.ckpt, out/best.ckpt (when evaluation ran) and
/// out/train_log.json. Returns the log document.
Json cmd_train(const TrainOptions& o, const LogSink& progress = {});

struct InferOptions {
  std::filesystem::path ckpt;
  std::filesystem::path data;
  std::string frame_id;
  std::filesystem::path out;
};

/// Writes <id>_S_ind.pfm, <id>_L_ind.pfm, <id>_L.pfm, a tone-mapped
/// <id>_preview.png and <id>_infer.json (timing, config echo, input hashes).
Json cmd_infer(const InferOptions& o);

struct EvalOptions {
  std::filesystem::path ckpt;
  std::filesystem::path data;
  std::filesystem::path report;
  /// "" or "no-gfa": additionally train the GFA-removed variant with the
  /// checkpoint's configuration and report it alongside.
  std::string ablate;
  int max_frames = 0;
};

Json cmd_eval(const EvalOptions& o, const LogSink& progress = {});

/// Runs the gradient-check suite; the report lists every case.
Json cmd_gradcheck(const GradcheckOptions& o, bool& passed);

/// 8-bit RGB PNG of the tone-mapped image.
void write_preview_png(const Image& hdr, const std::filesystem::path& path);

}  // namespace ngi
