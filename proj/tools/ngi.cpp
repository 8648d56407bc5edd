// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

// ngi: dataset generation, training, inference, evaluation and gradient checks.

#include <CLI11.hpp>

#include <iostream>

#include "ngi/cli/commands.hpp"
#include "ngi/io/files.hpp"

namespace {

using namespace ngi;
namespace fs = std::filesystem;

void print_line(const Json& j) { std::cout << j.dump() << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural global illumination toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Render a procedural dataset");
  std::optional<fs::path> gen_config;
  fs::path gen_out;
  std::optional<int> gen_frames, gen_resolution, gen_spp;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::string> gen_scene;
  gen->add_option("--config", gen_config, "JSON config (\"data\" section)")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--frames", gen_frames, "Number of frames");
  gen->add_option("--seed", gen_seed, "Dataset seed");
  gen->add_option("--resolution", gen_resolution, "Square image size");
  gen->add_option("--spp", gen_spp, "Indirect samples per pixel");
  gen->add_option("--scene", gen_scene, "random | long_range");

  // train
  auto* train = app.add_subcommand("train", "Train a model");
  TrainOptions topt;
  std::optional<int> overfit;
  train->add_option("--data", topt.data, "Dataset directory or manifest")->required();
  train->add_option("--out", topt.out, "Output directory")->required();
  train->add_option("--config", topt.config, "JSON config (\"model\"/\"train\" sections)")->check(CLI::ExistingFile);
  train->add_option("--epochs", topt.epochs, "Override epoch count");
  train->add_option("--overfit-one", overfit, "Overfit harness: iterations on one training frame")
      ->expected(0, 1)
      ->default_str("300");
  train->add_option("--resume", topt.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);

  // infer
  auto* infer = app.add_subcommand("infer", "Predict one frame");
  InferOptions iopt;
  infer->add_option("--ckpt", iopt.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  infer->add_option("--data", iopt.data, "Dataset directory or manifest")->required();
  infer->add_option("--frame-id", iopt.frame_id, "Frame id")->required();
  infer->add_option("--out", iopt.out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate on held-out frames");
  EvalOptions eopt;
  eval->add_option("--ckpt", eopt.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eopt.data, "Dataset directory or manifest")->required();
  eval->add_option("--report", eopt.report, "Report path")->required();
  eval->add_option("--ablate", eopt.ablate, "no-gfa: also train and score the GFA-removed variant");
  eval->add_option("--max-frames", eopt.max_frames, "Limit held-out frames (0 = all)");

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  GradcheckOptions gopt;
  std::optional<fs::path> grad_report;
  bool no_float = false;
  grad->add_option("--seeds", gopt.seeds, "Random instances per op");
  grad->add_flag("--no-float", no_float, "Skip the 32-bit pass");
  grad->add_option("--report", grad_report, "Write the JSON report here");
  grad->add_option("--inject-fault", gopt.inject_fault, "Test fixture: corrupt one case's backward pass");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) {
      RunConfig rc = load_run_config(gen_config);
      if (gen_frames) rc.data.frames = *gen_frames;
      if (gen_seed) rc.data.seed = *gen_seed;
      if (gen_resolution) rc.data.resolution = *gen_resolution;
      if (gen_spp) rc.data.spp = *gen_spp;
      if (gen_scene) rc.data.scene = *gen_scene;
      const auto stats = generate_dataset(rc.data, gen_out, print_line);
      print_line({{"command", "gen-data"}, {"config", to_json(rc.data)}, {"stats", to_json(stats)},
                  {"dataset", load_dataset(gen_out / "manifest.json").content_hash()}});
    } else if (*train) {
      if (train->count("--overfit-one") > 0) topt.overfit_iterations = overfit.value_or(300);
      const Json doc = cmd_train(topt, print_line);
      print_line({{"command", "train"}, {"outputs", doc["outputs"]}, {"best_psnr", doc["best_psnr"]}});
    } else if (*infer) {
      const Json doc = cmd_infer(iopt);
      print_line({{"command", "infer"}, {"frame", doc["frame"]}, {"seconds", doc["seconds"]},
                  {"psnr", doc["psnr"]}, {"ssim", doc["ssim"]}});
    } else if (*eval) {
      const Json doc = cmd_eval(eopt, print_line);
      Json summary = Json::object();
      for (const auto& m : doc["report"]["methods"]) {
        summary[m["method"].get<std::string>()] = {{"psnr", m["mean_psnr"]}, {"ssim", m["mean_ssim"]}};
      }
      print_line({{"command", "eval"}, {"report", eopt.report.string()}, {"methods", summary}});
    } else if (*grad) {
      gopt.float_mode = !no_float;
      bool passed = false;
      const Json doc = cmd_gradcheck(gopt, passed);
      if (grad_report) write_file_atomic(*grad_report, doc.dump(2) + "\n");
      for (const auto& c : doc["cases"]) {
        std::cout << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << " ["
                  << c["precision"].get<std::string>() << "] worst " << c["worst_rel_error"].get<double>()
                  << " (" << c["worst_input"].get<std::string>() << ")\n";
      }
      std::cout << (passed ? "gradcheck passed" : "gradcheck FAILED") << " in " << doc["seconds"].get<double>()
                << " s" << std::endl;
      return passed ? kExitOk : kExitNumerical;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return exit_code_for(e);
  }
  return kExitOk;
}
