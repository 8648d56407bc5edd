// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "ngi/io/files.hpp"
#include "ngi/trainer/checkpoint.hpp"
#include "ngi/trainer/trainer.hpp"
#include "test_data.hpp"

namespace ngi {
namespace {

ModelConfig small_model(int size = 16) {
  ModelConfig c;
  c.levels = 2;
  c.base_width = 4;
  c.geometry_width = 4;
  c.heads = 1;
  c.key_dim = 4;
  c.height = size;
  c.width = size;
  c.disc_width = 4;
  return c;
}

TrainConfig small_train() {
  TrainConfig t;
  t.epochs = 2;
  t.batch_size = 2;
  t.eval_every = 1;
  return t;
}

const test::TinyData& tiny() {
  static const test::TinyData data = test::make_dataset("trainer", 10, 16);
  return data;
}

Dataset tiny_dataset() { return Dataset::load(tiny().dir / "manifest.json"); }

bool same_bits(const Image& a, const Image& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

std::string param_hash(const ParameterList<float>& params) {
  std::string bytes;
  for (const auto& p : params) {
    bytes.append(reinterpret_cast<const char*>(p.value.data().data()), p.value.numel() * sizeof(float));
  }
  return sha256_hex(bytes);
}

TEST(Augment, UnitFactorIsBitExact) {
  const auto f = tiny_dataset().load_frame(0);
  const auto g = augment_exposure(f, 1.0);
  for (auto im : {&FrameRecord::L_d, &FrameRecord::L_ind, &FrameRecord::S_ind, &FrameRecord::R,
                  &FrameRecord::N, &FrameRecord::D, &FrameRecord::P}) {
    EXPECT_TRUE(same_bits(f.*im, g.*im));
  }
}

TEST(Augment, DoublingScalesRadianceOnly) {
  const auto f = tiny_dataset().load_frame(1);
  const auto g = augment_exposure(f, 2.0);
  for (std::size_t i = 0; i < f.L_d.data.size(); ++i) {
    ASSERT_EQ(g.L_d.data[i], 2.0f * f.L_d.data[i]);
    ASSERT_EQ(g.L_ind.data[i], 2.0f * f.L_ind.data[i]);
    ASSERT_EQ(g.S_ind.data[i], 2.0f * f.S_ind.data[i]);
  }
  EXPECT_TRUE(same_bits(f.R, g.R));
  EXPECT_TRUE(same_bits(f.N, g.N));
  EXPECT_TRUE(same_bits(f.D, g.D));
  EXPECT_TRUE(same_bits(f.P, g.P));
}

TEST(Augment, RoundTripWithinOneUlp) {
  const auto f = tiny_dataset().load_frame(2);
  const auto g = augment_exposure(augment_exposure(f, 2.0), 0.5);
  for (std::size_t i = 0; i < f.L_ind.data.size(); ++i) {
    const float a = f.L_ind.data[i];
    EXPECT_LE(std::fabs(g.L_ind.data[i] - a), std::fabs(std::nextafter(a, INFINITY) - a));
  }
}

TEST(Augment, CommutesWithComposition) {
  const auto f = tiny_dataset().load_frame(3);
  const double alpha = 1.37;
  const auto g = augment_exposure(f, alpha);
  const auto lhs = compose_global(g.L_d, g.R, g.S_ind);
  const auto base = compose_global(f.L_d, f.R, f.S_ind);
  for (std::size_t i = 0; i < lhs.data.size(); ++i) {
    const double want = alpha * base.data[i];
    EXPECT_NEAR(lhs.data[i], want, 4e-7 * std::max(1.0, std::fabs(want)));
  }
}

TEST(Augment, RejectsNonPositiveFactor) {
  const auto f = tiny_dataset().load_frame(0);
  EXPECT_THROW(augment_exposure(f, 0.0), std::invalid_argument);
  EXPECT_THROW(augment_exposure(f, -1.0), std::invalid_argument);
}

TEST(Augment, ExposureFactorsAreLogUniform) {
  TrainConfig c;
  double sum_log = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const double a = exposure_factor(c, i / 100, i % 100);
    ASSERT_GE(a, c.alpha_min);
    ASSERT_LE(a, c.alpha_max);
    sum_log += std::log(a);
  }
  // log-uniform on [1/2, 2] has mean log 0 and sd log(4)/sqrt(12).
  EXPECT_NEAR(sum_log / n, 0.0, 4.0 * std::log(4.0) / std::sqrt(12.0 * n));
  EXPECT_EQ(exposure_factor(c, 3, 5), exposure_factor(c, 3, 5));
  c.augment = false;
  EXPECT_EQ(exposure_factor(c, 3, 5), 1.0);
}

TEST(Config, JsonRoundTrip) {
  TrainConfig t = small_train();
  t.weights.taps = {1.0, 2.0, 3.0};
  t.overfit_id = "f00001";
  const auto back = train_config_from_json(to_json(t));
  EXPECT_EQ(to_json(back).dump(), to_json(t).dump());
  const auto m = small_model();
  EXPECT_EQ(to_json(model_config_from_json(to_json(m))).dump(), to_json(m).dump());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(train_config_from_json(Json{{"epoch", 3}}), ConfigError);
  EXPECT_THROW(model_config_from_json(Json{{"lvls", 3}}), ConfigError);
  EXPECT_THROW(train_config_from_json(Json{{"weights", {{"content", -1.0}}}}).validate(), ConfigError);
  TrainConfig t;
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = {};
  t.alpha_min = 0.0;
  EXPECT_THROW(t.validate(), ConfigError);
}

Batch tiny_batch() {
  const auto ds = tiny_dataset();
  return make_batch({ds.load_frame(0), ds.load_frame(1)});
}

TEST(TrainStep, ZeroLearningRateLeavesParametersUnchanged) {
  TrainConfig t = small_train();
  t.adam_generator.learning_rate = 0.0;
  t.adam_discriminator.learning_rate = 0.0;
  auto s = TrainState::create(small_model(), t);
  const auto before = param_hash(s.model.params.list());
  Rng rng(1, 0);
  const auto l = train_step(tiny_batch(), s, rng);
  EXPECT_EQ(param_hash(s.model.params.list()), before);
  EXPECT_GT(l.content, 0.0);
  EXPECT_GT(l.perceptual, 0.0);
  EXPECT_GT(l.adversarial, 0.0);
  EXPECT_GT(l.discriminator, 0.0);
  EXPECT_TRUE(std::isfinite(l.total));
}

TEST(TrainStep, Deterministic) {
  const auto batch = tiny_batch();
  auto a = TrainState::create(small_model(), small_train());
  auto b = TrainState::create(small_model(), small_train());
  Rng ra(5, 0), rb(5, 0);
  const auto la = train_step(batch, a, ra);
  const auto lb = train_step(batch, b, rb);
  EXPECT_EQ(la.total, lb.total);
  EXPECT_EQ(la.discriminator, lb.discriminator);
  EXPECT_EQ(param_hash(a.model.params.list()), param_hash(b.model.params.list()));
}

TEST(TrainStep, DescendsOnFixedBatch) {
  const auto batch = tiny_batch();
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TrainConfig t = small_train();
    t.model_seed = seed + 1;
    auto s = TrainState::create(small_model(), t);
    const double before = content_loss(batch, s);
    Rng rng(seed, 3);
    train_step(batch, s, rng);
    improved += content_loss(batch, s) < before;
  }
  EXPECT_GE(improved, 16);
}

TEST(TrainStep, UpdatesAreIsolated) {
  const auto batch = tiny_batch();
  // Discriminator only: the generator step is a no-op at zero learning rate.
  TrainConfig t = small_train();
  t.adam_generator.learning_rate = 0.0;
  auto s = TrainState::create(small_model(), t);
  const auto g0 = param_hash(s.model.generator_params());
  const auto d0 = param_hash(s.model.discriminator_params());
  Rng rng(2, 0);
  train_step(batch, s, rng);
  EXPECT_EQ(param_hash(s.model.generator_params()), g0);
  EXPECT_NE(param_hash(s.model.discriminator_params()), d0);

  t = small_train();
  t.adam_discriminator.learning_rate = 0.0;
  s = TrainState::create(small_model(), t);
  const auto g1 = param_hash(s.model.generator_params());
  const auto d1 = param_hash(s.model.discriminator_params());
  Rng rng2(2, 0);
  train_step(batch, s, rng2);
  EXPECT_NE(param_hash(s.model.generator_params()), g1);
  EXPECT_EQ(param_hash(s.model.discriminator_params()), d1);
}

TEST(TrainStep, NoAdversarialWeightSkipsDiscriminator) {
  TrainConfig t = small_train();
  t.weights.adversarial = 0.0;
  auto s = TrainState::create(small_model(), t);
  const auto d0 = param_hash(s.model.discriminator_params());
  Rng rng(2, 0);
  const auto l = train_step(tiny_batch(), s, rng);
  EXPECT_EQ(l.adversarial, 0.0);
  EXPECT_EQ(l.discriminator, 0.0);
  EXPECT_EQ(param_hash(s.model.discriminator_params()), d0);
}

TEST(TrainStep, NonFiniteInputNamesTheTerm) {
  auto batch = tiny_batch();
  batch.s_ind.mutable_data()[0] = std::numeric_limits<float>::quiet_NaN();
  auto s = TrainState::create(small_model(), small_train());
  Rng rng(2, 0);
  try {
    train_step(batch, s, rng);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("content"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  auto s = TrainState::create(small_model(), small_train());
  Rng rng(2, 0);
  train_step(tiny_batch(), s, rng);
  const auto bytes = checkpoint_bytes(s);
  const auto loaded = checkpoint_from_bytes(bytes);
  EXPECT_EQ(checkpoint_bytes(loaded), bytes);
  EXPECT_EQ(loaded.iteration, s.iteration);
  EXPECT_EQ(loaded.opt_generator.step, s.opt_generator.step);
  const auto& a = s.model.params.list();
  const auto& b = loaded.model.params.list();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_TRUE(test::bit_equal(a[i].value, b[i].value)) << a[i].name;
  }
}

TEST(Checkpoint, InferenceMatchesAfterReload) {
  auto s = TrainState::create(small_model(), small_train());
  Rng rng(4, 0);
  train_step(tiny_batch(), s, rng);
  const auto dir = test::scratch_dir("ckpt_reload");
  save_checkpoint(s, dir / "model.ckpt");
  const auto loaded = load_checkpoint(dir / "model.ckpt");
  const auto frame = tiny_dataset().load_frame(7);
  EXPECT_TRUE(same_bits(predict_frame(s.model, frame).L, predict_frame(loaded.model, frame).L));
}

void expect_error(const std::string& bytes, const std::string& needle) {
  try {
    checkpoint_from_bytes(bytes);
    FAIL() << "expected CheckpointError containing " << needle;
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, CorruptionIsReportedDistinctly) {
  const auto bytes = checkpoint_bytes(TrainState::create(small_model(), small_train()));
  expect_error(bytes.substr(0, bytes.size() / 2), "truncat");
  expect_error(bytes.substr(0, 10), "truncat");
  expect_error("XXXX" + bytes.substr(4), "magic");
  auto v = bytes;
  v[4] = 9;
  expect_error(v, "version");
  auto c = bytes;
  c[c.size() / 2] ^= 0x40;
  expect_error(c, "checksum");
}

TEST(TrainLoop, LogHasOneEntryPerEpochWithEval) {
  const auto ds = tiny_dataset();
  int calls = 0;
  const auto r = train_loop(ds, TrainState::create(small_model(), small_train()),
                            [&](const Json&) { ++calls; });
  ASSERT_EQ(r.log.size(), 2u);
  EXPECT_EQ(calls, 2);
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    EXPECT_EQ(r.log[i]["epoch"].get<int>(), static_cast<int>(i) + 1);
    EXPECT_TRUE(r.log[i].contains("eval"));
  }
  EXPECT_EQ(r.state.epoch, 2);
  EXPECT_EQ(r.state.iteration, 2 * 5);  // 9 train frames, batch 2
  ASSERT_TRUE(r.best.has_value());
  EXPECT_GT(r.best_psnr, 0.0);
}

TEST(TrainLoop, ResumeReproducesTrajectory) {
  const auto ds = tiny_dataset();
  TrainConfig t = small_train();
  t.epochs = 3;
  t.eval_every = 0;
  const auto full = train_loop(ds, TrainState::create(small_model(), t));

  TrainConfig half = t;
  half.epochs = 1;
  const auto first = train_loop(ds, TrainState::create(small_model(), half));
  auto resumed = checkpoint_from_bytes(checkpoint_bytes(first.state));
  resumed.config.epochs = 3;
  const auto rest = train_loop(ds, std::move(resumed));
  ASSERT_EQ(rest.log.size(), 2u);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(rest.log[i]["losses"].dump(), full.log[i + 1]["losses"].dump());
  }
  EXPECT_EQ(checkpoint_bytes(rest.state), checkpoint_bytes(full.state));
}

TEST(TrainLoop, OverfitModeTrainsOnOneFrame) {
  TrainConfig t = small_train();
  t.overfit_iterations = 5;
  t.overfit_id = "f00003";
  const auto r = train_loop(tiny_dataset(), TrainState::create(small_model(), t));
  EXPECT_EQ(r.log.size(), 5u);
  EXPECT_EQ(r.state.iteration, 5);
  EXPECT_EQ(r.state.epoch, 0);
}

TEST(TrainLoop, RejectsResolutionMismatchAndEmptyData) {
  EXPECT_THROW(train_loop(tiny_dataset(), TrainState::create(small_model(32), small_train())),
               ConfigError);
  auto empty = test::make_dataset("trainer_empty", 0, 16);
  EXPECT_THROW(train_loop(Dataset::load(empty.dir / "manifest.json"),
                          TrainState::create(small_model(), small_train())),
               DatasetError);
}

TEST(TrainLoop, ZeroEpochsMakesNoUpdates) {
  TrainConfig t = small_train();
  t.epochs = 0;
  const auto init = TrainState::create(small_model(), t);
  const auto r = train_loop(tiny_dataset(), init.clone());
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(checkpoint_bytes(r.state), checkpoint_bytes(init));
}

}  // namespace
}  // namespace ngi
