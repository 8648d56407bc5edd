// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/trainer/trainer.hpp"

#include <cmath>
#include <set>

namespace ngi {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5f0f;
constexpr std::uint64_t kExposureStream = 0xe7905;
constexpr std::uint64_t kDropoutStream = 0xd50;

void check_keys(const Json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError(std::string("unknown ") + what + " config key '" + k + "'");
  }
}

template <typename V>
void read(const Json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

Json adam_json(const AdamConfig& a) {
  return {{"learning_rate", a.learning_rate}, {"beta1", a.beta1}, {"beta2", a.beta2},
          {"epsilon", a.epsilon}};
}

AdamConfig adam_from_json(const Json& j, AdamConfig a) {
  check_keys(j, {"learning_rate", "beta1", "beta2", "epsilon"}, "adam");
  read(j, "learning_rate", a.learning_rate);
  read(j, "beta1", a.beta1);
  read(j, "beta2", a.beta2);
  read(j, "epsilon", a.epsilon);
  return a;
}

bool finite(const Tensor<float>& t) {
  for (float v : t.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_finite(const Tensor<float>& t, const char* term) {
  if (!finite(t)) throw NumericalError(std::string("non-finite ") + term + " loss");
}

void require_finite_grads(const ParameterList<float>& params) {
  for (const auto& p : params) {
    for (float g : p.value.grad()) {
      if (!std::isfinite(g)) throw NumericalError("non-finite gradient in " + p.name);
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(alpha_min > 0.0) || !(alpha_max >= alpha_min)) fail("need 0 < alpha_min <= alpha_max");
  if (eval_every < 0 || eval_frames < 0) fail("eval_every and eval_frames must be >= 0");
  if (overfit_iterations < 0) fail("overfit_iterations must be >= 0");
  if (extractor_widths.empty()) fail("extractor_widths must not be empty");
  for (int w : extractor_widths) {
    if (w < 1) fail("extractor widths must be positive");
  }
  if (!(adam_generator.learning_rate >= 0.0) || !(adam_discriminator.learning_rate >= 0.0)) {
    fail("learning rates must be >= 0");
  }
  try {
    weights.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (!weights.taps.empty() && weights.taps.size() != extractor_widths.size()) {
    fail("one perceptual tap weight per extractor stage is required");
  }
}

Json to_json(const ModelConfig& c) {
  return {{"levels", c.levels},
          {"base_width", c.base_width},
          {"geometry_width", c.geometry_width},
          {"heads", c.heads},
          {"key_dim", c.key_dim},
          {"height", c.height},
          {"width", c.width},
          {"dropout", c.dropout},
          {"leaky_slope", c.leaky_slope},
          {"disc_width", c.disc_width},
          {"use_gfa", c.use_gfa},
          {"monochromatic", c.monochromatic}};
}

ModelConfig model_config_from_json(const Json& j, ModelConfig c) {
  check_keys(j,
             {"levels", "base_width", "geometry_width", "heads", "key_dim", "height", "width",
              "dropout", "leaky_slope", "disc_width", "use_gfa", "monochromatic"},
             "model");
  read(j, "levels", c.levels);
  read(j, "base_width", c.base_width);
  read(j, "geometry_width", c.geometry_width);
  read(j, "heads", c.heads);
  read(j, "key_dim", c.key_dim);
  read(j, "height", c.height);
  read(j, "width", c.width);
  read(j, "dropout", c.dropout);
  read(j, "leaky_slope", c.leaky_slope);
  read(j, "disc_width", c.disc_width);
  read(j, "use_gfa", c.use_gfa);
  read(j, "monochromatic", c.monochromatic);
  return c;
}

Json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"model_seed", c.model_seed},
          {"train_seed", c.train_seed},
          {"extractor_seed", c.extractor_seed},
          {"alpha_min", c.alpha_min},
          {"alpha_max", c.alpha_max},
          {"augment", c.augment},
          {"weights",
           {{"content", c.weights.content},
            {"perceptual", c.weights.perceptual},
            {"adversarial", c.weights.adversarial},
            {"taps", c.weights.taps}}},
          {"adam_generator", adam_json(c.adam_generator)},
          {"adam_discriminator", adam_json(c.adam_discriminator)},
          {"eval_every", c.eval_every},
          {"eval_frames", c.eval_frames},
          {"overfit_iterations", c.overfit_iterations},
          {"overfit_id", c.overfit_id},
          {"extractor_widths", c.extractor_widths}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  check_keys(j,
             {"epochs", "batch_size", "model_seed", "train_seed", "extractor_seed", "alpha_min",
              "alpha_max", "augment", "weights", "adam_generator", "adam_discriminator",
              "eval_every", "eval_frames", "overfit_iterations", "overfit_id",
              "extractor_widths"},
             "train");
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "model_seed", c.model_seed);
  read(j, "train_seed", c.train_seed);
  read(j, "extractor_seed", c.extractor_seed);
  read(j, "alpha_min", c.alpha_min);
  read(j, "alpha_max", c.alpha_max);
  read(j, "augment", c.augment);
  if (j.contains("weights")) {
    const Json& w = j.at("weights");
    check_keys(w, {"content", "perceptual", "adversarial", "taps"}, "loss weight");
    read(w, "content", c.weights.content);
    read(w, "perceptual", c.weights.perceptual);
    read(w, "adversarial", c.weights.adversarial);
    read(w, "taps", c.weights.taps);
  }
  if (j.contains("adam_generator")) c.adam_generator = adam_from_json(j.at("adam_generator"), c.adam_generator);
  if (j.contains("adam_discriminator")) {
    c.adam_discriminator = adam_from_json(j.at("adam_discriminator"), c.adam_discriminator);
  }
  read(j, "eval_every", c.eval_every);
  read(j, "eval_frames", c.eval_frames);
  read(j, "overfit_iterations", c.overfit_iterations);
  read(j, "overfit_id", c.overfit_id);
  read(j, "extractor_widths", c.extractor_widths);
  return c;
}

FrameRecord augment_exposure(const FrameRecord& frame, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("augment_exposure: alpha must be positive and finite");
  }
  FrameRecord out = frame;
  const auto a = static_cast<float>(alpha);
  for (Image* im : {&out.L_d, &out.L_ind, &out.S_ind}) {
    for (float& v : im->data) v *= a;
  }
  return out;
}

double exposure_factor(const TrainConfig& c, std::int64_t epoch, std::int64_t position) {
  if (!c.augment) return 1.0;
  Rng rng(c.train_seed, kExposureStream,
          (static_cast<std::uint64_t>(epoch) << 24) + static_cast<std::uint64_t>(position));
  return std::exp(rng.uniform(std::log(c.alpha_min), std::log(c.alpha_max)));
}

Tensor<float> image_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw ShapeError("image_tensor: no images");
  const Image& first = *images.front();
  std::vector<float> data;
  data.reserve(first.data.size() * images.size());
  for (const Image* im : images) {
    if (!im->same_shape(first)) throw ShapeError("image_tensor: images differ in shape");
    data.insert(data.end(), im->data.begin(), im->data.end());
  }
  return Tensor<float>::from({static_cast<std::int64_t>(images.size()), first.channels,
                              first.height, first.width},
                             std::move(data));
}

Image tensor_image(const Tensor<float>& t, std::int64_t b) {
  if (t.rank() != 4) throw ShapeError("tensor_image: expected [B, C, H, W]");
  Image im(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(2)), static_cast<int>(t.dim(3)));
  const auto n = static_cast<std::int64_t>(im.data.size());
  std::copy(t.data().begin() + b * n, t.data().begin() + (b + 1) * n, im.data.begin());
  return im;
}

Batch make_batch(const std::vector<FrameRecord>& frames) {
  std::vector<const Image*> ld, r, n, d, p, s, lind;
  std::vector<double> extents;
  for (const auto& f : frames) {
    ld.push_back(&f.L_d);
    r.push_back(&f.R);
    n.push_back(&f.N);
    d.push_back(&f.D);
    p.push_back(&f.P);
    s.push_back(&f.S_ind);
    lind.push_back(&f.L_ind);
    extents.push_back(f.scene_extent);
  }
  Batch b;
  b.ld = image_tensor(ld);
  b.r = image_tensor(r);
  b.s_ind = image_tensor(s);
  b.l = add(b.ld, image_tensor(lind));
  b.geometry = normalize_geometry(image_tensor(n), image_tensor(d), image_tensor(p), extents);
  return b;
}

TrainState TrainState::create(const ModelConfig& model, const TrainConfig& train) {
  train.validate();
  TrainState s;
  s.config = train;
  s.model = Model<float>::create(model, train.model_seed);
  s.extractor = FrozenFeatureExtractor<float>::random(train.extractor_seed, train.extractor_widths);
  s.opt_generator = AdamState<float>::create(s.model.generator_params(), train.adam_generator);
  s.opt_discriminator =
      AdamState<float>::create(s.model.discriminator_params(), train.adam_discriminator);
  return s;
}

TrainState TrainState::clone() const {
  TrainState s;
  s.model = cast_model<float>(model);
  s.extractor = extractor;
  for (auto& st : s.extractor.stages) {
    st.weight = st.weight.detach();
    st.bias = st.bias.detach();
  }
  s.opt_generator = opt_generator;
  s.opt_discriminator = opt_discriminator;
  s.config = config;
  s.epoch = epoch;
  s.iteration = iteration;
  s.provenance = provenance;
  return s;
}

StepLosses train_step(const Batch& batch, TrainState& state, Rng& dropout_rng) {
  auto& m = state.model;
  const auto& w = state.config.weights;
  auto gparams = m.generator_params();
  auto dparams = m.discriminator_params();
  const bool adversarial = w.adversarial > 0.0;
  StepLosses out;

  const auto pred = predict_indirect(batch.ld, batch.r, batch.geometry, m, Mode::kTrain, &dropout_rng);

  if (adversarial) {
    const auto fake_in = discriminator_input(pred.L.detach(), batch.ld, batch.r);
    const auto real_in = discriminator_input(batch.l, batch.ld, batch.r);
    zero_grads(dparams);
    const auto d_loss = adversarial_losses(discriminator_forward(real_in, m),
                                           discriminator_forward(fake_in, m))
                            .discriminator;
    require_finite(d_loss, "discriminator");
    backward(d_loss);
    require_finite_grads(dparams);
    adam_step(state.opt_discriminator, dparams);
    out.discriminator = d_loss.item();
  }

  zero_grads(gparams);
  const auto zero = Tensor<float>::scalar(0.0f);
  const auto content = smooth_l1(pred.S_ind, batch.s_ind);
  require_finite(content, "content");
  Tensor<float> perceptual = zero;
  if (w.perceptual > 0.0) {
    perceptual = perceptual_loss(pred.L, batch.l, state.extractor, w.taps);
    require_finite(perceptual, "perceptual");
  }
  Tensor<float> adv = zero;
  if (adversarial) {
    for (auto& p : dparams) p.value.set_requires_grad(false);
    adv = adversarial_losses(Tensor<float>{},
                             discriminator_forward(discriminator_input(pred.L, batch.ld, batch.r), m))
              .generator;
    for (auto& p : dparams) p.value.set_requires_grad(true);
    require_finite(adv, "adversarial");
  }
  const auto total = total_loss(content, perceptual, adv, w);
  require_finite(total, "total");
  backward(total);
  require_finite_grads(gparams);
  adam_step(state.opt_generator, gparams);

  out.content = content.item();
  out.perceptual = perceptual.item();
  out.adversarial = adv.item();
  out.total = total.item();
  ++state.iteration;
  return out;
}

double content_loss(const Batch& batch, const TrainState& state) {
  NoGradGuard ng;
  const auto pred =
      predict_indirect(batch.ld, batch.r, batch.geometry, state.model, Mode::kInfer, nullptr);
  return smooth_l1(pred.S_ind, batch.s_ind).item();
}

FramePrediction predict_frame(const Model<float>& model, const FrameRecord& frame) {
  NoGradGuard ng;
  const Batch b = make_batch({frame});
  const auto p = predict_indirect(b.ld, b.r, b.geometry, model, Mode::kInfer, nullptr);
  return {tensor_image(p.S_ind), tensor_image(p.L_ind), tensor_image(p.L)};
}

EvalReport evaluate_model(const Model<float>& model, const Dataset& dataset, int max_frames) {
  auto test = dataset.split_indices("test");
  if (max_frames > 0 && test.size() > static_cast<std::size_t>(max_frames)) test.resize(max_frames);
  const Predictor predictor = [&model](const FrameRecord& f) { return predict_frame(model, f).L; };
  return evaluate(dataset, dataset.split_indices("train"), test, {{"model", predictor}});
}

namespace {

Json losses_json(const StepLosses& l) {
  return {{"content", l.content},
          {"perceptual", l.perceptual},
          {"adversarial", l.adversarial},
          {"discriminator", l.discriminator},
          {"total", l.total}};
}

std::vector<std::size_t> shuffled(std::vector<std::size_t> v, std::uint64_t seed, std::int64_t epoch) {
  Rng rng(seed, kShuffleStream, static_cast<std::uint64_t>(epoch) << 32);
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
  return v;
}

Rng dropout_rng(const TrainConfig& c, std::int64_t iteration) {
  return Rng(c.train_seed, kDropoutStream, static_cast<std::uint64_t>(iteration) << 32);
}

}  // namespace

TrainResult train_loop(const Dataset& dataset, TrainState state, const LogSink& sink) {
  const TrainConfig cfg = state.config;
  cfg.validate();
  const auto train = dataset.split_indices("train");
  if (train.empty()) throw DatasetError("train: dataset has no training frames");
  if (dataset.height() != state.model.config.height || dataset.width() != state.model.config.width) {
    throw ConfigError("train: dataset resolution " + std::to_string(dataset.width()) + "x" +
                      std::to_string(dataset.height()) + " does not match model resolution " +
                      std::to_string(state.model.config.width) + "x" +
                      std::to_string(state.model.config.height));
  }
  TrainResult result;
  auto emit = [&](const Json& entry) {
    result.log.push_back(entry);
    if (sink) sink(entry);
  };

  if (cfg.overfit_iterations > 0) {
    const std::size_t idx = cfg.overfit_id.empty() ? train.front() : dataset.find(cfg.overfit_id);
    const Batch batch = make_batch({dataset.load_frame(idx)});
    while (state.iteration < cfg.overfit_iterations) {
      Rng rng = dropout_rng(cfg, state.iteration);
      const auto losses = train_step(batch, state, rng);
      emit({{"iteration", state.iteration}, {"losses", losses_json(losses)}});
    }
    result.state = std::move(state);
    return result;
  }

  const bool can_eval = cfg.eval_every > 0 && !dataset.split_indices("test").empty();
  while (state.epoch < cfg.epochs) {
    const std::int64_t epoch = state.epoch;
    const auto order = shuffled(train, cfg.train_seed, epoch);
    StepLosses sum;
    int steps = 0;
    for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<FrameRecord> frames;
      for (std::size_t k = pos; k < std::min(order.size(), pos + cfg.batch_size); ++k) {
        frames.push_back(augment_exposure(dataset.load_frame(order[k]),
                                          exposure_factor(cfg, epoch, static_cast<std::int64_t>(k))));
      }
      Rng rng = dropout_rng(cfg, state.iteration);
      const auto l = train_step(make_batch(frames), state, rng);
      sum.content += l.content;
      sum.perceptual += l.perceptual;
      sum.adversarial += l.adversarial;
      sum.discriminator += l.discriminator;
      sum.total += l.total;
      ++steps;
    }
    for (double* v : {&sum.content, &sum.perceptual, &sum.adversarial, &sum.discriminator, &sum.total}) {
      *v /= steps;
    }
    state.epoch = epoch + 1;
    Json entry{{"epoch", state.epoch}, {"iteration", state.iteration}, {"losses", losses_json(sum)}};
    if (can_eval && state.epoch % cfg.eval_every == 0) {
      const auto report = evaluate_model(state.model, dataset, cfg.eval_frames);
      const auto& model = report.method("model");
      entry["eval"] = {{"psnr", model.mean_psnr},
                       {"ssim", model.mean_ssim},
                       {"ambient_psnr", report.method("ambient").mean_psnr},
                       {"direct_psnr", report.method("direct").mean_psnr}};
      if (model.mean_psnr > result.best_psnr) {
        result.best_psnr = model.mean_psnr;
        result.best = state.clone();
      }
    }
    emit(entry);
  }
  result.state = std::move(state);
  return result;
}

}  // namespace ngi
