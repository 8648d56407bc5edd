// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/trainer/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <map>

#include "ngi/io/files.hpp"

namespace ngi {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

constexpr const char* kMetaName = "meta.json";

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_tensor(std::string& out, const std::string& name, const Shape& shape,
                std::span<const float> data) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put_u32(out, static_cast<std::uint32_t>(d));
  out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(float));
}

std::uint32_t crc(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
  }
  std::string_view take(std::size_t n) {
    if (n > b_.size() - pos_) throw CheckpointError("checkpoint truncated");
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

void add_moments(std::string& out, const std::string& prefix, const ParameterList<float>& params,
                 const AdamState<float>& st) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& shape = params[i].value.shape();
    put_tensor(out, prefix + "m." + params[i].name, shape, st.first_moment[i]);
    put_tensor(out, prefix + "v." + params[i].name, shape, st.second_moment[i]);
  }
}

struct Loaded {
  Shape shape;
  std::vector<float> data;
};

const Loaded& need(const std::map<std::string, Loaded>& t, const std::string& name, const Shape& shape) {
  const auto it = t.find(name);
  if (it == t.end()) throw CheckpointError("checkpoint is missing tensor '" + name + "'");
  if (it->second.shape != shape) throw CheckpointError("checkpoint tensor '" + name + "' has the wrong shape");
  return it->second;
}

void restore_moments(const std::map<std::string, Loaded>& t, const std::string& prefix,
                     const ParameterList<float>& params, AdamState<float>& st) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& shape = params[i].value.shape();
    st.first_moment[i] = need(t, prefix + "m." + params[i].name, shape).data;
    st.second_moment[i] = need(t, prefix + "v." + params[i].name, shape).data;
  }
}

}  // namespace

std::string checkpoint_bytes(const TrainState& state) {
  const Json meta{{"model", to_json(state.model.config)},
                  {"train", to_json(state.config)},
                  {"epoch", state.epoch},
                  {"iteration", state.iteration},
                  {"adam_generator_step", state.opt_generator.step},
                  {"adam_discriminator_step", state.opt_discriminator.step},
                  {"provenance", state.provenance}};
  const std::string meta_text = meta.dump();
  std::vector<float> meta_bytes(meta_text.size());
  for (std::size_t i = 0; i < meta_text.size(); ++i) {
    meta_bytes[i] = static_cast<float>(static_cast<unsigned char>(meta_text[i]));
  }

  const auto gparams = state.model.generator_params();
  const auto dparams = state.model.discriminator_params();
  const auto& all = state.model.params.list();
  const auto ext = state.extractor.tensors();

  std::string body;
  put_tensor(body, kMetaName, {static_cast<std::int64_t>(meta_bytes.size())}, meta_bytes);
  for (const auto& p : all) put_tensor(body, p.name, p.value.shape(), p.value.data());
  for (const auto& p : ext) put_tensor(body, p.name, p.value.shape(), p.value.data());
  add_moments(body, "adam.g.", gparams, state.opt_generator);
  add_moments(body, "adam.d.", dparams, state.opt_discriminator);

  std::string out(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(1 + all.size() + ext.size() + 2 * (gparams.size() + dparams.size())));
  out += body;
  put_u32(out, crc(out));
  return out;
}

TrainState checkpoint_from_bytes(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  r.take(4);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version mismatch: file has " + std::to_string(version) +
                          ", expected " + std::to_string(kCheckpointVersion));
  }
  const auto count = r.u32();
  std::map<std::string, Loaded> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name(r.take(r.u32()));
    Loaded t;
    const auto rank = r.u32();
    if (rank > 8) throw CheckpointError("checkpoint tensor '" + name + "' has implausible rank");
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.shape.push_back(r.u32());
      n *= static_cast<std::size_t>(t.shape.back());
    }
    if (n > bytes.size()) throw CheckpointError("checkpoint truncated");
    const auto raw = r.take(n * sizeof(float));
    t.data.resize(n);
    std::memcpy(t.data.data(), raw.data(), raw.size());
    tensors.emplace(name, std::move(t));
  }
  const std::size_t body_end = r.pos();
  const auto stored = r.u32();
  if (r.pos() != bytes.size()) throw CheckpointError("checkpoint has trailing bytes");
  if (stored != crc(std::string_view(bytes).substr(0, body_end))) {
    throw CheckpointError("checkpoint checksum mismatch");
  }

  const auto mit = tensors.find(kMetaName);
  if (mit == tensors.end()) throw CheckpointError("checkpoint is missing tensor 'meta.json'");
  std::string meta_text;
  for (float v : mit->second.data) meta_text.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  Json meta;
  try {
    meta = Json::parse(meta_text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata: ") + e.what());
  }

  for (const char* key : {"model", "train", "epoch", "iteration", "adam_generator_step",
                          "adam_discriminator_step"}) {
    if (!meta.contains(key)) throw CheckpointError(std::string("checkpoint metadata lacks '") + key + "'");
  }
  TrainState s = TrainState::create(model_config_from_json(meta.at("model")),
                                    train_config_from_json(meta.at("train")));
  s.epoch = meta.at("epoch").get<std::int64_t>();
  s.iteration = meta.at("iteration").get<std::int64_t>();
  s.opt_generator.step = meta.at("adam_generator_step").get<std::uint64_t>();
  s.opt_discriminator.step = meta.at("adam_discriminator_step").get<std::uint64_t>();
  s.provenance = meta.value("provenance", Json::object());

  for (auto& p : s.model.params.list()) {
    const auto& t = need(tensors, p.name, p.value.shape());
    std::copy(t.data.begin(), t.data.end(), p.value.mutable_data().begin());
  }
  ParameterList<float> ext;
  for (const auto& p : s.extractor.tensors()) {
    ext.push_back({p.name, Tensor<float>::from(p.value.shape(), need(tensors, p.name, p.value.shape()).data)});
  }
  s.extractor = FrozenFeatureExtractor<float>::from_tensors(ext);
  restore_moments(tensors, "adam.g.", s.model.generator_params(), s.opt_generator);
  restore_moments(tensors, "adam.d.", s.model.discriminator_params(), s.opt_discriminator);
  return s;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  write_file_atomic(path, checkpoint_bytes(state));
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_bytes(read_file(path));
}

}  // namespace ngi
