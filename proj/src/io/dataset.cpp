// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/io/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ngi/io/pfm.hpp"

namespace ngi {
namespace {

int buffer_channels(const std::string& name) { return name == "D" ? 1 : 3; }

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const Json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

Json camera_to_json(const Camera& c) {
  Json j;
  j["position"] = vec_json(c.position);
  j["look_at"] = vec_json(c.look_at);
  j["vfov_deg"] = c.vfov_deg;
  j["width"] = c.width;
  j["height"] = c.height;
  return j;
}

Camera camera_from_json(const Json& j) {
  Camera c;
  c.position = vec_from(j.at("position"));
  c.look_at = vec_from(j.at("look_at"));
  c.vfov_deg = j.at("vfov_deg").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  return c;
}

Json to_json(const FrameEntry& e) {
  Json j;
  j["id"] = e.id;
  j["split"] = e.split;
  j["scene_seed"] = e.scene_seed;
  j["render_seed"] = e.render_seed;
  j["spp"] = e.spp;
  j["width"] = e.width;
  j["height"] = e.height;
  j["scene_extent"] = e.scene_extent;
  j["camera"] = camera_to_json(e.camera);
  Json files = Json::object();
  for (const char* name : kBufferNames) files[name] = e.files.at(name);
  j["files"] = files;
  return j;
}

FrameEntry frame_entry_from_json(const Json& j) {
  FrameEntry e;
  e.id = j.at("id").get<std::string>();
  e.split = j.value("split", std::string("train"));
  e.scene_seed = j.at("scene_seed").get<std::uint64_t>();
  e.render_seed = j.at("render_seed").get<std::uint64_t>();
  e.spp = j.at("spp").get<int>();
  e.width = j.at("width").get<int>();
  e.height = j.at("height").get<int>();
  e.scene_extent = j.at("scene_extent").get<double>();
  e.camera = camera_from_json(j.at("camera"));
  for (const char* name : kBufferNames) {
    e.files[name] = j.at("files").at(name).get<std::string>();
  }
  return e;
}

FrameEntry write_frame(const FrameRecord& f, const std::filesystem::path& dir,
                       const std::string& id, const std::string& split) {
  FrameEntry e;
  e.id = id;
  e.split = split;
  e.scene_seed = f.scene_seed;
  e.render_seed = f.render_seed;
  e.spp = f.spp;
  e.width = f.L_d.width;
  e.height = f.L_d.height;
  e.scene_extent = f.scene_extent;
  e.camera = f.camera;
  const std::array<const Image*, 7> images = {&f.L_d, &f.L_ind, &f.S_ind, &f.R,
                                              &f.N,   &f.D,     &f.P};
  for (std::size_t i = 0; i < kBufferNames.size(); ++i) {
    const std::string file = id + "_" + kBufferNames[i] + ".pfm";
    write_pfm(*images[i], dir / file);
    e.files[kBufferNames[i]] = file;
  }
  return e;
}

std::string manifest_text(const Manifest& m) {
  std::vector<const FrameEntry*> sorted;
  for (const auto& f : m.frames) sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  Json j;
  j["version"] = m.version;
  j["frame_count"] = m.frames.size();
  j["config"] = m.config;
  Json frames = Json::array();
  for (const auto* f : sorted) frames.push_back(to_json(*f));
  j["frames"] = frames;
  return j.dump(2) + "\n";
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  write_file_atomic(path, manifest_text(m));
}

Dataset Dataset::load(const std::filesystem::path& manifest_path) {
  Dataset ds;
  ds.root_ = manifest_path.parent_path();
  try {
    ds.manifest_bytes_ = read_file(manifest_path);
  } catch (const IoError& e) {
    throw DatasetError(std::string("dataset: ") + e.what());
  }
  Json j;
  try {
    j = Json::parse(ds.manifest_bytes_);
  } catch (const Json::exception& e) {
    throw DatasetError("dataset: manifest is not valid JSON: " + std::string(e.what()));
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != kDatasetVersion) {
      throw DatasetError("dataset: unsupported manifest version " + std::to_string(version));
    }
    ds.config_ = j.value("config", Json::object());
    for (const auto& fj : j.at("frames")) ds.entries_.push_back(frame_entry_from_json(fj));
  } catch (const Json::exception& e) {
    throw DatasetError("dataset: malformed manifest: " + std::string(e.what()));
  }
  std::sort(ds.entries_.begin(), ds.entries_.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < ds.entries_.size(); ++i) {
    const FrameEntry& e = ds.entries_[i];
    if (!ds.index_.emplace(e.id, i).second) {
      throw DatasetError("dataset: duplicate frame id '" + e.id + "'");
    }
    if (i == 0) {
      ds.width_ = e.width;
      ds.height_ = e.height;
    } else if (e.width != ds.width_ || e.height != ds.height_) {
      throw DatasetError("dataset: frame '" + e.id + "' is " + std::to_string(e.width) + "x" +
                         std::to_string(e.height) + ", expected " + std::to_string(ds.width_) +
                         "x" + std::to_string(ds.height_));
    }
    for (const char* name : kBufferNames) {
      const auto path = ds.root_ / e.files.at(name);
      if (!std::filesystem::exists(path)) {
        throw DatasetError("dataset: frame '" + e.id + "' references missing file " +
                           path.string());
      }
      PfmHeader h;
      try {
        h = read_pfm_header(path);
      } catch (const PfmError& err) {
        throw DatasetError("dataset: frame '" + e.id + "': " + err.what());
      }
      if (h.channels != buffer_channels(name) || h.width != e.width || h.height != e.height) {
        throw DatasetError("dataset: frame '" + e.id + "' buffer " + name +
                           " header does not match the manifest");
      }
    }
  }
  return ds;
}

std::size_t Dataset::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DatasetError("dataset: no frame with id '" + id + "'");
  return it->second;
}

std::vector<std::size_t> Dataset::split_indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].split == split) out.push_back(i);
  }
  return out;
}

std::string Dataset::content_hash() const {
  std::string acc = sha256_hex(manifest_bytes_);
  for (const auto& e : entries_) {
    for (const char* name : kBufferNames) acc += sha256_file(root_ / e.files.at(name));
  }
  return sha256_hex(acc);
}

FrameRecord Dataset::load_frame(std::size_t i) const {
  const FrameEntry& e = entries_.at(i);
  FrameRecord f;
  std::array<Image*, 7> images = {&f.L_d, &f.L_ind, &f.S_ind, &f.R, &f.N, &f.D, &f.P};
  try {
    for (std::size_t b = 0; b < kBufferNames.size(); ++b) {
      *images[b] = read_pfm(root_ / e.files.at(kBufferNames[b]), buffer_channels(kBufferNames[b]));
      if (images[b]->width != e.width || images[b]->height != e.height) {
        throw DatasetError("dataset: frame '" + e.id + "' buffer " + kBufferNames[b] +
                           " has the wrong resolution");
      }
    }
  } catch (const PfmError& err) {
    throw DatasetError("dataset: frame '" + e.id + "': " + err.what());
  }
  f.camera = e.camera;
  f.scene_seed = e.scene_seed;
  f.render_seed = e.render_seed;
  f.spp = e.spp;
  f.scene_extent = e.scene_extent;
  return f;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  return Dataset::load(manifest_path);
}

double recomposition_error(const FrameRecord& f, float eps) {
  const Image L = compose_global(f.L_d, f.R, f.S_ind);
  double worst = 0.0;
  for (std::size_t i = 0; i < L.data.size(); ++i) {
    if (f.R.data[i] < eps) continue;
    const double want = static_cast<double>(f.L_d.data[i]) + f.L_ind.data[i];
    const double err = std::abs(L.data[i] - want) / std::max(std::abs(want), 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace ngi
