// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <json.hpp>
#include <string>
#include <vector>

#include "ngi/io/files.hpp"
#include "ngi/scenegen/frame.hpp"

namespace ngi {

using Json = nlohmann::ordered_json;

inline constexpr int kDatasetVersion = 1;
inline constexpr std::array<const char*, 7> kBufferNames = {"L_d", "L_ind", "S_ind", "R",
                                                            "N",   "D",     "P"};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FrameEntry {
  std::string id;
  std::string split = "train";
  std::uint64_t scene_seed = 0;
  std::uint64_t render_seed = 0;
  int spp = 0;
  int width = 0;
  int height = 0;
  double scene_extent = 1.0;
  Camera camera;
  std::map<std::string, std::string> files;
};

struct Manifest {
  int version = kDatasetVersion;
  Json config = Json::object();
  std::vector<FrameEntry> frames;
};

Json to_json(const FrameEntry& e);
FrameEntry frame_entry_from_json(const Json& j);
Json camera_to_json(const Camera& c);
Camera camera_from_json(const Json& j);

/// Writes the seven buffers of `frame` as `<id>_<buffer>.pfm` under `dir`.
FrameEntry write_frame(const FrameRecord& frame, const std::filesystem::path& dir,
                       const std::string& id, const std::string& split = "train");

/// Serializes with stable key order; frames are written sorted by id.
std::string manifest_text(const Manifest& m);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

/// Validated, read-only view over a dataset directory. Entries are held in id
/// order, so manifests that differ only in entry order load identically.
class Dataset {
 public:
  /// Checks ids are unique, every referenced file exists, each PFM header
  /// parses with the channel count of its buffer, and all frames share one
  /// resolution. Errors name the offending frame id.
  static Dataset load(const std::filesystem::path& manifest_path);

  std::size_t size() const { return entries_.size(); }
  const FrameEntry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<FrameEntry>& entries() const { return entries_; }
  /// Index of `id`, or throws DatasetError.
  std::size_t find(const std::string& id) const;
  std::vector<std::size_t> split_indices(const std::string& split) const;
  const Json& config() const { return config_; }
  const std::filesystem::path& root() const { return root_; }
  int width() const { return width_; }
  int height() const { return height_; }
  /// SHA-256 over the manifest bytes and the hash of every referenced file.
  std::string content_hash() const;

  FrameRecord load_frame(std::size_t i) const;

 private:
  std::filesystem::path root_;
  Json config_;
  std::vector<FrameEntry> entries_;
  std::map<std::string, std::size_t> index_;
  int width_ = 0, height_ = 0;
  std::string manifest_bytes_;
};

Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Largest relative error of L_d + R·S_ind against L_d + L_ind over channels
/// with R ≥ eps.
double recomposition_error(const FrameRecord& f, float eps = kDemodEpsilon);

}  // namespace ngi
