// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "ngi/trainer/trainer.hpp"

namespace ngi {

inline constexpr char kCheckpointMagic[4] = {'N', 'G', 'I', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Serialized checkpoint: magic, version, tensor count, then per tensor the
/// name, rank, dims and little-endian float32 values, then a CRC32 of all
/// preceding bytes. Configs and counters travel in a "meta.json" tensor that
/// holds one UTF-8 byte per element.
std::string checkpoint_bytes(const TrainState& state);
TrainState checkpoint_from_bytes(const std::string& bytes);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace ngi
