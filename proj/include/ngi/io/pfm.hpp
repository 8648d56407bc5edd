// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "ngi/scenegen/image.hpp"

namespace ngi {

class PfmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kPfmMaxDim = 1 << 16;

/// Writes a 1- or 3-channel image as little-endian PFM ("Pf" / "PF", scale
/// -1.0, rows bottom to top). Throws PfmError on I/O failure or non-finite data.
void write_pfm(const Image& image, const std::filesystem::path& path);

/// Reads a PFM file of either endianness. If `expect_channels` is nonzero the
/// header must declare that many channels.
Image read_pfm(const std::filesystem::path& path, int expect_channels = 0);

struct PfmHeader {
  int channels = 0;
  int width = 0;
  int height = 0;
  bool little_endian = true;
};

/// Parses only the header of a PFM file.
PfmHeader read_pfm_header(const std::filesystem::path& path);

}  // namespace ngi
