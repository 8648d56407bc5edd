// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/io/pfm.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "ngi/io/files.hpp"

namespace ngi {
namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

struct Parsed {
  PfmHeader header;
  std::size_t data_offset = 0;
};

Parsed parse_header(const std::string& bytes, const std::filesystem::path& path) {
  const std::string where = " in " + path.string();
  std::size_t pos = 0;
  auto next_token = [&](const char* what) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw PfmError(std::string("PFM: truncated header, missing ") + what + where);
    return bytes.substr(start, pos - start);
  };
  Parsed p;
  const std::string magic = next_token("magic");
  if (magic == "PF") {
    p.header.channels = 3;
  } else if (magic == "Pf") {
    p.header.channels = 1;
  } else {
    throw PfmError("PFM: bad magic '" + magic.substr(0, 8) + "'" + where);
  }
  auto parse_dim = [&](const char* what) {
    const std::string tok = next_token(what);
    if (tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9) {
      throw PfmError(std::string("PFM: dimension overflow or malformed ") + what + " '" +
                     tok.substr(0, 12) + "'" + where);
    }
    const long v = std::stol(tok);
    if (v <= 0 || v > kPfmMaxDim) {
      throw PfmError(std::string("PFM: dimension overflow, ") + what + " = " + tok + where);
    }
    return static_cast<int>(v);
  };
  p.header.width = parse_dim("width");
  p.header.height = parse_dim("height");
  const std::string scale_tok = next_token("scale");
  double scale = 0.0;
  std::istringstream(scale_tok) >> scale;
  if (!(std::isfinite(scale) && scale != 0.0)) {
    throw PfmError("PFM: bad scale '" + scale_tok + "'" + where);
  }
  p.header.little_endian = scale < 0.0;
  if (pos >= bytes.size()) throw PfmError("PFM: short read, no pixel data" + where);
  p.data_offset = pos + 1;
  return p;
}

}  // namespace

void write_pfm(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw PfmError("PFM: only 1- or 3-channel images are supported, got " +
                   std::to_string(image.channels));
  }
  if (image.width <= 0 || image.height <= 0 || image.width > kPfmMaxDim ||
      image.height > kPfmMaxDim) {
    throw PfmError("PFM: dimension overflow writing " + path.string());
  }
  for (float v : image.data) {
    if (!std::isfinite(v)) throw PfmError("PFM: non-finite value writing " + path.string());
  }
  std::string out = (image.channels == 3 ? "PF\n" : "Pf\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + image.data.size() * 4);
  char* dst = out.data() + header;
  for (int y = image.height - 1; y >= 0; --y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        std::uint32_t bits;
        std::memcpy(&bits, &image.data[image.index(c, y, x)], 4);
        if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
        std::memcpy(dst, &bits, 4);
        dst += 4;
      }
    }
  }
  try {
    write_file_atomic(path, out);
  } catch (const IoError& e) {
    throw PfmError(std::string("PFM: ") + e.what());
  }
}

PfmHeader read_pfm_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PfmError("PFM: cannot open " + path.string());
  std::string head(64, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  return parse_header(head, path).header;
}

Image read_pfm(const std::filesystem::path& path, int expect_channels) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError& e) {
    throw PfmError(std::string("PFM: ") + e.what());
  }
  const Parsed p = parse_header(bytes, path);
  const PfmHeader& h = p.header;
  if (expect_channels != 0 && h.channels != expect_channels) {
    throw PfmError("PFM: expected " + std::to_string(expect_channels) + " channel(s), header '" +
                   (h.channels == 3 ? "PF" : "Pf") + "' declares " + std::to_string(h.channels) +
                   " in " + path.string());
  }
  const std::size_t count = static_cast<std::size_t>(h.channels) * h.width * h.height;
  const std::size_t available = bytes.size() - p.data_offset;
  if (available < count * 4) {
    throw PfmError("PFM: short read, expected " + std::to_string(count * 4) +
                   " bytes of pixel data, got " + std::to_string(available) + " in " +
                   path.string());
  }
  Image im(h.channels, h.height, h.width);
  const bool swap = h.little_endian != (std::endian::native == std::endian::little);
  const char* src = bytes.data() + p.data_offset;
  for (int y = h.height - 1; y >= 0; --y) {
    for (int x = 0; x < h.width; ++x) {
      for (int c = 0; c < h.channels; ++c) {
        std::uint32_t bits;
        std::memcpy(&bits, src, 4);
        src += 4;
        if (swap) bits = byteswap32(bits);
        std::memcpy(&im.at(c, y, x), &bits, 4);
      }
    }
  }
  return im;
}

}  // namespace ngi
