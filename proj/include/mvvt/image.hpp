// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mvvt {

/// 8-bit RGB image, rows top to bottom, interleaved channels.
struct ImageU8 {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<uint8_t> rgb;  // height * width * 3

  uint8_t* pixel(int64_t y, int64_t x) { return rgb.data() + (y * width + x) * 3; }
  const uint8_t* pixel(int64_t y, int64_t x) const { return rgb.data() + (y * width + x) * 3; }
};

/// Planar float image in [0, 1], channel-major (3 x H x W).
struct ImageF {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<float> chw;

  float& at(int64_t c, int64_t y, int64_t x) { return chw[(c * height + y) * width + x]; }
  float at(int64_t c, int64_t y, int64_t x) const { return chw[(c * height + y) * width + x]; }
};

/// round(255 * v) per channel.
ImageU8 quantize(const ImageF& img);

/// 8-bit RGB PNG with fixed encoder settings, so identical pixels produce
/// identical bytes.
void write_png(const std::filesystem::path& path, const ImageU8& img);

/// Decodes any 8-bit PNG to RGB (palette/gray/alpha are expanded).
ImageU8 read_png(const std::filesystem::path& path);

}  // namespace mvvt
