// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mvbind::borderkit {

/// Row-major 8-bit image with `channels` interleaved samples per pixel
/// (1 = gray, 3 = RGB).
template <int Channels>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0);
  Image(int w, int h, std::vector<std::uint8_t> data);

  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * Channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * Channels + c];
  }

  bool operator==(const Image&) const = default;
};

using GrayImage = Image<1>;
using RgbImage = Image<3>;
using AnyImage = std::variant<GrayImage, RgbImage>;

/// Rec.601 luma, rounded to nearest.
GrayImage to_luma(const RgbImage& rgb);
GrayImage to_luma(const AnyImage& img);

/// Binary PGM (P5) / PPM (P6) with maxval 255.
AnyImage read_pnm(const std::string& path);
AnyImage decode_pnm(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_pnm(const AnyImage& img);
void write_pnm(const AnyImage& img, const std::string& path);

}  // namespace mvbind::borderkit
