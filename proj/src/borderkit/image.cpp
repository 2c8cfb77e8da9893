// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#include "borderkit/image.hpp"

#include <cctype>

#include "common/binary_io.hpp"
#include "common/error.hpp"

namespace mvbind::borderkit {

namespace {

constexpr int kMaxSide = 1 << 16;

void check_dims(int w, int h) {
  if (w < 1 || h < 1 || w > kMaxSide || h > kMaxSide) {
    fail(ErrorCode::kInvalidArgument,
         "image dimensions " + std::to_string(w) + "x" + std::to_string(h) + " out of range");
  }
}

class PnmHeaderParser {
 public:
  explicit PnmHeaderParser(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      fail(ErrorCode::kFormat, "malformed PNM header");
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > 1'000'000) fail(ErrorCode::kFormat, "PNM header value too large");
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail(ErrorCode::kFormat, "malformed PNM header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

template <int Channels>
Image<Channels>::Image(int w, int h, std::uint8_t fill)
    : width(w), height(h) {
  check_dims(w, h);
  pixels.assign(static_cast<std::size_t>(w) * h * Channels, fill);
}

template <int Channels>
Image<Channels>::Image(int w, int h, std::vector<std::uint8_t> data)
    : width(w), height(h), pixels(std::move(data)) {
  check_dims(w, h);
  if (pixels.size() != static_cast<std::size_t>(w) * h * Channels) {
    fail(ErrorCode::kShapeMismatch, "pixel buffer does not match image dimensions");
  }
}

template struct Image<1>;
template struct Image<3>;

GrayImage to_luma(const RgbImage& rgb) {
  GrayImage out(rgb.width, rgb.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const unsigned r = rgb.pixels[3 * i];
    const unsigned g = rgb.pixels[3 * i + 1];
    const unsigned b = rgb.pixels[3 * i + 2];
    out.pixels[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return out;
}

GrayImage to_luma(const AnyImage& img) {
  if (const auto* gray = std::get_if<GrayImage>(&img)) return *gray;
  return to_luma(std::get<RgbImage>(img));
}

AnyImage decode_pnm(std::span<const unsigned char> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    fail(ErrorCode::kBadMagic, "not a binary PGM/PPM file (expected P5 or P6)");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  PnmHeaderParser header(bytes);
  const long w = header.next_int();
  const long h = header.next_int();
  const long maxval = header.next_int();
  if (maxval != 255) fail(ErrorCode::kFormat, "PNM maxval must be 255, got " + std::to_string(maxval));
  check_dims(static_cast<int>(w), static_cast<int>(h));
  const std::size_t start = header.raster_start();
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
  if (bytes.size() - start < need) fail(ErrorCode::kTruncated, "truncated PNM raster");
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(start + need));
  if (channels == 1) return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
  return RgbImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

AnyImage read_pnm(const std::string& path) {
  try {
    return decode_pnm(io::read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::vector<unsigned char> encode_pnm(const AnyImage& img) {
  std::string header;
  std::span<const std::uint8_t> raster;
  if (const auto* gray = std::get_if<GrayImage>(&img)) {
    header = "P5\n" + std::to_string(gray->width) + " " + std::to_string(gray->height) + "\n255\n";
    raster = gray->pixels;
  } else {
    const auto& rgb = std::get<RgbImage>(img);
    header = "P6\n" + std::to_string(rgb.width) + " " + std::to_string(rgb.height) + "\n255\n";
    raster = rgb.pixels;
  }
  std::vector<unsigned char> out(header.begin(), header.end());
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

void write_pnm(const AnyImage& img, const std::string& path) {
  io::write_file(path, encode_pnm(img));
}

}  // namespace mvbind::borderkit
