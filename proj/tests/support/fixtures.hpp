// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "borderkit/borderkit.hpp"
#include "common/rng.hpp"
#include "common/tensor.hpp"

namespace mvbind::testing {

template <typename Real>
Mat<Real> random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Mat<Real> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Real>(scale * rng.normal());
  return m;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

struct Borders {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
};

/// A clip of frames with black bands of the given widths around blocky
/// content: a 4x3 grid of flat gray cells whose levels change per frame.
/// Flat cells keep the histogram peaked enough that thin borders are not
/// mistaken for borderless frames.
inline std::vector<borderkit::GrayImage> border_clip(int width, int height, Borders b,
                                                     std::uint64_t seed, int frames = 10) {
  Rng rng(seed);
  std::vector<borderkit::GrayImage> clip;
  const int cw = width - b.left - b.right;
  const int ch = height - b.top - b.bottom;
  for (int f = 0; f < frames; ++f) {
    std::uint8_t levels[3][4];
    for (auto& row : levels) {
      for (auto& l : row) l = static_cast<std::uint8_t>(70 + rng.below(161));
    }
    borderkit::GrayImage img(width, height, 0);
    for (int y = 0; y < ch; ++y) {
      for (int x = 0; x < cw; ++x) {
        img.at(b.left + x, b.top + y) = levels[y * 3 / ch][x * 4 / cw];
      }
    }
    clip.push_back(std::move(img));
  }
  return clip;
}

/// Every intensity 0..255 equally often, in a seeded random arrangement.
inline borderkit::GrayImage uniform_histogram_frame(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  borderkit::GrayImage img(width, height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i % 256);
  for (std::size_t i = img.pixels.size(); i > 1; --i) {
    std::swap(img.pixels[i - 1], img.pixels[rng.below(i)]);
  }
  return img;
}

inline borderkit::GrayImage rotate180(const borderkit::GrayImage& img) {
  borderkit::GrayImage out = img;
  std::reverse(out.pixels.begin(), out.pixels.end());
  return out;
}

}  // namespace mvbind::testing
