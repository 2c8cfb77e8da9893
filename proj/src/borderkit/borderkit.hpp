// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Black-border (letterbox/pillarbox) detection over a clip of frames:
//   1. histogram spread test marks borderless frames
//   2. Otsu binarization
//   3. Sobel gradients of the binary image
//   4. edge rows/columns scored by edge fraction and strip intensities
//   5. fold test against the mirrored side of the frame
//   6. non-maximum suppression across frames, one border per side
//   7. crop every frame with the unified rectangle

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "borderkit/image.hpp"

namespace mvbind::borderkit {

enum class Orientation { kHorizontal, kVertical };

/// A horizontal candidate at `position` separates rows [0, position) from
/// rows [position, height); vertical candidates split columns likewise.
struct EdgeCandidate {
  Orientation orientation = Orientation::kHorizontal;
  int position = 0;
  double edge_fraction = 0.0;
  double outer_mean = 0.0;  // strip between the split and the nearer frame edge
  double inner_mean = 0.0;  // same-thickness strip on the content side

  bool operator==(const EdgeCandidate&) const = default;
};

/// left/top inclusive, right/bottom exclusive.
struct CropRect {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  int width() const { return right - left; }
  int height() const { return bottom - top; }
  bool operator==(const CropRect&) const = default;
};

struct SobelMaps {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> gx;
  std::vector<std::int16_t> gy;

  std::int16_t gx_at(int x, int y) const { return gx[static_cast<std::size_t>(y) * width + x]; }
  std::int16_t gy_at(int x, int y) const { return gy[static_cast<std::size_t>(y) * width + x]; }
};

struct BorderParams {
  double borderless_std = 0.01;  // step 1 threshold on histogram_std
  double edge_magnitude = 128;   // |gradient| on the binary image
  double edge_fraction = 0.6;
  int black_threshold = 16;
  double contrast_margin = 24;
  int nms_radius = 4;
  double search_fraction = 0.35;  // candidates only in the outer band of each dimension
  double min_area_fraction = 0.25;
};

struct SideBorders {
  std::optional<int> top;
  std::optional<int> bottom;
  std::optional<int> left;
  std::optional<int> right;
};

struct FrameCandidates {
  int width = 0;
  int height = 0;
  std::vector<EdgeCandidate> candidates;
};

/// Population standard deviation of the 256 normalized histogram bins.
double histogram_std(const GrayImage& img);

/// Smallest t maximizing the between-class variance, class 0 = pixels <= t.
std::uint8_t otsu_threshold(const GrayImage& img);

/// pixel > t -> 255, else 0.
GrayImage binarize(const GrayImage& img, std::uint8_t t);

/// 3x3 Sobel correlation with replicate padding. Needs width, height >= 3.
SobelMaps sobel_edges(const GrayImage& img);

std::vector<EdgeCandidate> extract_edge_candidates(const SobelMaps& maps, const GrayImage& img,
                                                   double magnitude, double fraction,
                                                   double search_fraction = 0.35);

struct FoldParams {
  int black_threshold = 16;
  double contrast_margin = 24;
  int pair_radius = 4;
};

/// Strip means are re-measured on `img`. A candidate survives when (a) its
/// outer strip is black, (c) the inner strip is brighter by the contrast
/// margin and (b) the mirrored strip is black or the opposite side has a
/// candidate within `pair_radius` of the mirrored position.
std::vector<EdgeCandidate> fold_filter(const std::vector<EdgeCandidate>& cands, const GrayImage& img,
                                       const FoldParams& params);

/// Per side, the candidate position with the most supporting frames within
/// `radius`; ties go to the larger mean edge fraction, then to the position
/// nearer the frame edge.
SideBorders nms_unify(std::span<const FrameCandidates> per_frame, int radius);

/// Candidates that survive steps 1-5 for a single frame.
std::vector<EdgeCandidate> frame_candidates(const GrayImage& frame, const BorderParams& params);

CropRect detect_crop_rect(std::span<const GrayImage> frames, const BorderParams& params = {});

CropRect full_frame(int width, int height);

GrayImage apply_crop(const GrayImage& img, const CropRect& r);
RgbImage apply_crop(const RgbImage& img, const CropRect& r);
AnyImage apply_crop(const AnyImage& img, const CropRect& r);

}  // namespace mvbind::borderkit
