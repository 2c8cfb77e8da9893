// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#include "borderkit/borderkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <set>

#include <boost/multiprecision/cpp_int.hpp>

#include "common/error.hpp"

namespace mvbind::borderkit {

namespace {

using boost::multiprecision::uint256_t;

enum class Side { kTop, kBottom, kLeft, kRight };

// Dimension along which a candidate's position is measured.
int extent(const GrayImage& img, Orientation o) {
  return o == Orientation::kHorizontal ? img.height : img.width;
}

Side side_of(Orientation o, int position, int length) {
  const bool near_start = position < length - position;
  if (o == Orientation::kHorizontal) return near_start ? Side::kTop : Side::kBottom;
  return near_start ? Side::kLeft : Side::kRight;
}

bool is_start_side(Side s) { return s == Side::kTop || s == Side::kLeft; }

// Mean intensity over rows (or columns) [begin, end) across the full image.
double band_mean(const GrayImage& img, Orientation o, int begin, int end) {
  begin = std::max(begin, 0);
  end = std::min(end, extent(img, o));
  if (begin >= end) return 0.0;
  std::uint64_t sum = 0;
  if (o == Orientation::kHorizontal) {
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < img.width; ++x) sum += img.at(x, y);
    }
    return static_cast<double>(sum) / (static_cast<double>(end - begin) * img.width);
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = begin; x < end; ++x) sum += img.at(x, y);
  }
  return static_cast<double>(sum) / (static_cast<double>(end - begin) * img.height);
}

// The outer strip of a candidate: between the split and the nearer edge.
std::pair<int, int> outer_strip(Orientation o, int position, int length) {
  return is_start_side(side_of(o, position, length)) ? std::pair{0, position}
                                                     : std::pair{position, length};
}

std::pair<int, int> inner_strip(Orientation o, int position, int length) {
  const auto [a, b] = outer_strip(o, position, length);
  const int thickness = b - a;
  return is_start_side(side_of(o, position, length))
             ? std::pair{position, std::min(length, position + thickness)}
             : std::pair{std::max(0, position - thickness), position};
}

void scan_lines(const SobelMaps& maps, const GrayImage& img, Orientation o, double magnitude,
                double fraction, double search_fraction, std::vector<EdgeCandidate>& out) {
  const bool rows = o == Orientation::kHorizontal;
  const int length = rows ? maps.height : maps.width;  // number of lines
  const int span = rows ? maps.width : maps.height;    // pixels per line
  const int band = static_cast<int>(search_fraction * length);

  std::vector<double> frac(static_cast<std::size_t>(length), 0.0);
  for (int line = 0; line < length; ++line) {
    int hits = 0;
    for (int k = 0; k < span; ++k) {
      const int g = rows ? maps.gy_at(k, line) : maps.gx_at(line, k);
      if (std::abs(g) >= magnitude) ++hits;
    }
    frac[static_cast<std::size_t>(line)] = static_cast<double>(hits) / span;
  }

  auto in_band = [&](int line) { return line < band || line >= length - band; };
  auto is_edge = [&](int line) {
    return in_band(line) && frac[static_cast<std::size_t>(line)] >= fraction;
  };

  // Consecutive edge lines are one step in the binary image; the split
  // sits in the middle of the run.
  int line = 0;
  while (line < length) {
    if (!is_edge(line)) {
      ++line;
      continue;
    }
    const int first = line;
    double best = 0.0;
    while (line < length && is_edge(line)) best = std::max(best, frac[static_cast<std::size_t>(line++)]);
    const int last = line - 1;
    const int position = (first + last + 1) / 2;
    if (position <= 0 || position >= length) continue;

    EdgeCandidate c;
    c.orientation = o;
    c.position = position;
    c.edge_fraction = best;
    const auto [oa, ob] = outer_strip(o, position, length);
    const auto [ia, ib] = inner_strip(o, position, length);
    c.outer_mean = band_mean(img, o, oa, ob);
    c.inner_mean = band_mean(img, o, ia, ib);
    out.push_back(c);
  }
}

}  // namespace

double histogram_std(const GrayImage& img) {
  if (img.pixels.empty()) fail(ErrorCode::kInvalidArgument, "histogram of an empty image");
  std::array<std::uint64_t, 256> hist{};
  for (auto p : img.pixels) ++hist[p];
  const double total = static_cast<double>(img.pixels.size());
  const double mean = 1.0 / 256.0;
  double var = 0.0;
  for (auto count : hist) {
    const double d = static_cast<double>(count) / total - mean;
    var += d * d;
  }
  return std::sqrt(var / 256.0);
}

std::uint8_t otsu_threshold(const GrayImage& img) {
  if (img.pixels.empty()) fail(ErrorCode::kInvalidArgument, "Otsu threshold of an empty image");
  std::array<std::uint64_t, 256> hist{};
  for (auto p : img.pixels) ++hist[p];
  const auto total = static_cast<__int128>(img.pixels.size());
  __int128 total_sum = 0;
  for (int v = 0; v < 256; ++v) total_sum += static_cast<__int128>(hist[v]) * v;

  // sigma_b^2(t) = w0 w1 (mu0 - mu1)^2 = D^2 / (N^2 n0 n1), D = s0 N - S n0.
  // Maximized by exact comparison of D^2 / (n0 n1) in integer arithmetic.
  __int128 n0 = 0;
  __int128 s0 = 0;
  int best_t = 0;
  uint256_t best_num = 0;
  uint256_t best_den = 1;
  for (int t = 0; t < 256; ++t) {
    n0 += hist[t];
    s0 += static_cast<__int128>(hist[t]) * t;
    const __int128 n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    __int128 d = s0 * total - total_sum * n0;
    if (d < 0) d = -d;
    const auto du = static_cast<unsigned __int128>(d);
    uint256_t dd = static_cast<std::uint64_t>(du >> 64);
    dd = (dd << 64) | static_cast<std::uint64_t>(du);
    const uint256_t num = dd * dd;
    const uint256_t den = uint256_t(static_cast<std::uint64_t>(n0)) * static_cast<std::uint64_t>(n1);
    if (num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best_t = t;
    }
  }
  return static_cast<std::uint8_t>(best_t);
}

GrayImage binarize(const GrayImage& img, std::uint8_t t) {
  GrayImage out = img;
  for (auto& p : out.pixels) p = p > t ? 255 : 0;
  return out;
}

SobelMaps sobel_edges(const GrayImage& img) {
  if (img.width < 3 || img.height < 3) {
    fail(ErrorCode::kInvalidArgument, "Sobel needs an image of at least 3x3 pixels");
  }
  SobelMaps m;
  m.width = img.width;
  m.height = img.height;
  m.gx.resize(img.pixels.size());
  m.gy.resize(img.pixels.size());
  auto px = [&](int x, int y) -> int {
    return img.at(std::clamp(x, 0, img.width - 1), std::clamp(y, 0, img.height - 1));
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int gx = (px(x + 1, y - 1) - px(x - 1, y - 1)) + 2 * (px(x + 1, y) - px(x - 1, y)) +
                     (px(x + 1, y + 1) - px(x - 1, y + 1));
      const int gy = (px(x - 1, y + 1) - px(x - 1, y - 1)) + 2 * (px(x, y + 1) - px(x, y - 1)) +
                     (px(x + 1, y + 1) - px(x + 1, y - 1));
      const auto i = static_cast<std::size_t>(y) * img.width + x;
      m.gx[i] = static_cast<std::int16_t>(gx);
      m.gy[i] = static_cast<std::int16_t>(gy);
    }
  }
  return m;
}

std::vector<EdgeCandidate> extract_edge_candidates(const SobelMaps& maps, const GrayImage& img,
                                                   double magnitude, double fraction,
                                                   double search_fraction) {
  if (maps.width != img.width || maps.height != img.height ||
      maps.gx.size() != img.pixels.size() || maps.gy.size() != img.pixels.size()) {
    fail(ErrorCode::kShapeMismatch, "gradient maps and image differ in size");
  }
  std::vector<EdgeCandidate> out;
  scan_lines(maps, img, Orientation::kHorizontal, magnitude, fraction, search_fraction, out);
  scan_lines(maps, img, Orientation::kVertical, magnitude, fraction, search_fraction, out);
  return out;
}

std::vector<EdgeCandidate> fold_filter(const std::vector<EdgeCandidate>& cands, const GrayImage& img,
                                       const FoldParams& params) {
  std::vector<EdgeCandidate> kept;
  for (EdgeCandidate c : cands) {
    const int length = extent(img, c.orientation);
    if (c.position <= 0 || c.position >= length) continue;
    const auto [oa, ob] = outer_strip(c.orientation, c.position, length);
    const auto [ia, ib] = inner_strip(c.orientation, c.position, length);
    c.outer_mean = band_mean(img, c.orientation, oa, ob);
    c.inner_mean = band_mean(img, c.orientation, ia, ib);
    // (a) the strip outside the split is near-black
    if (c.outer_mean > params.black_threshold) continue;
    // (c) the frame is not one solid color across the split
    if (c.inner_mean - c.outer_mean < params.contrast_margin) continue;
    // (b) folding about the center lands on a black strip or a matching split
    const int mirrored = length - c.position;
    const auto [ma, mb] = outer_strip(c.orientation, mirrored, length);
    bool paired = band_mean(img, c.orientation, ma, mb) <= params.black_threshold;
    const Side side = side_of(c.orientation, c.position, length);
    for (const auto& other : cands) {
      if (paired) break;
      if (other.orientation != c.orientation) continue;
      if (side_of(other.orientation, other.position, length) == side) continue;
      paired = std::abs(other.position - mirrored) <= params.pair_radius;
    }
    if (paired) kept.push_back(c);
  }
  return kept;
}

SideBorders nms_unify(std::span<const FrameCandidates> per_frame, int radius) {
  SideBorders out;
  if (per_frame.empty()) return out;
  if (radius < 0) fail(ErrorCode::kInvalidArgument, "NMS radius must be non-negative");
  const int width = per_frame.front().width;
  const int height = per_frame.front().height;
  for (const auto& f : per_frame) {
    if (f.width != width || f.height != height) {
      fail(ErrorCode::kShapeMismatch, "frames in one clip must share dimensions");
    }
  }

  struct Entry {
    int position;
    double fraction;
    std::size_t frame;
  };
  std::array<std::vector<Entry>, 4> sides;
  for (std::size_t f = 0; f < per_frame.size(); ++f) {
    for (const auto& c : per_frame[f].candidates) {
      const int length = c.orientation == Orientation::kHorizontal ? height : width;
      const Side s = side_of(c.orientation, c.position, length);
      sides[static_cast<std::size_t>(s)].push_back({c.position, c.edge_fraction, f});
    }
  }

  auto unify = [radius](const std::vector<Entry>& entries, bool start_side) -> std::optional<int> {
    std::optional<int> best;
    std::size_t best_support = 0;
    double best_fraction = 0.0;
    for (const auto& center : entries) {
      std::set<std::size_t> frames;
      double fraction_sum = 0.0;
      std::size_t members = 0;
      for (const auto& e : entries) {
        if (std::abs(e.position - center.position) > radius) continue;
        frames.insert(e.frame);
        fraction_sum += e.fraction;
        ++members;
      }
      const std::size_t support = frames.size();
      const double fraction = fraction_sum / static_cast<double>(members);
      bool better = !best.has_value() || support > best_support;
      if (!better && support == best_support) {
        if (fraction > best_fraction) {
          better = true;
        } else if (fraction == best_fraction) {
          better = start_side ? center.position < *best : center.position > *best;
        }
      }
      if (better) {
        best = center.position;
        best_support = support;
        best_fraction = fraction;
      }
    }
    return best;
  };

  out.top = unify(sides[static_cast<std::size_t>(Side::kTop)], true);
  out.bottom = unify(sides[static_cast<std::size_t>(Side::kBottom)], false);
  out.left = unify(sides[static_cast<std::size_t>(Side::kLeft)], true);
  out.right = unify(sides[static_cast<std::size_t>(Side::kRight)], false);
  return out;
}

std::vector<EdgeCandidate> frame_candidates(const GrayImage& frame, const BorderParams& params) {
  if (histogram_std(frame) < params.borderless_std) return {};
  const GrayImage binary = binarize(frame, otsu_threshold(frame));
  const auto cands = extract_edge_candidates(sobel_edges(binary), frame, params.edge_magnitude,
                                             params.edge_fraction, params.search_fraction);
  return fold_filter(cands, frame,
                     FoldParams{params.black_threshold, params.contrast_margin, params.nms_radius});
}

CropRect full_frame(int width, int height) { return CropRect{0, 0, width, height}; }

CropRect detect_crop_rect(std::span<const GrayImage> frames, const BorderParams& params) {
  if (frames.empty()) fail(ErrorCode::kInvalidArgument, "border detection needs at least one frame");
  const int width = frames.front().width;
  const int height = frames.front().height;
  std::vector<FrameCandidates> per_frame;
  per_frame.reserve(frames.size());
  for (const auto& f : frames) {
    if (f.width != width || f.height != height) {
      fail(ErrorCode::kShapeMismatch, "frames in one clip must share dimensions");
    }
    per_frame.push_back({width, height, frame_candidates(f, params)});
  }
  const SideBorders sides = nms_unify(per_frame, params.nms_radius);
  const CropRect rect{sides.left.value_or(0), sides.top.value_or(0), sides.right.value_or(width),
                      sides.bottom.value_or(height)};
  if (rect.left < 0 || rect.top < 0 || rect.right > width || rect.bottom > height ||
      rect.left >= rect.right || rect.top >= rect.bottom) {
    return full_frame(width, height);
  }
  const double kept = static_cast<double>(rect.width()) * rect.height();
  if (kept < params.min_area_fraction * static_cast<double>(width) * height) {
    return full_frame(width, height);
  }
  return rect;
}

namespace {

template <int Channels>
Image<Channels> crop_impl(const Image<Channels>& img, const CropRect& r) {
  if (r.left < 0 || r.top < 0 || r.right > img.width || r.bottom > img.height ||
      r.left >= r.right || r.top >= r.bottom) {
    fail(ErrorCode::kInvalidArgument, "crop rectangle (" + std::to_string(r.left) + "," +
                                          std::to_string(r.top) + "," + std::to_string(r.right) +
                                          "," + std::to_string(r.bottom) + ") outside " +
                                          std::to_string(img.width) + "x" +
                                          std::to_string(img.height) + " image");
  }
  Image<Channels> out(r.width(), r.height());
  const std::size_t row_bytes = static_cast<std::size_t>(r.width()) * Channels;
  for (int y = 0; y < r.height(); ++y) {
    const auto* src = &img.pixels[(static_cast<std::size_t>(r.top + y) * img.width + r.left) * Channels];
    std::copy(src, src + row_bytes, &out.pixels[static_cast<std::size_t>(y) * row_bytes]);
  }
  return out;
}

}  // namespace

GrayImage apply_crop(const GrayImage& img, const CropRect& r) { return crop_impl(img, r); }
RgbImage apply_crop(const RgbImage& img, const CropRect& r) { return crop_impl(img, r); }

AnyImage apply_crop(const AnyImage& img, const CropRect& r) {
  return std::visit([&](const auto& im) -> AnyImage { return crop_impl(im, r); }, img);
}

}  // namespace mvbind::borderkit
