// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cosine similarity and the symmetric temperature-scaled InfoNCE objective
// that binds the video and audio embedding spaces.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "common/tensor.hpp"
#include "prophead/prophead.hpp"

namespace mvbind::binder {

inline constexpr double kMinNorm = 1e-12;
inline constexpr double kDefaultTemperature = 0.07;

enum class Modality { kVideo, kAudio };

template <typename Real>
struct BindModel {
  prophead::ProjectionHead<Real> video_head;
  prophead::ProjectionHead<Real> audio_head;
  double temperature = kDefaultTemperature;

  void validate() const;
  const prophead::ProjectionHead<Real>& head(Modality m) const {
    return m == Modality::kVideo ? video_head : audio_head;
  }
};

template <typename Real>
struct SimilarityMatrix {
  Mat<Real> scores;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
};

/// Unit rows plus the norms they were divided by (kept for the backward pass).
template <typename Real>
struct NormalizedRows {
  Mat<Real> unit;
  Eigen::VectorXd norms;
};

/// Writes in / ||in|| into out; the single normalization routine every
/// cosine path goes through. Throws kZeroNorm below kMinNorm and
/// kNonFinite for rows with NaN or infinite entries.
template <typename Real>
void normalize_into(std::span<const Real> in, std::span<Real> out);

/// Sequential dot product accumulated in double.
template <typename Real>
double dot(std::span<const Real> a, std::span<const Real> b);

template <typename Real>
NormalizedRows<Real> normalize_rows(const Mat<Real>& x);

template <typename Real>
Mat<Real> l2_normalize_rows(const Mat<Real>& x);

/// d(loss)/d(x) given d(loss)/d(unit rows).
template <typename Real>
Mat<Real> l2_normalize_backward(const NormalizedRows<Real>& fwd, const Mat<Real>& d_unit);

/// Normalize-then-dot, clamped to [-1, 1].
template <typename Real>
Real cosine_similarity(std::span<const Real> a, std::span<const Real> v);

/// Unclamped dot products of already-normalized rows.
template <typename Real>
Mat<Real> raw_similarity(const Mat<Real>& unit_rows, const Mat<Real>& unit_cols);

/// scores(i, j) = cosine_similarity(yv.row(i), ya.row(j)).
template <typename Real>
SimilarityMatrix<Real> similarity_matrix(const Mat<Real>& yv, const Mat<Real>& ya);

/// Symmetric InfoNCE: the mean of the video->audio (row softmax) and
/// audio->video (column softmax) cross-entropies with positives on the
/// diagonal. Evaluated in double with max subtraction.
template <typename Real>
double info_nce_loss(const Mat<Real>& scores, double tau);

/// d(info_nce_loss)/d(scores) = (P_row - I + P_col - I) / (2 * tau * N).
template <typename Real>
Mat<Real> info_nce_backward(const Mat<Real>& scores, double tau);

template <typename Real>
struct ContrastiveStep {
  double loss = 0.0;
  prophead::HeadGradients<Real> video;
  prophead::HeadGradients<Real> audio;
};

/// Full train-mode pass over one paired batch: both heads -> normalize ->
/// similarity -> symmetric InfoNCE, then the exact backward pass into both
/// heads. Dropout masks are drawn from `rng`, video head first.
template <typename Real>
ContrastiveStep<Real> contrastive_step(BindModel<Real>& model, const Mat<Real>& video,
                                       const Mat<Real>& audio, Rng& rng,
                                       prophead::InputGrad input_grad = prophead::InputGrad::kSkip);

/// Eval-mode projection of raw features through one modality's head.
template <typename Real>
Mat<Real> project(const BindModel<Real>& model, const Mat<Real>& x, Modality modality);

}  // namespace mvbind::binder
