// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#include "binder/binder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace mvbind::binder {

namespace {

template <typename Real>
std::span<const Real> row_span(const Mat<Real>& m, Eigen::Index r) {
  return std::span<const Real>(m.data() + r * m.cols(), static_cast<std::size_t>(m.cols()));
}

template <typename Real>
std::span<Real> row_span(Mat<Real>& m, Eigen::Index r) {
  return std::span<Real>(m.data() + r * m.cols(), static_cast<std::size_t>(m.cols()));
}

double row_norm(std::span<const float> in) {
  double sq = 0.0;
  for (float x : in) sq += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sq);
}

double row_norm(std::span<const double> in) {
  double sq = 0.0;
  for (double x : in) sq += x * x;
  return std::sqrt(sq);
}

void check_square(Eigen::Index rows, Eigen::Index cols, double tau) {
  if (rows != cols || rows < 1) {
    fail(ErrorCode::kShapeMismatch, "InfoNCE needs a non-empty square similarity matrix, got " +
                                        std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    fail(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
}

// Row-wise softmax of (scores / tau) when by_row, column-wise otherwise; also
// returns the per-index cross-entropy -log p(i, i).
template <typename Real>
Eigen::MatrixXd softmax(const Mat<Real>& scores, double tau, bool by_row, Eigen::VectorXd* nll) {
  const auto n = scores.rows();
  Eigen::MatrixXd p(n, n);
  if (nll != nullptr) nll->resize(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    auto at = [&](Eigen::Index b) {
      return static_cast<double>(by_row ? scores(a, b) : scores(b, a)) / tau;
    };
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index b = 0; b < n; ++b) mx = std::max(mx, at(b));
    double denom = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) denom += std::exp(at(b) - mx);
    const double log_denom = std::log(denom) + mx;
    for (Eigen::Index b = 0; b < n; ++b) {
      const double prob = std::exp(at(b) - log_denom);
      if (by_row) {
        p(a, b) = prob;
      } else {
        p(b, a) = prob;
      }
    }
    if (nll != nullptr) (*nll)[a] = log_denom - at(a);
  }
  return p;
}

}  // namespace

template <typename Real>
void BindModel<Real>::validate() const {
  video_head.validate();
  audio_head.validate();
  if (video_head.d_out() != audio_head.d_out()) {
    fail(ErrorCode::kShapeMismatch, "video and audio heads must share d_out");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    fail(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
}

template <typename Real>
void normalize_into(std::span<const Real> in, std::span<Real> out) {
  if (in.size() != out.size()) fail(ErrorCode::kShapeMismatch, "normalize: size mismatch");
  const double norm = row_norm(in);
  if (!std::isfinite(norm)) fail(ErrorCode::kNonFinite, "non-finite embedding");
  if (!(norm > kMinNorm)) fail(ErrorCode::kZeroNorm, "zero-norm embedding");
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = static_cast<Real>(static_cast<double>(in[i]) / norm);
  }
}

template <typename Real>
double dot(std::span<const Real> a, std::span<const Real> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

template <typename Real>
NormalizedRows<Real> normalize_rows(const Mat<Real>& x) {
  NormalizedRows<Real> out;
  out.unit.resize(x.rows(), x.cols());
  out.norms.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    normalize_into<Real>(row_span(x, r), row_span(out.unit, r));
    out.norms[r] = row_norm(row_span(x, r));
  }
  return out;
}

template <typename Real>
Mat<Real> l2_normalize_rows(const Mat<Real>& x) {
  return normalize_rows(x).unit;
}

template <typename Real>
Mat<Real> l2_normalize_backward(const NormalizedRows<Real>& fwd, const Mat<Real>& d_unit) {
  if (d_unit.rows() != fwd.unit.rows() || d_unit.cols() != fwd.unit.cols()) {
    fail(ErrorCode::kShapeMismatch, "normalize backward: shape mismatch");
  }
  Mat<Real> dx(d_unit.rows(), d_unit.cols());
  for (Eigen::Index r = 0; r < d_unit.rows(); ++r) {
    const double proj = dot<Real>(row_span(fwd.unit, r), row_span(d_unit, r));
    const double inv_norm = 1.0 / fwd.norms[r];
    for (Eigen::Index c = 0; c < d_unit.cols(); ++c) {
      dx(r, c) = static_cast<Real>(
          (static_cast<double>(d_unit(r, c)) - static_cast<double>(fwd.unit(r, c)) * proj) * inv_norm);
    }
  }
  return dx;
}

template <typename Real>
Real cosine_similarity(std::span<const Real> a, std::span<const Real> v) {
  if (a.size() != v.size()) fail(ErrorCode::kShapeMismatch, "cosine: dimension mismatch");
  std::vector<Real> ua(a.size());
  std::vector<Real> uv(v.size());
  normalize_into<Real>(a, ua);
  normalize_into<Real>(v, uv);
  return std::clamp(static_cast<Real>(dot<Real>(ua, uv)), Real(-1), Real(1));
}

template <typename Real>
Mat<Real> raw_similarity(const Mat<Real>& unit_rows, const Mat<Real>& unit_cols) {
  if (unit_rows.cols() != unit_cols.cols()) {
    fail(ErrorCode::kShapeMismatch, "similarity: embedding dims differ");
  }
  Mat<Real> s(unit_rows.rows(), unit_cols.rows());
  for (Eigen::Index i = 0; i < unit_rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < unit_cols.rows(); ++j) {
      s(i, j) = static_cast<Real>(dot<Real>(row_span(unit_rows, i), row_span(unit_cols, j)));
    }
  }
  return s;
}

template <typename Real>
SimilarityMatrix<Real> similarity_matrix(const Mat<Real>& yv, const Mat<Real>& ya) {
  SimilarityMatrix<Real> out;
  out.scores = raw_similarity(l2_normalize_rows(yv), l2_normalize_rows(ya))
                   .cwiseMax(Real(-1))
                   .cwiseMin(Real(1));
  return out;
}

template <typename Real>
double info_nce_loss(const Mat<Real>& scores, double tau) {
  check_square(scores.rows(), scores.cols(), tau);
  Eigen::VectorXd row_nll;
  Eigen::VectorXd col_nll;
  softmax(scores, tau, true, &row_nll);
  softmax(scores, tau, false, &col_nll);
  return 0.5 * (row_nll.mean() + col_nll.mean());
}

template <typename Real>
Mat<Real> info_nce_backward(const Mat<Real>& scores, double tau) {
  check_square(scores.rows(), scores.cols(), tau);
  const auto n = scores.rows();
  Eigen::MatrixXd g = softmax(scores, tau, true, nullptr) + softmax(scores, tau, false, nullptr);
  g.diagonal().array() -= 2.0;
  g *= 1.0 / (2.0 * tau * static_cast<double>(n));
  return g.cast<Real>();
}

template <typename Real>
ContrastiveStep<Real> contrastive_step(BindModel<Real>& model, const Mat<Real>& video,
                                       const Mat<Real>& audio, Rng& rng,
                                       prophead::InputGrad input_grad) {
  if (video.rows() != audio.rows()) {
    fail(ErrorCode::kShapeMismatch, "contrastive step needs equally sized video/audio batches");
  }
  using prophead::Mode;
  auto fv = prophead::head_forward(model.video_head, video, Mode::kTrain, rng);
  auto fa = prophead::head_forward(model.audio_head, audio, Mode::kTrain, rng);
  const auto nv = normalize_rows(fv.output);
  const auto na = normalize_rows(fa.output);
  const Mat<Real> scores =
      raw_similarity(nv.unit, na.unit).cwiseMax(Real(-1)).cwiseMin(Real(1));

  ContrastiveStep<Real> step;
  step.loss = info_nce_loss(scores, model.temperature);
  const Mat<Real> g = info_nce_backward(scores, model.temperature);
  const Mat<Real> d_unit_v = g * na.unit;
  const Mat<Real> d_unit_a = g.transpose() * nv.unit;
  step.video = prophead::head_backward(model.video_head, *fv.cache,
                                       l2_normalize_backward(nv, d_unit_v), input_grad);
  step.audio = prophead::head_backward(model.audio_head, *fa.cache,
                                       l2_normalize_backward(na, d_unit_a), input_grad);
  return step;
}

template <typename Real>
Mat<Real> project(const BindModel<Real>& model, const Mat<Real>& x, Modality modality) {
  return prophead::head_forward_eval(model.head(modality), x);
}

#define MVBIND_INSTANTIATE(Real)                                                                \
  template struct BindModel<Real>;                                                              \
  template void normalize_into<Real>(std::span<const Real>, std::span<Real>);                   \
  template double dot<Real>(std::span<const Real>, std::span<const Real>);                      \
  template NormalizedRows<Real> normalize_rows<Real>(const Mat<Real>&);                         \
  template Mat<Real> l2_normalize_rows<Real>(const Mat<Real>&);                                 \
  template Mat<Real> l2_normalize_backward<Real>(const NormalizedRows<Real>&, const Mat<Real>&); \
  template Real cosine_similarity<Real>(std::span<const Real>, std::span<const Real>);          \
  template Mat<Real> raw_similarity<Real>(const Mat<Real>&, const Mat<Real>&);                  \
  template SimilarityMatrix<Real> similarity_matrix<Real>(const Mat<Real>&, const Mat<Real>&);  \
  template double info_nce_loss<Real>(const Mat<Real>&, double);                                \
  template Mat<Real> info_nce_backward<Real>(const Mat<Real>&, double);                         \
  template ContrastiveStep<Real> contrastive_step<Real>(BindModel<Real>&, const Mat<Real>&,     \
                                                        const Mat<Real>&, Rng&,                 \
                                                        prophead::InputGrad);                   \
  template Mat<Real> project<Real>(const BindModel<Real>&, const Mat<Real>&, Modality);

MVBIND_INSTANTIATE(float)
MVBIND_INSTANTIATE(double)

#undef MVBIND_INSTANTIATE

}  // namespace mvbind::binder
