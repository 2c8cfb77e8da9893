// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-modality projection network:
//   linear(d_in -> d_hid) -> BatchNorm1d -> ReLU -> Dropout(p) -> linear(d_hid -> d_out)
// with hand-derived backward pass and an Adam optimizer. Instantiated for
// float (production) and double (gradient checks).

#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "common/rng.hpp"
#include "common/tensor.hpp"

namespace mvbind::prophead {

enum class Mode { kTrain, kEval };

inline constexpr double kDefaultBnMomentum = 0.1;
inline constexpr double kDefaultBnEps = 1e-5;
inline constexpr double kDefaultDropout = 0.5;

template <typename Real>
struct ProjectionHead {
  Mat<Real> w1;  // d_in x d_hid
  Vec<Real> b1;
  Vec<Real> bn_gamma;
  Vec<Real> bn_beta;
  Vec<Real> bn_running_mean;
  Vec<Real> bn_running_var;
  Mat<Real> w2;  // d_hid x d_out
  Vec<Real> b2;
  Real bn_momentum = static_cast<Real>(kDefaultBnMomentum);
  Real bn_eps = static_cast<Real>(kDefaultBnEps);
  Real dropout_p = static_cast<Real>(kDefaultDropout);

  Eigen::Index d_in() const { return w1.rows(); }
  Eigen::Index d_hid() const { return w1.cols(); }
  Eigen::Index d_out() const { return w2.cols(); }

  /// Throws unless shapes agree and every parameter is finite.
  void validate() const;
};

/// Everything the backward pass needs from a train-mode forward.
template <typename Real>
struct ForwardCache {
  Mat<Real> input;
  Mat<Real> pre_bn;
  Vec<Real> batch_mean;
  Vec<Real> batch_var;
  Mat<Real> normalized;  // x-hat, before gamma/beta
  Mat<Real> relu_mask;   // 1 where gamma*x-hat+beta > 0
  Mat<Real> dropout_scale;  // 0 or 1/(1-p) per unit
  Mat<Real> dropped;     // input to the second linear layer
};

template <typename Real>
struct HeadGradients {
  Mat<Real> w1;
  Vec<Real> b1;
  Vec<Real> bn_gamma;
  Vec<Real> bn_beta;
  Mat<Real> w2;
  Vec<Real> b2;
  Mat<Real> input;  // empty when not requested

  static HeadGradients zeros_like(const ProjectionHead<Real>& h);
  bool all_finite() const;
};

template <typename Real>
struct ForwardResult {
  Mat<Real> output;
  std::optional<ForwardCache<Real>> cache;  // present in train mode only
};

/// First and second Adam moments for every trainable block of one head.
template <typename Real>
struct AdamState {
  HeadGradients<Real> m;
  HeadGradients<Real> v;
  std::uint64_t step = 0;

  static AdamState fresh(const ProjectionHead<Real>& h);
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Glorot-uniform weights, zero biases, unit gamma, zero beta, running
/// mean 0 and running variance 1.
template <typename Real>
ProjectionHead<Real> init_head(std::uint64_t seed, Eigen::Index d_in, Eigen::Index d_hid,
                               Eigen::Index d_out);

/// Train mode uses biased batch statistics, updates the running statistics
/// in place and applies inverted dropout drawn from `rng`. Eval mode uses
/// running statistics, skips dropout and leaves `rng` untouched.
template <typename Real>
ForwardResult<Real> head_forward(ProjectionHead<Real>& h, const Mat<Real>& x, Mode mode, Rng& rng);

/// Eval-mode forward on an immutable head.
template <typename Real>
Mat<Real> head_forward_eval(const ProjectionHead<Real>& h, const Mat<Real>& x);

enum class InputGrad { kCompute, kSkip };

template <typename Real>
HeadGradients<Real> head_backward(const ProjectionHead<Real>& h, const ForwardCache<Real>& cache,
                                  const Mat<Real>& d_output,
                                  InputGrad input_grad = InputGrad::kCompute);

/// One bias-corrected Adam step over a flat parameter block.
template <typename Real>
void adam_step(std::span<Real> param, std::span<const Real> grad, std::span<Real> m,
               std::span<Real> v, std::uint64_t step, double lr, const AdamConfig& cfg = {});

/// Adam update of every trainable block; running statistics are untouched.
template <typename Real>
void apply_update(ProjectionHead<Real>& h, const HeadGradients<Real>& g, AdamState<Real>& state,
                  double lr, const AdamConfig& cfg = {});

}  // namespace mvbind::prophead
