// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#include "prophead/prophead.hpp"

#include <cmath>
#include <string>

#include "common/error.hpp"

namespace mvbind::prophead {

namespace {

template <typename Derived>
bool finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename Real>
void glorot_fill(Mat<Real>& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      w(r, c) = static_cast<Real>(limit * (2.0 * rng.uniform() - 1.0));
    }
  }
}

// Column sums accumulated in double regardless of storage precision.
template <typename Real>
Eigen::VectorXd column_sums(const Mat<Real>& m) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[c] += static_cast<double>(m(r, c));
  }
  return out;
}

template <typename Real>
Vec<Real> to_real(const Eigen::VectorXd& v) {
  return v.cast<Real>();
}

template <typename Real>
void check_input(const ProjectionHead<Real>& h, const Mat<Real>& x) {
  if (x.rows() < 1) fail(ErrorCode::kShapeMismatch, "projection head needs a non-empty batch");
  if (x.cols() != h.d_in()) {
    fail(ErrorCode::kShapeMismatch, "projection head expects " + std::to_string(h.d_in()) +
                                        " input columns, got " + std::to_string(x.cols()));
  }
  if (!finite(x)) fail(ErrorCode::kNonFinite, "non-finite value in projection head input");
}

template <typename Real>
void forward_tail(const ProjectionHead<Real>& h, const Mat<Real>& normalized, Mat<Real>& relu_mask,
                  Mat<Real>& activated) {
  activated.resize(normalized.rows(), normalized.cols());
  relu_mask.resize(normalized.rows(), normalized.cols());
  for (Eigen::Index r = 0; r < normalized.rows(); ++r) {
    for (Eigen::Index c = 0; c < normalized.cols(); ++c) {
      const Real z = h.bn_gamma[c] * normalized(r, c) + h.bn_beta[c];
      const bool on = z > Real(0);
      relu_mask(r, c) = on ? Real(1) : Real(0);
      activated(r, c) = on ? z : Real(0);
    }
  }
}

template <typename Real>
Mat<Real> output_layer(const ProjectionHead<Real>& h, const Mat<Real>& hidden) {
  Mat<Real> y = hidden * h.w2;
  y.rowwise() += h.b2.transpose();
  return y;
}

}  // namespace

template <typename Real>
void ProjectionHead<Real>::validate() const {
  const auto hid = d_hid();
  if (d_in() < 1 || hid < 1 || d_out() < 1) {
    fail(ErrorCode::kShapeMismatch, "projection head dims must be positive");
  }
  if (b1.size() != hid || bn_gamma.size() != hid || bn_beta.size() != hid ||
      bn_running_mean.size() != hid || bn_running_var.size() != hid || w2.rows() != hid ||
      b2.size() != w2.cols()) {
    fail(ErrorCode::kShapeMismatch, "projection head parameter shapes disagree");
  }
  if (!finite(w1) || !finite(b1) || !finite(bn_gamma) || !finite(bn_beta) ||
      !finite(bn_running_mean) || !finite(bn_running_var) || !finite(w2) || !finite(b2)) {
    fail(ErrorCode::kNonFinite, "projection head holds a non-finite parameter");
  }
  if ((bn_running_var.array() < Real(0)).any()) {
    fail(ErrorCode::kInvalidArgument, "negative BN running variance");
  }
  if (!(bn_momentum > Real(0) && bn_momentum < Real(1)) || !(bn_eps > Real(0)) ||
      !(dropout_p >= Real(0) && dropout_p < Real(1))) {
    fail(ErrorCode::kInvalidArgument, "projection head hyperparameters out of range");
  }
}

template <typename Real>
HeadGradients<Real> HeadGradients<Real>::zeros_like(const ProjectionHead<Real>& h) {
  HeadGradients g;
  g.w1 = Mat<Real>::Zero(h.w1.rows(), h.w1.cols());
  g.b1 = Vec<Real>::Zero(h.b1.size());
  g.bn_gamma = Vec<Real>::Zero(h.bn_gamma.size());
  g.bn_beta = Vec<Real>::Zero(h.bn_beta.size());
  g.w2 = Mat<Real>::Zero(h.w2.rows(), h.w2.cols());
  g.b2 = Vec<Real>::Zero(h.b2.size());
  return g;
}

template <typename Real>
bool HeadGradients<Real>::all_finite() const {
  return finite(w1) && finite(b1) && finite(bn_gamma) && finite(bn_beta) && finite(w2) &&
         finite(b2) && finite(input);
}

template <typename Real>
AdamState<Real> AdamState<Real>::fresh(const ProjectionHead<Real>& h) {
  return AdamState{HeadGradients<Real>::zeros_like(h), HeadGradients<Real>::zeros_like(h), 0};
}

template <typename Real>
ProjectionHead<Real> init_head(std::uint64_t seed, Eigen::Index d_in, Eigen::Index d_hid,
                               Eigen::Index d_out) {
  if (d_in < 1 || d_hid < 1 || d_out < 1) {
    fail(ErrorCode::kInvalidArgument, "projection head dims must be positive");
  }
  Rng rng(seed);
  ProjectionHead<Real> h;
  h.w1.resize(d_in, d_hid);
  glorot_fill(h.w1, rng);
  h.w2.resize(d_hid, d_out);
  glorot_fill(h.w2, rng);
  h.b1 = Vec<Real>::Zero(d_hid);
  h.bn_gamma = Vec<Real>::Ones(d_hid);
  h.bn_beta = Vec<Real>::Zero(d_hid);
  h.bn_running_mean = Vec<Real>::Zero(d_hid);
  h.bn_running_var = Vec<Real>::Ones(d_hid);
  h.b2 = Vec<Real>::Zero(d_out);
  return h;
}

template <typename Real>
Mat<Real> head_forward_eval(const ProjectionHead<Real>& h, const Mat<Real>& x) {
  check_input(h, x);
  Mat<Real> pre = x * h.w1;
  pre.rowwise() += h.b1.transpose();
  Mat<Real> normalized(pre.rows(), pre.cols());
  for (Eigen::Index c = 0; c < pre.cols(); ++c) {
    const double inv_std =
        1.0 / std::sqrt(static_cast<double>(h.bn_running_var[c]) + static_cast<double>(h.bn_eps));
    const double mean = h.bn_running_mean[c];
    for (Eigen::Index r = 0; r < pre.rows(); ++r) {
      normalized(r, c) = static_cast<Real>((static_cast<double>(pre(r, c)) - mean) * inv_std);
    }
  }
  Mat<Real> mask;
  Mat<Real> activated;
  forward_tail(h, normalized, mask, activated);
  return output_layer(h, activated);
}

template <typename Real>
ForwardResult<Real> head_forward(ProjectionHead<Real>& h, const Mat<Real>& x, Mode mode, Rng& rng) {
  if (mode == Mode::kEval) return {head_forward_eval(h, x), std::nullopt};

  check_input(h, x);
  ForwardCache<Real> c;
  c.input = x;
  c.pre_bn = x * h.w1;
  c.pre_bn.rowwise() += h.b1.transpose();

  const auto n = c.pre_bn.rows();
  const auto hid = c.pre_bn.cols();
  const Eigen::VectorXd mean = column_sums(c.pre_bn) / static_cast<double>(n);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(hid);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < hid; ++j) {
      const double d = static_cast<double>(c.pre_bn(r, j)) - mean[j];
      var[j] += d * d;
    }
  }
  var /= static_cast<double>(n);

  c.normalized.resize(n, hid);
  for (Eigen::Index j = 0; j < hid; ++j) {
    const double inv_std = 1.0 / std::sqrt(var[j] + static_cast<double>(h.bn_eps));
    for (Eigen::Index r = 0; r < n; ++r) {
      c.normalized(r, j) = static_cast<Real>((static_cast<double>(c.pre_bn(r, j)) - mean[j]) * inv_std);
    }
  }
  c.batch_mean = to_real<Real>(mean);
  c.batch_var = to_real<Real>(var);

  const double m = h.bn_momentum;
  for (Eigen::Index j = 0; j < hid; ++j) {
    h.bn_running_mean[j] =
        static_cast<Real>((1.0 - m) * static_cast<double>(h.bn_running_mean[j]) + m * mean[j]);
    h.bn_running_var[j] =
        static_cast<Real>((1.0 - m) * static_cast<double>(h.bn_running_var[j]) + m * var[j]);
  }

  Mat<Real> activated;
  forward_tail(h, c.normalized, c.relu_mask, activated);

  c.dropout_scale.resize(n, hid);
  const double p = h.dropout_p;
  if (p == 0.0) {
    c.dropout_scale.setOnes();
  } else {
    const Real keep_scale = static_cast<Real>(1.0 / (1.0 - p));
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index j = 0; j < hid; ++j) {
        c.dropout_scale(r, j) = rng.uniform() >= p ? keep_scale : Real(0);
      }
    }
  }
  c.dropped = activated.cwiseProduct(c.dropout_scale);

  ForwardResult<Real> result;
  result.output = output_layer(h, c.dropped);
  result.cache = std::move(c);
  return result;
}

template <typename Real>
HeadGradients<Real> head_backward(const ProjectionHead<Real>& h, const ForwardCache<Real>& cache,
                                  const Mat<Real>& d_output, InputGrad input_grad) {
  const auto n = cache.pre_bn.rows();
  const auto hid = h.d_hid();
  if (d_output.rows() != n || d_output.cols() != h.d_out() || cache.input.cols() != h.d_in() ||
      cache.pre_bn.cols() != hid) {
    fail(ErrorCode::kShapeMismatch, "backward: cache and output gradient shapes disagree");
  }

  HeadGradients<Real> g;
  g.w2 = cache.dropped.transpose() * d_output;
  g.b2 = to_real<Real>(column_sums(d_output));

  // Through dropout (replaying the cached mask) and ReLU.
  Mat<Real> d_bn_out = (d_output * h.w2.transpose())
                           .cwiseProduct(cache.dropout_scale)
                           .cwiseProduct(cache.relu_mask);

  g.bn_beta = to_real<Real>(column_sums(d_bn_out));
  const Mat<Real> d_bn_times_xhat = d_bn_out.cwiseProduct(cache.normalized);
  g.bn_gamma = to_real<Real>(column_sums(d_bn_times_xhat));

  // Batch-statistics BN backward:
  //   dH = inv_std / N * (N*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
  Mat<Real> d_pre(n, hid);
  const double nn = static_cast<double>(n);
  for (Eigen::Index j = 0; j < hid; ++j) {
    const double gamma = h.bn_gamma[j];
    const double inv_std =
        1.0 / std::sqrt(static_cast<double>(cache.batch_var[j]) + static_cast<double>(h.bn_eps));
    double sum_dx = 0.0;
    double sum_dx_xhat = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double dx = gamma * static_cast<double>(d_bn_out(r, j));
      sum_dx += dx;
      sum_dx_xhat += dx * static_cast<double>(cache.normalized(r, j));
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      const double dx = gamma * static_cast<double>(d_bn_out(r, j));
      d_pre(r, j) = static_cast<Real>(
          inv_std / nn * (nn * dx - sum_dx - static_cast<double>(cache.normalized(r, j)) * sum_dx_xhat));
    }
  }

  g.w1 = cache.input.transpose() * d_pre;
  g.b1 = to_real<Real>(column_sums(d_pre));
  if (input_grad == InputGrad::kCompute) g.input = d_pre * h.w1.transpose();
  return g;
}

template <typename Real>
void adam_step(std::span<Real> param, std::span<const Real> grad, std::span<Real> m,
               std::span<Real> v, std::uint64_t step, double lr, const AdamConfig& cfg) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    fail(ErrorCode::kShapeMismatch, "adam: parameter and state sizes disagree");
  }
  if (step == 0) fail(ErrorCode::kInvalidArgument, "adam: step counter starts at 1");
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double gi = grad[i];
    const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
    const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
    m[i] = static_cast<Real>(mi);
    v[i] = static_cast<Real>(vi);
    const double m_hat = mi / correction1;
    const double v_hat = vi / correction2;
    param[i] = static_cast<Real>(static_cast<double>(param[i]) - lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

namespace {

template <typename Real, typename Block>
std::span<Real> flat(Block& b) {
  return std::span<Real>(b.data(), static_cast<std::size_t>(b.size()));
}

template <typename Real, typename Block>
std::span<const Real> flat_const(const Block& b) {
  return std::span<const Real>(b.data(), static_cast<std::size_t>(b.size()));
}

}  // namespace

template <typename Real>
void apply_update(ProjectionHead<Real>& h, const HeadGradients<Real>& g, AdamState<Real>& state,
                  double lr, const AdamConfig& cfg) {
  const std::uint64_t step = ++state.step;
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (param.size() != grad.size()) {
      fail(ErrorCode::kShapeMismatch, "apply_update: gradient shape disagrees with parameter");
    }
    adam_step<Real>(flat<Real>(param), flat_const<Real>(grad), flat<Real>(m), flat<Real>(v), step,
                    lr, cfg);
  };
  update(h.w1, g.w1, state.m.w1, state.v.w1);
  update(h.b1, g.b1, state.m.b1, state.v.b1);
  update(h.bn_gamma, g.bn_gamma, state.m.bn_gamma, state.v.bn_gamma);
  update(h.bn_beta, g.bn_beta, state.m.bn_beta, state.v.bn_beta);
  update(h.w2, g.w2, state.m.w2, state.v.w2);
  update(h.b2, g.b2, state.m.b2, state.v.b2);
}

#define MVBIND_INSTANTIATE(Real)                                                                 \
  template struct ProjectionHead<Real>;                                                          \
  template struct HeadGradients<Real>;                                                           \
  template struct AdamState<Real>;                                                               \
  template ProjectionHead<Real> init_head<Real>(std::uint64_t, Eigen::Index, Eigen::Index,       \
                                                Eigen::Index);                                   \
  template ForwardResult<Real> head_forward<Real>(ProjectionHead<Real>&, const Mat<Real>&, Mode, \
                                                  Rng&);                                         \
  template Mat<Real> head_forward_eval<Real>(const ProjectionHead<Real>&, const Mat<Real>&);     \
  template HeadGradients<Real> head_backward<Real>(const ProjectionHead<Real>&,                  \
                                                   const ForwardCache<Real>&, const Mat<Real>&,  \
                                                   InputGrad);                                   \
  template void adam_step<Real>(std::span<Real>, std::span<const Real>, std::span<Real>,         \
                                std::span<Real>, std::uint64_t, double, const AdamConfig&);      \
  template void apply_update<Real>(ProjectionHead<Real>&, const HeadGradients<Real>&,            \
                                   AdamState<Real>&, double, const AdamConfig&);

MVBIND_INSTANTIATE(float)
MVBIND_INSTANTIATE(double)

#undef MVBIND_INSTANTIATE

}  // namespace mvbind::prophead
