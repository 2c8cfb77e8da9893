// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite differences against analytic gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

namespace mvbind::testing {

/// |a - n| / max(|a|, |n|, floor). The floor keeps exactly-zero gradients
/// (e.g. a bias cancelled by batch normalization) from dividing roundoff
/// by zero.
inline double rel_err(double analytic, double numeric, double floor = 1e-5) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradReport {
  double max_rel_err = 0.0;
  std::string worst;
  std::size_t checked = 0;
  std::size_t skipped = 0;

  void absorb(const GradReport& other) {
    if (other.max_rel_err > max_rel_err) {
      max_rel_err = other.max_rel_err;
      worst = other.worst;
    }
    checked += other.checked;
    skipped += other.skipped;
  }
};

enum class Scheme {
  kCentral,     // (L(p+h) - L(p-h)) / 2h, truncation O(h^2)
  kRichardson,  // (4 D(h/2) - D(h)) / 3 from two central differences, O(h^4)
};

/// Perturbs every entry of `params` in place and compares a finite
/// difference of `loss()` with `analytic`. Entries for which `on_kink()`
/// reports a changed activation pattern at any stencil point are skipped:
/// the loss is not differentiable across the stencil there.
template <typename LossFn, typename KinkFn>
GradReport check_block(const std::string& name, std::span<double> params,
                       std::span<const double> analytic, LossFn&& loss, double step,
                       KinkFn&& on_kink, Scheme scheme = Scheme::kCentral) {
  GradReport r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    bool kink = false;
    auto central = [&](double h) {
      params[i] = saved + h;
      const double up = loss();
      kink = kink || on_kink();
      params[i] = saved - h;
      const double down = loss();
      kink = kink || on_kink();
      params[i] = saved;
      return (up - down) / (2.0 * h);
    };
    double numeric = central(step);
    if (scheme == Scheme::kRichardson) numeric = (4.0 * central(step / 2.0) - numeric) / 3.0;
    if (kink) {
      ++r.skipped;
      continue;
    }
    const double e = rel_err(analytic[i], numeric);
    if (e > r.max_rel_err) {
      r.max_rel_err = e;
      r.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(analytic[i]) +
                " numeric=" + std::to_string(numeric);
    }
    ++r.checked;
  }
  return r;
}

template <typename LossFn>
GradReport check_block(const std::string& name, std::span<double> params,
                       std::span<const double> analytic, LossFn&& loss, double step) {
  return check_block(name, params, analytic, loss, step, [] { return false; });
}

template <typename M>
std::span<double> flat(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename M>
std::span<const double> flat_const(const M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace mvbind::testing
