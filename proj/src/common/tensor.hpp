// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

namespace mvbind {

// Batches are row-major: one sample per row.
template <typename Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
using RowVec = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

}  // namespace mvbind
