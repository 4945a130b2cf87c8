#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace ncvr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Feature storage: one sample per contiguous row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorRef = Eigen::Ref<const Vector>;

using Index = Eigen::Index;

/// Largest dimension for which dense p x p Hessians are formed.
inline constexpr Index kDenseHessianLimit = 2000;

}  // namespace ncvr
