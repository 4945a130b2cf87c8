#pragma once

#include <cstdint>

#include "ncvr/dataset.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/types.hpp"

namespace ncvr {

/// Per-run access to sample gradients that counts every evaluation.
/// A gradient of sample i is slope_i(theta) * x_i, so the count is taken on
/// slope() and the vector is formed by the caller.
template <MarginLoss L>
class CountingOracle {
 public:
  CountingOracle(const L& loss, const DataSet& data) : loss_(loss), data_(data) {}

  const L& loss() const noexcept { return loss_; }
  const DataSet& data() const noexcept { return data_; }
  Index size() const noexcept { return data_.size(); }
  Index dim() const noexcept { return data_.dim(); }

  double slope(Index i, const Vector& theta) {
    ++evaluations_;
    return loss_.slope(theta.dot(data_.x(i)), data_.y(i));
  }

  /// Mean gradient in index order (n evaluations). Per-sample slopes are
  /// written to `slopes` when given.
  Vector full_gradient(const Vector& theta, Vector* slopes = nullptr) {
    const Index n = data_.size();
    if (slopes) slopes->resize(n);
    Vector g = Vector::Zero(data_.dim());
    for (Index i = 0; i < n; ++i) {
      const double c = slope(i, theta);
      if (slopes) (*slopes)[i] = c;
      g.noalias() += c * data_.x(i);
    }
    return g / static_cast<double>(n);
  }

  std::uint64_t evaluations() const noexcept { return evaluations_; }

 private:
  const L& loss_;
  const DataSet& data_;
  std::uint64_t evaluations_ = 0;
};

}  // namespace ncvr
