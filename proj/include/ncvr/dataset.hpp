#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "ncvr/errors.hpp"
#include "ncvr/types.hpp"

namespace ncvr {

/// Provenance record: generator parameters, seeds, source path,
/// normalization constants. Keys are free-form.
using DataMeta = std::map<std::string, std::string>;

/// Immutable n x p design with n targets. Validated on construction.
class DataSet {
 public:
  DataSet(RowMatrix features, Vector targets, DataMeta meta = {})
      : features_(std::move(features)), targets_(std::move(targets)), meta_(std::move(meta)) {
    if (features_.rows() < 1 || features_.cols() < 1) {
      throw InvalidInput("DataSet: need n >= 1 and p >= 1");
    }
    if (targets_.size() != features_.rows()) {
      throw InvalidInput("DataSet: target count " + std::to_string(targets_.size()) +
                         " does not match row count " + std::to_string(features_.rows()));
    }
    if (!features_.allFinite() || !targets_.allFinite()) {
      throw InvalidInput("DataSet: non-finite entry");
    }
  }

  Index size() const noexcept { return features_.rows(); }
  Index dim() const noexcept { return features_.cols(); }

  const RowMatrix& features() const noexcept { return features_; }
  const Vector& targets() const noexcept { return targets_; }
  const DataMeta& meta() const noexcept { return meta_; }

  auto x(Index i) const { return features_.row(i).transpose(); }
  double y(Index i) const { return targets_[i]; }

  DataSet with_meta(const std::string& key, std::string value) const {
    DataMeta meta = meta_;
    meta[key] = std::move(value);
    return DataSet(features_, targets_, std::move(meta));
  }

 private:
  RowMatrix features_;
  Vector targets_;
  DataMeta meta_;
};

/// A single observation (x, y).
struct Sample {
  Vector x;
  double y = 0.0;
};

}  // namespace ncvr
