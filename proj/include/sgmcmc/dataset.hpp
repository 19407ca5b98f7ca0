#pragma once

#include <utility>

#include "sgmcmc/types.hpp"

namespace sgmcmc {

//! Immutable collection of feature vectors with a scalar response per item.
//! Rows of features() are the items; responses() holds y (real-valued for
//! regression, {0,1} labels for classification).
template <typename S>
class Dataset {
 public:
  Dataset() = default;

  Dataset(MatrixX<S> features, VectorX<S> responses)
      : features_(std::move(features)), responses_(std::move(responses)) {
    if (features_.rows() != responses_.size()) {
      throw dimension_error("Dataset: feature rows and response count differ");
    }
    if (!all_finite(features_) || !all_finite(responses_)) {
      throw precondition_error("Dataset: non-finite entries");
    }
  }

  Index size() const { return features_.rows(); }
  Index feature_dim() const { return features_.cols(); }

  const MatrixX<S>& features() const { return features_; }
  const VectorX<S>& responses() const { return responses_; }

  auto feature(Index i) const { return features_.row(i); }
  S response(Index i) const { return responses_(i); }

 private:
  MatrixX<S> features_;
  VectorX<S> responses_;
};

//! Maps {-1,+1} responses to {0,1}; responses already in {0,1} pass through.
//! Any other response value is an error.
template <typename S>
Dataset<S> remap_binary_labels(const Dataset<S>& d) {
  VectorX<S> y = d.responses();
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) == S(-1)) {
      y(i) = S(0);
    } else if (y(i) != S(0) && y(i) != S(1)) {
      throw precondition_error("remap_binary_labels: response not in {-1,+1} or {0,1}");
    }
  }
  return Dataset<S>(d.features(), std::move(y));
}

}  // namespace sgmcmc
