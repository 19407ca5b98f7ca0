#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "sgmcmc/types.hpp"

namespace sgmcmc {

enum class FisherForm { full, diagonal };

//! Step weights for the online Fisher average: kappa(t) = t^{-exponent}.
//! kappa(1) == 1 for any exponent, so the first update overwrites whatever
//! the estimate was initialized to.
struct KappaSchedule {
  double exponent = 1.0;

  double operator()(std::int64_t t) const {
    if (t < 1) throw precondition_error("KappaSchedule: t must be >= 1");
    return std::pow(static_cast<double>(t), -exponent);
  }
};

//! Online average of per-minibatch empirical Fisher matrices, either the
//! full symmetric matrix or just its diagonal.  `t` counts applied updates;
//! t == 0 is the initialization state.
template <typename S>
struct FisherEstimate {
  FisherForm form = FisherForm::full;
  MatrixX<S> full;
  VectorX<S> diag;
  std::int64_t t = 0;

  static FisherEstimate identity(Index d, FisherForm form) {
    FisherEstimate est;
    est.form = form;
    if (form == FisherForm::full) {
      est.full = MatrixX<S>::Identity(d, d);
    } else {
      est.diag = VectorX<S>::Ones(d);
    }
    return est;
  }

  Index dim() const { return form == FisherForm::full ? full.rows() : diag.size(); }
};

//! Unbiased sample covariance of scores (rows of `scores`):
//!   V = 1/(n-1) * sum_i (g_i - gbar)(g_i - gbar)'
//! Two-pass computation: mean first, then deviations.
template <typename S>
MatrixX<S> empirical_fisher(const MatrixX<S>& scores) {
  const Index n = scores.rows();
  if (n < 2) throw precondition_error("empirical_fisher: need at least 2 scores");
  const Eigen::RowVectorX<S> mean = scores.colwise().mean();
  const MatrixX<S> centered = scores.rowwise() - mean;
  MatrixX<S> v = (centered.transpose() * centered) / static_cast<S>(n - 1);
  return symmetrized(v);
}

//! Per-coordinate variances of the scores; equals diag(empirical_fisher).
template <typename S>
VectorX<S> diagonal_empirical_fisher(const MatrixX<S>& scores) {
  const Index n = scores.rows();
  if (n < 2) throw precondition_error("diagonal_empirical_fisher: need at least 2 scores");
  const Eigen::RowVectorX<S> mean = scores.colwise().mean();
  return ((scores.rowwise() - mean).colwise().squaredNorm() / static_cast<S>(n - 1))
      .transpose()
      .eval();
}

//! One convex-combination step with explicit weight kappa:
//!   est <- (1 - kappa) est + kappa v
template <typename S>
void online_update_with(FisherEstimate<S>& est, const MatrixX<S>& v, double kappa) {
  if (est.form != FisherForm::full) throw dimension_error("online_update: estimate is not full form");
  if (v.rows() != est.full.rows() || v.cols() != est.full.cols()) {
    throw dimension_error("online_update: shape mismatch");
  }
  const S k = static_cast<S>(kappa);
  est.full = (S(1) - k) * est.full + k * v;
  ++est.t;
}

template <typename S>
void online_update_with(FisherEstimate<S>& est, const VectorX<S>& v, double kappa) {
  if (est.form != FisherForm::diagonal) {
    throw dimension_error("online_update: estimate is not diagonal form");
  }
  if (v.size() != est.diag.size()) throw dimension_error("online_update: shape mismatch");
  const S k = static_cast<S>(kappa);
  est.diag = (S(1) - k) * est.diag + k * v;
  ++est.t;
}

//! Online average update; the weight comes from the schedule at the next
//! update index (est.t + 1).  With the default kappa_t = 1/t the estimate
//! after T updates is the plain arithmetic mean of the V's.
template <typename S, typename V>
void online_update(FisherEstimate<S>& est, const V& v, const KappaSchedule& schedule) {
  online_update_with(est, v, schedule(est.t + 1));
}

//! Positive-definite regularization ahead of a solve: full form adds
//! jitter*I, diagonal form clamps entries at jitter.
template <typename S>
FisherEstimate<S> regularized(const FisherEstimate<S>& est, S jitter) {
  if (jitter < S(0)) throw precondition_error("regularized: jitter must be >= 0");
  FisherEstimate<S> out = est;
  if (est.form == FisherForm::full) {
    out.full.diagonal().array() += jitter;
  } else {
    out.diag = est.diag.cwiseMax(jitter);
  }
  return out;
}

//! Default jitter: scale times the mean diagonal of the estimate.
template <typename S>
S default_jitter(const FisherEstimate<S>& est, S scale = S(1e-8)) {
  const S mean_diag = est.form == FisherForm::full ? est.full.diagonal().mean() : est.diag.mean();
  return scale * mean_diag;
}

}  // namespace sgmcmc
