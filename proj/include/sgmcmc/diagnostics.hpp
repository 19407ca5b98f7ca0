#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "sgmcmc/trace.hpp"
#include "sgmcmc/types.hpp"

namespace sgmcmc {

//! Mean and population covariance (divisor = count) of a sample set.
template <typename S>
struct MomentSummary {
  VectorX<S> mean;
  MatrixX<S> covariance;
  std::int64_t count = 0;
};

//! Streaming mean/covariance accumulator (Welford update, matrix form).
//! covariance() uses the population normalization 1/n to match the running
//! moment definition used by the error metrics.
template <typename S>
class RunningMoments {
 public:
  explicit RunningMoments(Index dim)
      : mean_(VectorX<S>::Zero(dim)), m2_(MatrixX<S>::Zero(dim, dim)) {}

  void update(const VectorX<S>& x) {
    if (x.size() != mean_.size()) throw dimension_error("RunningMoments: dimension mismatch");
    ++count_;
    const VectorX<S> delta = x - mean_;
    mean_ += delta / static_cast<S>(count_);
    m2_ += delta * (x - mean_).transpose();
  }

  void merge(const RunningMoments& other) {
    if (other.mean_.size() != mean_.size()) throw dimension_error("RunningMoments: dimension mismatch");
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const S na = static_cast<S>(count_);
    const S nb = static_cast<S>(other.count_);
    const VectorX<S> delta = other.mean_ - mean_;
    m2_ += other.m2_ + (na * nb / (na + nb)) * (delta * delta.transpose());
    mean_ = (na * mean_ + nb * other.mean_) / (na + nb);
    count_ += other.count_;
  }

  std::int64_t count() const { return count_; }
  const VectorX<S>& mean() const { return mean_; }

  MatrixX<S> covariance() const {
    if (count_ < 2) throw precondition_error("RunningMoments: covariance needs count >= 2");
    return symmetrized<S>((m2_ / static_cast<S>(count_)).eval());
  }

  MomentSummary<S> summary() const { return {mean_, covariance(), count_}; }

 private:
  std::int64_t count_ = 0;
  VectorX<S> mean_;
  MatrixX<S> m2_;
};

//! Moments of the first `upto` rows of a sample matrix (population
//! covariance, divisor upto).
template <typename S>
MomentSummary<S> running_moments(const MatrixX<S>& samples, Index upto) {
  if (upto < 2) throw precondition_error("running_moments: need at least 2 samples");
  if (upto > samples.rows()) throw precondition_error("running_moments: upto exceeds sample count");
  RunningMoments<S> acc(samples.cols());
  for (Index i = 0; i < upto; ++i) acc.update(samples.row(i).transpose());
  return acc.summary();
}

template <typename S>
MomentSummary<S> running_moments(const Trace<S>& trace, Index upto) {
  return running_moments(trace.samples, upto);
}

template <typename S>
MomentSummary<S> running_moments(const Trace<S>& trace) {
  return running_moments(trace.samples, trace.size());
}

//! Relative L1 errors of estimated moments against a reference:
//!   E1 = sum_i |mean_i - ref_mean_i| / sum_i |ref_mean_i|
//!   E2 = sum_ij |cov_ij - ref_cov_ij| / sum_ij |ref_cov_ij|
template <typename S>
std::pair<S, S> relative_errors(const MomentSummary<S>& est, const MomentSummary<S>& ref) {
  if (est.mean.size() != ref.mean.size()) throw dimension_error("relative_errors: dimension mismatch");
  const S mean_denom = ref.mean.cwiseAbs().sum();
  const S cov_denom = ref.covariance.cwiseAbs().sum();
  if (mean_denom == S(0) || cov_denom == S(0)) {
    throw reference_error("relative_errors: reference denominator is zero");
  }
  const S e1 = (est.mean - ref.mean).cwiseAbs().sum() / mean_denom;
  const S e2 = (est.covariance - ref.covariance).cwiseAbs().sum() / cov_denom;
  return {e1, e2};
}

//! Autocorrelation at lag s:
//!   rho(s) = 1/((T-s) var) * sum_{t} (x_t - xbar)(x_{t+s} - xbar)
//! with the population variance (divisor T), so rho(0) == 1 exactly.
template <typename S>
S autocorrelation(const VectorX<S>& series, Index lag) {
  const Index n = series.size();
  if (lag < 0 || lag >= n) throw precondition_error("autocorrelation: lag out of range");
  const S mean = series.mean();
  const VectorX<S> centered = series.array() - mean;
  const S var = centered.squaredNorm() / static_cast<S>(n);
  if (var == S(0)) throw zero_variance_error("autocorrelation: constant series");
  const S cov = centered.head(n - lag).dot(centered.tail(n - lag)) / static_cast<S>(n - lag);
  return cov / var;
}

//! Integrated autocorrelation time 1 + 2 sum_s rho(s), truncated by the
//! initial-positive-sequence rule: stop before the first s with
//! rho(s) + rho(s+1) <= 0.  Clamped below at 1e-3.
template <typename S>
S autocorrelation_time(const VectorX<S>& series) {
  const Index n = series.size();
  if (n < 2) throw precondition_error("autocorrelation_time: need at least 2 points");
  const S mean = series.mean();
  const VectorX<S> centered = series.array() - mean;
  const S var = centered.squaredNorm() / static_cast<S>(n);
  if (var == S(0)) throw zero_variance_error("autocorrelation_time: constant series");

  auto rho = [&](Index s) {
    return centered.head(n - s).dot(centered.tail(n - s)) / (static_cast<S>(n - s) * var);
  };

  S act = S(1);
  S current = n > 1 ? rho(1) : S(0);
  for (Index s = 1; s + 1 < n; ++s) {
    const S next = rho(s + 1);
    if (current + next <= S(0)) break;
    act += S(2) * current;
    current = next;
  }
  return std::max(act, S(1e-3));
}

//! Autocorrelation time scaled by wall-clock cost per retained sample.
template <typename S>
S atuc(const VectorX<S>& series, S time_per_sample) {
  if (!(time_per_sample > S(0))) throw precondition_error("atuc: time_per_sample must be positive");
  return autocorrelation_time(series) * time_per_sample;
}

//! Mean autocorrelation time across parameter coordinates.
template <typename S>
S mean_autocorrelation_time(const Trace<S>& trace) {
  if (trace.size() < 2) throw precondition_error("mean_autocorrelation_time: trace too short");
  S total = S(0);
  for (Index j = 0; j < trace.dim(); ++j) {
    total += autocorrelation_time<S>(trace.samples.col(j).eval());
  }
  return total / static_cast<S>(trace.dim());
}

//! Per-parameter ATUC averaged over coordinates, using the trace's own
//! time-per-sample measurement.
template <typename S>
S atuc(const Trace<S>& trace) {
  return mean_autocorrelation_time(trace) * static_cast<S>(trace.time_per_sample());
}

}  // namespace sgmcmc
