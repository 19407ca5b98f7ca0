// Test-only oracles, deliberately written as plain loops so they stay
// independent of the library's Eigen-expression implementations.
#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "sgmcmc/rng.hpp"
#include "sgmcmc/types.hpp"

namespace oracles {

using sgmcmc::Index;
using sgmcmc::MatrixX;
using sgmcmc::VectorX;

//! Central finite-difference gradient of a scalar function.
inline VectorX<double> finite_difference_gradient(
    const std::function<double(const VectorX<double>&)>& f, const VectorX<double>& x,
    double h = 1e-6) {
  VectorX<double> g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    VectorX<double> hi = x, lo = x;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const VectorX<double>& a, const VectorX<double>& b) {
  const double denom = std::max(b.norm(), 1e-12);
  return (a - b).norm() / denom;
}

inline double relative_error(const MatrixX<double>& a, const MatrixX<double>& b) {
  const double denom = std::max(b.norm(), 1e-12);
  return (a - b).norm() / denom;
}

//! Sample covariance of the rows (divisor n-1), computed with explicit loops.
inline MatrixX<double> brute_force_covariance(const MatrixX<double>& rows) {
  const Index n = rows.rows();
  const Index d = rows.cols();
  VectorX<double> mean = VectorX<double>::Zero(d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) mean(j) += rows(i, j);
  }
  mean /= static_cast<double>(n);
  MatrixX<double> cov = MatrixX<double>::Zero(d, d);
  for (Index i = 0; i < n; ++i) {
    for (Index a = 0; a < d; ++a) {
      for (Index b = 0; b < d; ++b) {
        cov(a, b) += (rows(i, a) - mean(a)) * (rows(i, b) - mean(b));
      }
    }
  }
  return cov / static_cast<double>(n - 1);
}

//! Population mean/covariance of the first `upto` rows (divisor upto).
inline std::pair<VectorX<double>, MatrixX<double>> brute_force_population_moments(
    const MatrixX<double>& rows, Index upto) {
  const Index d = rows.cols();
  VectorX<double> mean = VectorX<double>::Zero(d);
  for (Index i = 0; i < upto; ++i) mean += rows.row(i).transpose();
  mean /= static_cast<double>(upto);
  MatrixX<double> cov = MatrixX<double>::Zero(d, d);
  for (Index i = 0; i < upto; ++i) {
    const VectorX<double> delta = rows.row(i).transpose() - mean;
    for (Index a = 0; a < d; ++a) {
      for (Index b = 0; b < d; ++b) cov(a, b) += delta(a) * delta(b);
    }
  }
  return {mean, cov / static_cast<double>(upto)};
}

//! Direct Eq.-style L1 relative errors, computed with explicit loops.
inline std::pair<double, double> direct_relative_errors(const VectorX<double>& mean_est,
                                                        const MatrixX<double>& cov_est,
                                                        const VectorX<double>& mean_ref,
                                                        const MatrixX<double>& cov_ref) {
  double num1 = 0, den1 = 0;
  for (Index i = 0; i < mean_ref.size(); ++i) {
    num1 += std::abs(mean_est(i) - mean_ref(i));
    den1 += std::abs(mean_ref(i));
  }
  double num2 = 0, den2 = 0;
  for (Index i = 0; i < cov_ref.rows(); ++i) {
    for (Index j = 0; j < cov_ref.cols(); ++j) {
      num2 += std::abs(cov_est(i, j) - cov_ref(i, j));
      den2 += std::abs(cov_ref(i, j));
    }
  }
  return {num1 / den1, num2 / den2};
}

//! Stationary AR(1) series x_t = phi x_{t-1} + e_t, e ~ N(0,1), started from
//! the stationary distribution.
inline VectorX<double> ar1_series(double phi, Index t, std::uint64_t seed) {
  sgmcmc::Rng<double> rng(seed);
  VectorX<double> x(t);
  x(0) = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (Index i = 1; i < t; ++i) x(i) = phi * x(i - 1) + rng.normal();
  return x;
}

//! Random symmetric positive-definite matrix with eigenvalues in
//! [min_eig, max_eig]: Q diag(lambda) Q' with Q from a QR factorization.
inline MatrixX<double> random_spd(sgmcmc::Rng<double>& rng, Index d, double min_eig = 0.1,
                                  double max_eig = 10.0) {
  MatrixX<double> a(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  }
  const Eigen::HouseholderQR<MatrixX<double>> qr(a);
  const MatrixX<double> q = qr.householderQ();
  VectorX<double> eigs(d);
  for (Index i = 0; i < d; ++i) eigs(i) = min_eig + (max_eig - min_eig) * rng.uniform();
  return q * eigs.asDiagonal() * q.transpose();
}

}  // namespace oracles
