#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sgmcmc {

using Index = Eigen::Index;

template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

//! Argument shapes do not match (theta vs datum, full vs diagonal, ...).
class dimension_error : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

//! A documented precondition of an operation was violated by the caller.
class precondition_error : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

//! A reference quantity required to be nonzero (or well defined) is not.
class reference_error : public precondition_error {
  using precondition_error::precondition_error;
};

//! A series with zero variance was passed where autocorrelation is undefined.
class zero_variance_error : public precondition_error {
  using precondition_error::precondition_error;
};

//! A matrix that must be positive definite failed to factorize.
class conditioning_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! A chain produced a non-finite parameter value.
class divergence_error : public std::runtime_error {
 public:
  divergence_error(const std::string& what, std::int64_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_;
};

//! Invalid or inconsistent configuration (files, CLI, sampler settings).
class config_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

template <typename S>
MatrixX<S> symmetrized(const MatrixX<S>& m) {
  return ((m + m.transpose()) / S(2)).eval();
}

//! Lower Cholesky factor of a symmetric positive-definite matrix.
template <typename S>
MatrixX<S> cholesky_lower(const MatrixX<S>& m, const char* context = "matrix") {
  Eigen::LLT<MatrixX<S>> llt(m);
  if (llt.info() != Eigen::Success) {
    throw conditioning_error(std::string(context) +
                             ": Cholesky factorization failed (matrix not positive definite)");
  }
  return llt.matrixL();
}

}  // namespace sgmcmc
