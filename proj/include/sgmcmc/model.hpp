#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "sgmcmc/dataset.hpp"
#include "sgmcmc/rng.hpp"
#include "sgmcmc/types.hpp"

namespace sgmcmc {

//! Zero-mean Gaussian prior with precision lambda*I or a full SPD matrix.
template <typename S>
class GaussianPrior {
 public:
  //! Isotropic prior with precision lambda > 0.
  explicit GaussianPrior(S lambda) : lambda_(lambda) {
    if (!(lambda > S(0))) throw precondition_error("GaussianPrior: lambda must be positive");
  }

  //! Full-matrix prior; the precision must be symmetric positive definite.
  explicit GaussianPrior(MatrixX<S> precision) : lambda_(S(0)), precision_(std::move(precision)) {
    if (precision_.rows() != precision_.cols()) {
      throw dimension_error("GaussianPrior: precision matrix must be square");
    }
    if ((precision_ - precision_.transpose()).cwiseAbs().maxCoeff() > S(1e-12)) {
      throw precondition_error("GaussianPrior: precision matrix must be symmetric");
    }
    chol_ = cholesky_lower(precision_, "GaussianPrior precision");
  }

  bool isotropic() const { return precision_.size() == 0; }
  S lambda() const { return lambda_; }

  VectorX<S> gradient(const VectorX<S>& theta) const {
    if (isotropic()) return (-lambda_ * theta).eval();
    if (theta.size() != precision_.rows()) throw dimension_error("GaussianPrior: theta dimension");
    return (-(precision_ * theta)).eval();
  }

  S log_density(const VectorX<S>& theta) const {
    const S d = static_cast<S>(theta.size());
    const S log2pi = std::log(S(2) * std::numbers::pi_v<S>);
    if (isotropic()) {
      return S(-0.5) * lambda_ * theta.squaredNorm() + S(0.5) * d * (std::log(lambda_) - log2pi);
    }
    if (theta.size() != precision_.rows()) throw dimension_error("GaussianPrior: theta dimension");
    const S quad = theta.dot(precision_ * theta);
    const S logdet = S(2) * chol_.diagonal().array().log().sum();
    return S(-0.5) * quad + S(0.5) * (logdet - d * log2pi);
  }

  MatrixX<S> precision_matrix(Index d) const {
    if (isotropic()) return (lambda_ * MatrixX<S>::Identity(d, d)).eval();
    if (precision_.rows() != d) throw dimension_error("GaussianPrior: dimension mismatch");
    return precision_;
  }

 private:
  S lambda_;
  MatrixX<S> precision_;
  MatrixX<S> chol_;
};

//! Gaussian distribution over parameters, used both for exact conjugate
//! posteriors and for grid/Laplace reference moments.
template <typename S>
struct GaussianPosterior {
  VectorX<S> mean;
  MatrixX<S> covariance;

  GaussianPosterior() = default;
  GaussianPosterior(VectorX<S> m, MatrixX<S> cov)
      : mean(std::move(m)), covariance(std::move(cov)) {
    if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size()) {
      throw dimension_error("GaussianPosterior: shape mismatch");
    }
    // fails loudly if not SPD
    (void)cholesky_lower(symmetrized(covariance), "GaussianPosterior covariance");
  }

  MatrixX<S> precision() const {
    Eigen::LLT<MatrixX<S>> llt(symmetrized(covariance));
    if (llt.info() != Eigen::Success) {
      throw conditioning_error("GaussianPosterior: covariance not positive definite");
    }
    return symmetrized<S>(llt.solve(MatrixX<S>::Identity(mean.size(), mean.size())));
  }

  S log_density(const VectorX<S>& theta) const {
    const Index d = mean.size();
    Eigen::LLT<MatrixX<S>> llt(symmetrized(covariance));
    const VectorX<S> delta = theta - mean;
    const S quad = delta.dot(llt.solve(delta));
    const S logdet = S(2) * MatrixX<S>(llt.matrixL()).diagonal().array().log().sum();
    return S(-0.5) * (quad + logdet + static_cast<S>(d) * std::log(S(2) * std::numbers::pi_v<S>));
  }
};

//! Probabilistic model over an immutable dataset: per-datum scores, log
//! likelihoods, and a Gaussian prior.  All methods are pure functions of
//! their arguments, so one model may serve many concurrent chains.
template <typename S>
class Model {
 public:
  Model(Dataset<S> data, GaussianPrior<S> prior)
      : data_(std::move(data)), prior_(std::move(prior)) {}
  virtual ~Model() = default;

  const Dataset<S>& dataset() const { return data_; }
  const GaussianPrior<S>& prior() const { return prior_; }
  Index dim() const { return data_.feature_dim(); }
  Index data_size() const { return data_.size(); }

  //! Gradient of the per-datum log likelihood at theta.
  virtual VectorX<S> score(const VectorX<S>& theta, Index i) const = 0;

  //! Per-datum log likelihood.
  virtual S log_likelihood(const VectorX<S>& theta, Index i) const = 0;

  //! Scores of the given items, one per row of `out`.
  virtual void scores(const VectorX<S>& theta, std::span<const Index> batch, MatrixX<S>& out) const {
    out.resize(static_cast<Index>(batch.size()), dim());
    for (std::size_t k = 0; k < batch.size(); ++k) {
      out.row(static_cast<Index>(k)) = score(theta, batch[k]).transpose();
    }
  }

  //! Sum of scores over the whole dataset.
  virtual VectorX<S> score_sum(const VectorX<S>& theta) const {
    VectorX<S> g = VectorX<S>::Zero(dim());
    for (Index i = 0; i < data_size(); ++i) g += score(theta, i);
    return g;
  }

  //! Sum of log likelihoods over the whole dataset.
  virtual S log_likelihood_sum(const VectorX<S>& theta) const {
    S total = S(0);
    for (Index i = 0; i < data_size(); ++i) total += log_likelihood(theta, i);
    return total;
  }

  //! Hessian of the log posterior; used by the Laplace and grid oracles.
  virtual MatrixX<S> log_posterior_hessian(const VectorX<S>& theta) const = 0;

  VectorX<S> grad_log_prior(const VectorX<S>& theta) const {
    check_theta(theta);
    return prior_.gradient(theta);
  }

  S log_prior(const VectorX<S>& theta) const {
    check_theta(theta);
    return prior_.log_density(theta);
  }

 protected:
  void check_theta(const VectorX<S>& theta) const {
    if (theta.size() != dim()) throw dimension_error("Model: theta dimension mismatch");
  }
  void check_index(Index i) const {
    if (i < 0 || i >= data_size()) throw precondition_error("Model: datum index out of range");
  }

 private:
  Dataset<S> data_;
  GaussianPrior<S> prior_;
};

//! Bayesian linear regression with known noise variance sigma2:
//! y ~ N(theta'x, sigma2), theta ~ N(0, prior precision^{-1}).
template <typename S>
class LinearRegressionModel : public Model<S> {
 public:
  LinearRegressionModel(Dataset<S> data, GaussianPrior<S> prior, S noise_variance)
      : Model<S>(std::move(data), std::move(prior)), sigma2_(noise_variance) {
    if (!(sigma2_ > S(0))) throw precondition_error("LinearRegressionModel: sigma2 must be positive");
  }

  S noise_variance() const { return sigma2_; }

  VectorX<S> score(const VectorX<S>& theta, Index i) const override {
    this->check_theta(theta);
    this->check_index(i);
    const auto x = this->dataset().feature(i);
    const S resid = this->dataset().response(i) - x.dot(theta);
    return (x.transpose() * (resid / sigma2_)).eval();
  }

  S log_likelihood(const VectorX<S>& theta, Index i) const override {
    this->check_theta(theta);
    this->check_index(i);
    const S resid = this->dataset().response(i) - this->dataset().feature(i).dot(theta);
    return S(-0.5) * resid * resid / sigma2_ -
           S(0.5) * std::log(S(2) * std::numbers::pi_v<S> * sigma2_);
  }

  void scores(const VectorX<S>& theta, std::span<const Index> batch, MatrixX<S>& out) const override {
    this->check_theta(theta);
    const Index n = static_cast<Index>(batch.size());
    out.resize(n, this->dim());
    const auto& X = this->dataset().features();
    const auto& y = this->dataset().responses();
    for (Index k = 0; k < n; ++k) {
      const Index i = batch[static_cast<std::size_t>(k)];
      this->check_index(i);
      out.row(k) = X.row(i) * ((y(i) - X.row(i).dot(theta)) / sigma2_);
    }
  }

  VectorX<S> score_sum(const VectorX<S>& theta) const override {
    this->check_theta(theta);
    const auto& X = this->dataset().features();
    const VectorX<S> resid = this->dataset().responses() - X * theta;
    return (X.transpose() * resid / sigma2_).eval();
  }

  S log_likelihood_sum(const VectorX<S>& theta) const override {
    this->check_theta(theta);
    const auto& X = this->dataset().features();
    const VectorX<S> resid = this->dataset().responses() - X * theta;
    const S n = static_cast<S>(this->data_size());
    return S(-0.5) * resid.squaredNorm() / sigma2_ -
           S(0.5) * n * std::log(S(2) * std::numbers::pi_v<S> * sigma2_);
  }

  MatrixX<S> log_posterior_hessian(const VectorX<S>& theta) const override {
    this->check_theta(theta);
    const auto& X = this->dataset().features();
    MatrixX<S> h = -(X.transpose() * X) / sigma2_;
    h -= this->prior().precision_matrix(this->dim());
    return h;
  }

 private:
  S sigma2_;
};

//! Logistic regression with {0,1} labels and Gaussian prior.
template <typename S>
class LogisticRegressionModel : public Model<S> {
 public:
  LogisticRegressionModel(Dataset<S> data, GaussianPrior<S> prior)
      : Model<S>(std::move(data), std::move(prior)) {
    const auto& y = this->dataset().responses();
    for (Index i = 0; i < y.size(); ++i) {
      if (y(i) != S(0) && y(i) != S(1)) {
        throw precondition_error("LogisticRegressionModel: labels must be in {0,1}");
      }
    }
  }

  static S sigmoid(S s) { return S(1) / (S(1) + std::exp(-s)); }

  // log(1 + e^s) without overflow
  static S softplus(S s) { return s > S(0) ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

  VectorX<S> score(const VectorX<S>& theta, Index i) const override {
    this->check_theta(theta);
    this->check_index(i);
    const auto x = this->dataset().feature(i);
    const S p = sigmoid(x.dot(theta));
    return (x.transpose() * (this->dataset().response(i) - p)).eval();
  }

  S log_likelihood(const VectorX<S>& theta, Index i) const override {
    this->check_theta(theta);
    this->check_index(i);
    const S s = this->dataset().feature(i).dot(theta);
    return this->dataset().response(i) * s - softplus(s);
  }

  void scores(const VectorX<S>& theta, std::span<const Index> batch, MatrixX<S>& out) const override {
    this->check_theta(theta);
    const Index n = static_cast<Index>(batch.size());
    out.resize(n, this->dim());
    const auto& X = this->dataset().features();
    const auto& y = this->dataset().responses();
    for (Index k = 0; k < n; ++k) {
      const Index i = batch[static_cast<std::size_t>(k)];
      this->check_index(i);
      out.row(k) = X.row(i) * (y(i) - sigmoid(X.row(i).dot(theta)));
    }
  }

  VectorX<S> score_sum(const VectorX<S>& theta) const override {
    this->check_theta(theta);
    const auto& X = this->dataset().features();
    const VectorX<S> p = (X * theta).unaryExpr([](S s) { return sigmoid(s); });
    return (X.transpose() * (this->dataset().responses() - p)).eval();
  }

  S log_likelihood_sum(const VectorX<S>& theta) const override {
    this->check_theta(theta);
    const auto& X = this->dataset().features();
    const VectorX<S> s = X * theta;
    S total = S(0);
    for (Index i = 0; i < s.size(); ++i) {
      total += this->dataset().response(i) * s(i) - softplus(s(i));
    }
    return total;
  }

  MatrixX<S> log_posterior_hessian(const VectorX<S>& theta) const override {
    this->check_theta(theta);
    const auto& X = this->dataset().features();
    const VectorX<S> w = (X * theta).unaryExpr([](S s) {
      const S p = sigmoid(s);
      return p * (S(1) - p);
    });
    MatrixX<S> h = -(X.transpose() * w.asDiagonal() * X);
    h -= this->prior().precision_matrix(this->dim());
    return h;
  }
};

//! Mean of the per-item scores over a minibatch of indices.
template <typename S>
VectorX<S> minibatch_mean_score(const Model<S>& model, const VectorX<S>& theta,
                                std::span<const Index> batch) {
  if (batch.empty()) throw precondition_error("minibatch_mean_score: empty batch");
  MatrixX<S> sc;
  model.scores(theta, batch, sc);
  return (sc.colwise().mean()).transpose().eval();
}

//! log p(theta) + sum_i log p(x_i | theta) over the full dataset.
template <typename S>
S log_unnormalized_posterior(const Model<S>& model, const VectorX<S>& theta) {
  return model.log_prior(theta) + model.log_likelihood_sum(theta);
}

//! Gradient of log_unnormalized_posterior.
template <typename S>
VectorX<S> log_posterior_gradient(const Model<S>& model, const VectorX<S>& theta) {
  return (model.grad_log_prior(theta) + model.score_sum(theta)).eval();
}

//! Exact conjugate posterior of Bayesian linear regression:
//!   Sigma* = (Lambda_0 + X'X / sigma2)^{-1},  mu* = Sigma* X'y / sigma2.
template <typename S>
GaussianPosterior<S> exact_posterior(const LinearRegressionModel<S>& model) {
  const Index d = model.dim();
  const auto& X = model.dataset().features();
  const auto& y = model.dataset().responses();
  MatrixX<S> precision = model.prior().precision_matrix(d);
  if (model.data_size() > 0) precision += (X.transpose() * X) / model.noise_variance();
  Eigen::LLT<MatrixX<S>> llt(symmetrized(precision));
  if (llt.info() != Eigen::Success) {
    throw conditioning_error("exact_posterior: posterior precision not positive definite");
  }
  VectorX<S> rhs = VectorX<S>::Zero(d);
  if (model.data_size() > 0) rhs = X.transpose() * y / model.noise_variance();
  GaussianPosterior<S> post;
  post.mean = llt.solve(rhs);
  post.covariance = symmetrized<S>(llt.solve(MatrixX<S>::Identity(d, d)));
  return post;
}

//! Draw from a Gaussian given its mean and a lower Cholesky factor of the
//! covariance.
template <typename S>
VectorX<S> sample_gaussian(const VectorX<S>& mean, const MatrixX<S>& chol_lower, Rng<S>& rng) {
  return (mean + chol_lower * rng.normal_vector(mean.size())).eval();
}

}  // namespace sgmcmc
