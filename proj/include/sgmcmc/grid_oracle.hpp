#pragma once

#include <cmath>
#include <vector>

#include "sgmcmc/diagnostics.hpp"
#include "sgmcmc/model.hpp"
#include "sgmcmc/types.hpp"

namespace sgmcmc {

//! Gaussian approximation of the posterior at its mode, found by Newton
//! iteration on the log posterior.
template <typename S>
GaussianPosterior<S> laplace_approximation(const Model<S>& model, Index max_iterations = 100,
                                           S tolerance = S(1e-10)) {
  const Index d = model.dim();
  VectorX<S> theta = VectorX<S>::Zero(d);
  for (Index it = 0; it < max_iterations; ++it) {
    const VectorX<S> g = log_posterior_gradient(model, theta);
    const MatrixX<S> h = model.log_posterior_hessian(theta);
    Eigen::LLT<MatrixX<S>> llt(symmetrized<S>((-h).eval()));
    if (llt.info() != Eigen::Success) {
      throw conditioning_error("laplace_approximation: negative Hessian not positive definite");
    }
    const VectorX<S> step = llt.solve(g);
    theta += step;
    if (step.cwiseAbs().maxCoeff() < tolerance) break;
  }
  Eigen::LLT<MatrixX<S>> llt(symmetrized<S>((-model.log_posterior_hessian(theta)).eval()));
  GaussianPosterior<S> out;
  out.mean = theta;
  out.covariance = symmetrized<S>(llt.solve(MatrixX<S>::Identity(d, d)));
  return out;
}

//! Posterior mean and covariance by dense-grid quadrature of
//! prior x likelihood.  The grid spans +/- `half_width_sds` Laplace standard
//! deviations per axis with `points_per_axis` nodes.  Intended for low
//! dimension (the node count is points_per_axis^D).
template <typename S>
struct GridPosterior {
  MomentSummary<S> moments;
  VectorX<S> log_weights;   // unnormalized log posterior at the nodes
  MatrixX<S> nodes;         // node coordinates, one row per node
  S log_normalizer;         // log of sum(exp(log_weights)) * cell volume
  S cell_volume;

  //! Normalized posterior density at node k under the quadrature measure.
  S density(Index k) const { return std::exp(log_weights(k) - log_normalizer); }
};

template <typename S>
GridPosterior<S> grid_posterior(const Model<S>& model, Index points_per_axis = 401,
                                S half_width_sds = S(6)) {
  const Index d = model.dim();
  if (d < 1 || d > 3) throw precondition_error("grid_posterior: supports 1 <= D <= 3");
  if (points_per_axis < 3) throw precondition_error("grid_posterior: need at least 3 points per axis");

  const GaussianPosterior<S> laplace = laplace_approximation(model);
  std::vector<VectorX<S>> axes(static_cast<std::size_t>(d));
  S cell_volume = S(1);
  for (Index j = 0; j < d; ++j) {
    const S sd = std::sqrt(laplace.covariance(j, j));
    const S lo = laplace.mean(j) - half_width_sds * sd;
    const S hi = laplace.mean(j) + half_width_sds * sd;
    axes[static_cast<std::size_t>(j)] = VectorX<S>::LinSpaced(points_per_axis, lo, hi);
    cell_volume *= (hi - lo) / static_cast<S>(points_per_axis - 1);
  }

  Index total = 1;
  for (Index j = 0; j < d; ++j) total *= points_per_axis;

  GridPosterior<S> out;
  out.nodes.resize(total, d);
  out.log_weights.resize(total);
  out.cell_volume = cell_volume;

  VectorX<S> theta(d);
  for (Index k = 0; k < total; ++k) {
    Index rem = k;
    for (Index j = 0; j < d; ++j) {
      const Index idx = rem % points_per_axis;
      rem /= points_per_axis;
      theta(j) = axes[static_cast<std::size_t>(j)](idx);
    }
    out.nodes.row(k) = theta.transpose();
    out.log_weights(k) = log_unnormalized_posterior(model, theta);
  }

  const S max_lw = out.log_weights.maxCoeff();
  const VectorX<S> w = (out.log_weights.array() - max_lw).exp();
  const S wsum = w.sum();
  out.log_normalizer = max_lw + std::log(wsum * cell_volume);

  MomentSummary<S> m;
  m.mean = (out.nodes.transpose() * w) / wsum;
  MatrixX<S> cov = MatrixX<S>::Zero(d, d);
  for (Index k = 0; k < total; ++k) {
    const VectorX<S> delta = out.nodes.row(k).transpose() - m.mean;
    cov += w(k) * (delta * delta.transpose());
  }
  m.covariance = symmetrized<S>((cov / wsum).eval());
  m.count = total;
  out.moments = m;
  return out;
}

//! Just the quadrature moments (the usual reference for logistic models).
template <typename S>
MomentSummary<S> grid_posterior_moments(const Model<S>& model, Index points_per_axis = 401,
                                        S half_width_sds = S(6)) {
  return grid_posterior(model, points_per_axis, half_width_sds).moments;
}

}  // namespace sgmcmc
