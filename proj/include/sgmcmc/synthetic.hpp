#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "sgmcmc/dataset.hpp"
#include "sgmcmc/model.hpp"
#include "sgmcmc/rng.hpp"
#include "sgmcmc/types.hpp"

namespace sgmcmc {

enum class SyntheticKind { linear, logistic };

inline std::string synthetic_kind_label(SyntheticKind k) {
  return k == SyntheticKind::linear ? "linear" : "logistic";
}

template <typename S>
struct SyntheticData {
  Dataset<S> data;
  VectorX<S> theta0;
  std::uint64_t seed = 0;
  std::optional<S> noise_variance;
};

//! Synthetic dataset at a ground-truth parameter drawn from the seed:
//! theta_0 ~ N(0, I), features x ~ N(0, I); linear responses are
//! y = theta_0'x + N(0, sigma2), logistic responses y ~ Bern(sigmoid(theta_0'x)).
template <typename S>
SyntheticData<S> generate_synthetic(SyntheticKind kind, Index n_items, Index dim,
                                    std::uint64_t seed, std::optional<S> noise_variance = {}) {
  if (n_items < 1 || dim < 1) throw precondition_error("generate_synthetic: need N >= 1, D >= 1");
  if (kind == SyntheticKind::linear && (!noise_variance || !(*noise_variance > S(0)))) {
    throw precondition_error("generate_synthetic: linear kind needs noise variance > 0");
  }

  Rng<S> rng(seed);
  SyntheticData<S> out;
  out.seed = seed;
  out.theta0 = rng.normal_vector(dim);

  MatrixX<S> features(n_items, dim);
  VectorX<S> responses(n_items);
  for (Index i = 0; i < n_items; ++i) {
    for (Index j = 0; j < dim; ++j) features(i, j) = rng.normal();
    const S activation = features.row(i).dot(out.theta0);
    if (kind == SyntheticKind::linear) {
      responses(i) = activation + std::sqrt(*noise_variance) * rng.normal();
    } else {
      const S p = S(1) / (S(1) + std::exp(-activation));
      responses(i) = rng.uniform() < p ? S(1) : S(0);
    }
  }
  out.data = Dataset<S>(std::move(features), std::move(responses));
  if (kind == SyntheticKind::linear) out.noise_variance = noise_variance;
  return out;
}

//! Projects features through a fixed matrix R with i.i.d. N(0, 1/D_out)
//! entries drawn once from the seed; responses are unchanged.
template <typename S>
Dataset<S> random_projection(const Dataset<S>& dataset, Index d_out, std::uint64_t seed) {
  const Index d_in = dataset.feature_dim();
  if (d_out < 1 || d_out > d_in) {
    throw precondition_error("random_projection: need 1 <= D_out <= D_in");
  }
  Rng<S> rng(seed);
  MatrixX<S> r(d_out, d_in);
  const S scale = S(1) / std::sqrt(static_cast<S>(d_out));
  for (Index i = 0; i < d_out; ++i) {
    for (Index j = 0; j < d_in; ++j) r(i, j) = scale * rng.normal();
  }
  return Dataset<S>((dataset.features() * r.transpose()).eval(), dataset.responses());
}

}  // namespace sgmcmc
