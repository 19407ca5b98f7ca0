#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "sgmcmc/fisher.hpp"
#include "sgmcmc/model.hpp"
#include "sgmcmc/rng.hpp"
#include "sgmcmc/trace.hpp"
#include "sgmcmc/types.hpp"

namespace sgmcmc {

enum class SamplerKind { sgfs_full, sgfs_diag, sgld, sgd, hmc };

inline std::string kind_label(SamplerKind k) {
  switch (k) {
    case SamplerKind::sgfs_full: return "sgfs-f";
    case SamplerKind::sgfs_diag: return "sgfs-d";
    case SamplerKind::sgld: return "sgld";
    case SamplerKind::sgd: return "sgd";
    case SamplerKind::hmc: return "hmc";
  }
  return "unknown";
}

enum class MinibatchPolicy { without_replacement, with_replacement };

//! Polynomial step-size annealing: eps_t = a (b + t)^{-delta}.
template <typename S>
struct ScheduleConfig {
  S a = S(1);
  S b = S(1);
  S delta = S(0.5);

  void validate() const {
    if (!(a > S(0)) || !(b > S(0))) throw config_error("ScheduleConfig: a and b must be positive");
    if (delta < S(0) || delta > S(3)) throw config_error("ScheduleConfig: delta must be in [0, 3]");
  }

  S at(std::int64_t t) const { return a * std::pow(b + static_cast<S>(t), -delta); }
};

//! Choice of the free symmetric positive-definite matrix B.
template <typename S>
struct BSpec {
  enum class Kind { scaled_identity, gamma_fisher, explicit_matrix };

  Kind kind = Kind::gamma_fisher;
  S scale = S(1);     // scaled_identity: B = scale * I
  MatrixX<S> matrix;  // explicit_matrix (diagonal chains use its diagonal)

  static BSpec scaled_identity(S b) {
    if (!(b > S(0))) throw config_error("BSpec: identity scale must be positive");
    BSpec s;
    s.kind = Kind::scaled_identity;
    s.scale = b;
    return s;
  }
  //! B tracks gamma * N * Ihat_t, the running estimate of gamma * I_N.
  static BSpec gamma_fisher() { return BSpec{}; }
  static BSpec explicit_matrix(MatrixX<S> m) {
    BSpec s;
    s.kind = Kind::explicit_matrix;
    s.matrix = std::move(m);
    return s;
  }
};

//! Stochastic Gradient Fisher Scoring configuration.
//!
//! `alpha` parameterizes the step size as eps = (2/alpha)^2; alpha == 0
//! means no injected noise at all (the 4B/eps term vanishes).  When
//! `epsilon_schedule` is set the chain runs in anytime mode with
//! eps_t = a(b+t)^{-delta} and alpha is ignored.
template <typename S>
struct SgfsConfig {
  Index minibatch = 100;
  S alpha = S(0);
  BSpec<S> b_spec;
  FisherForm form = FisherForm::full;
  S jitter_scale = S(1e-8);
  std::optional<std::int64_t> freeze_after;
  std::optional<ScheduleConfig<S>> epsilon_schedule;
  KappaSchedule kappa;
  MinibatchPolicy policy = MinibatchPolicy::without_replacement;
};

template <typename S>
struct SgldConfig {
  Index minibatch = 100;
  S epsilon = S(1e-5);
  std::optional<MatrixX<S>> preconditioner;  // default: identity
  std::optional<ScheduleConfig<S>> epsilon_schedule;
  MinibatchPolicy policy = MinibatchPolicy::without_replacement;
};

template <typename S>
struct SgdConfig {
  Index minibatch = 100;
  ScheduleConfig<S> schedule;
  MinibatchPolicy policy = MinibatchPolicy::without_replacement;
};

template <typename S>
struct HmcConfig {
  int leapfrog_steps = 10;
  S step_size = S(0.1);
  S target_accept = S(0.8);
  std::int64_t adapt_iterations = -1;  // negative: adapt through burn-in

  void validate() const {
    if (leapfrog_steps < 0) throw config_error("HmcConfig: leapfrog_steps must be >= 0");
    if (!(step_size > S(0))) throw config_error("HmcConfig: step_size must be positive");
    if (!(target_accept > S(0)) || !(target_accept < S(1))) {
      throw config_error("HmcConfig: target_accept must be in (0,1)");
    }
  }
};

//! Mutable per-chain state shared by every sampler.
template <typename S>
struct ChainState {
  VectorX<S> theta;
  FisherEstimate<S> fisher;
  std::int64_t t = 0;
  Rng<S> rng;
  double wall_time = 0.0;

  static ChainState start(VectorX<S> theta0, FisherForm form, std::uint64_t seed) {
    ChainState s;
    s.fisher = FisherEstimate<S>::identity(theta0.size(), form);
    s.theta = std::move(theta0);
    s.rng.reseed(seed);
    return s;
  }
};

inline double sgfs_gamma(Index data_size, Index minibatch) {
  return static_cast<double>(data_size + minibatch) / static_cast<double>(minibatch);
}

//! Uniform minibatch of `n` indices from [0, data_size).  Without
//! replacement uses Floyd's algorithm (n distinct indices, no persistent
//! pool, so chain state stays checkpointable).
template <typename S>
void draw_minibatch(Rng<S>& rng, Index data_size, Index n, MinibatchPolicy policy,
                    std::vector<Index>& out) {
  if (n < 1 || n > data_size) throw precondition_error("draw_minibatch: need 1 <= n <= N");
  out.clear();
  out.reserve(static_cast<std::size_t>(n));
  if (policy == MinibatchPolicy::with_replacement) {
    for (Index k = 0; k < n; ++k) out.push_back(rng.uniform_index(data_size));
    return;
  }
  std::unordered_set<Index> seen;
  seen.reserve(static_cast<std::size_t>(2 * n));
  for (Index j = data_size - n; j < data_size; ++j) {
    const Index pick = rng.uniform_index(j + 1);
    if (seen.insert(pick).second) {
      out.push_back(pick);
    } else {
      seen.insert(j);
      out.push_back(j);
    }
  }
}

// ---------------------------------------------------------------------------
// Deterministic update maps.  The samplers below draw their noise and then
// delegate here; tests can call these directly with the noise forced.
// ---------------------------------------------------------------------------

//! theta + 2 P^{-1} v with P symmetric positive definite (solved via
//! Cholesky, never by forming the inverse).
template <typename S>
VectorX<S> sgfs_apply(const VectorX<S>& theta, const MatrixX<S>& preconditioner,
                      const VectorX<S>& v) {
  Eigen::LLT<MatrixX<S>> llt(preconditioner);
  if (llt.info() != Eigen::Success) {
    throw conditioning_error("sgfs_apply: preconditioner not positive definite (raise jitter?)");
  }
  return (theta + S(2) * llt.solve(v)).eval();
}

//! Diagonal-form variant: theta + 2 v / p elementwise.
template <typename S>
VectorX<S> sgfs_apply(const VectorX<S>& theta, const VectorX<S>& preconditioner_diag,
                      const VectorX<S>& v) {
  if ((preconditioner_diag.array() <= S(0)).any()) {
    throw conditioning_error("sgfs_apply: diagonal preconditioner has non-positive entries");
  }
  return (theta + S(2) * (v.array() / preconditioner_diag.array()).matrix()).eval();
}

//! One SGLD update with explicit noise: theta + (eps C / 2) g + nu.
template <typename S>
VectorX<S> sgld_apply(const VectorX<S>& theta, S eps, const VectorX<S>& total_grad,
                      const VectorX<S>& noise) {
  return (theta + (eps / S(2)) * total_grad + noise).eval();
}

template <typename S>
VectorX<S> sgld_apply(const VectorX<S>& theta, S eps, const MatrixX<S>& preconditioner,
                      const VectorX<S>& total_grad, const VectorX<S>& noise) {
  return (theta + (eps / S(2)) * (preconditioner * total_grad) + noise).eval();
}

// ---------------------------------------------------------------------------
// Exact Gaussian chain (test fixture for the large-step regime)
// ---------------------------------------------------------------------------

//! One-step moment map of the exact Gaussian chain:
//!   mu'    = (I - eps C I_N / 2) mu + (eps C / 2) I_N theta_0
//!   Sigma' = (I - eps C I_N / 2) Sigma (.)^T + eps C - (eps^2/4) C I_N C
template <typename S>
std::pair<VectorX<S>, MatrixX<S>> gaussian_chain_moments(const VectorX<S>& mu,
                                                         const MatrixX<S>& sigma,
                                                         const GaussianPosterior<S>& target, S eps,
                                                         const MatrixX<S>& c) {
  const Index d = mu.size();
  const MatrixX<S> i_n = target.precision();
  const MatrixX<S> a = MatrixX<S>::Identity(d, d) - (eps / S(2)) * (c * i_n);
  VectorX<S> mu_next = a * mu + (eps / S(2)) * (c * (i_n * target.mean));
  MatrixX<S> sigma_next = a * sigma * a.transpose() + eps * c - (eps * eps / S(4)) * (c * i_n * c);
  return {std::move(mu_next), symmetrized(sigma_next)};
}

//! Noise covariance of the exact Gaussian chain; must be positive definite
//! for the step size to be admissible with this preconditioner.
template <typename S>
MatrixX<S> gaussian_chain_noise_covariance(const GaussianPosterior<S>& target, S eps,
                                           const MatrixX<S>& c) {
  const MatrixX<S> i_n = target.precision();
  return symmetrized<S>((eps * c - (eps * eps / S(4)) * (c * i_n * c)).eval());
}

//! Single step of the chain that samples N(theta_0, I_N^{-1}) exactly at
//! any admissible step size.
template <typename S>
VectorX<S> gaussian_chain_step(const VectorX<S>& theta, const GaussianPosterior<S>& target, S eps,
                               const MatrixX<S>& c, Rng<S>& rng) {
  const MatrixX<S> i_n = target.precision();
  const MatrixX<S> q = gaussian_chain_noise_covariance(target, eps, c);
  Eigen::LLT<MatrixX<S>> llt(q);
  if (llt.info() != Eigen::Success) {
    throw conditioning_error("gaussian_chain_step: noise covariance not positive definite (eps too large for this C)");
  }
  const VectorX<S> drift = (eps / S(2)) * (c * (-(i_n * (theta - target.mean))));
  const VectorX<S> omega = MatrixX<S>(llt.matrixL()) * rng.normal_vector(theta.size());
  return (theta + drift + omega).eval();
}

// ---------------------------------------------------------------------------
// Hamiltonian Monte Carlo
// ---------------------------------------------------------------------------

//! Adapter exposing the full-data log posterior to HMC.
template <typename S>
struct PosteriorTarget {
  const Model<S>* model = nullptr;

  S log_density(const VectorX<S>& theta) const { return log_unnormalized_posterior(*model, theta); }
  VectorX<S> gradient(const VectorX<S>& theta) const { return log_posterior_gradient(*model, theta); }
};

//! Gaussian test target with known mean and precision.
template <typename S>
struct GaussianTarget {
  VectorX<S> mean;
  MatrixX<S> precision;

  S log_density(const VectorX<S>& theta) const {
    const VectorX<S> d = theta - mean;
    return S(-0.5) * d.dot(precision * d);
  }
  VectorX<S> gradient(const VectorX<S>& theta) const { return (-(precision * (theta - mean))).eval(); }
};

template <typename S>
struct HmcStepResult {
  bool accepted = false;
  S accept_prob = S(0);
};

//! One HMC proposal: momentum ~ N(0, I), `leapfrog_steps` leapfrog steps of
//! size `step_size`, Metropolis accept on the Hamiltonian difference.  A
//! non-finite Hamiltonian rejects rather than throwing.
template <typename S, typename Target>
HmcStepResult<S> hmc_step(VectorX<S>& theta, const Target& target, int leapfrog_steps, S step_size,
                          Rng<S>& rng) {
  VectorX<S> p = rng.normal_vector(theta.size());
  const S h0 = -target.log_density(theta) + S(0.5) * p.squaredNorm();

  VectorX<S> q = theta;
  if (leapfrog_steps > 0) {
    p += (step_size / S(2)) * target.gradient(q);
    for (int l = 0; l < leapfrog_steps; ++l) {
      q += step_size * p;
      if (l + 1 < leapfrog_steps) p += step_size * target.gradient(q);
    }
    p += (step_size / S(2)) * target.gradient(q);
  }

  const S h1 = -target.log_density(q) + S(0.5) * p.squaredNorm();
  S accept_prob;
  if (!std::isfinite(h1) || !all_finite(q)) {
    accept_prob = S(0);
  } else if (!std::isfinite(h0) || h0 - h1 >= S(0)) {
    accept_prob = S(1);
  } else {
    accept_prob = std::exp(h0 - h1);
  }
  const bool accepted = rng.uniform() < accept_prob;
  if (accepted) theta = q;
  return {accepted, accept_prob};
}

// ---------------------------------------------------------------------------
// Chain steppers
// ---------------------------------------------------------------------------

//! Algorithm: per iteration, draw a minibatch, compute the mean score and
//! the empirical Fisher V from the same batch, fold V into the online
//! average, then advance
//!   theta <- theta + 2 (gamma N Ihat + (4/eps) B)^{-1}
//!                      { grad log prior + N gbar + eta },
//! eta ~ N(0, (4/eps) B), with 4/eps = alpha^2.  alpha == 0 drops the
//! injected-noise term entirely.
template <typename S>
class SgfsSampler {
 public:
  SgfsSampler(const Model<S>& model, SgfsConfig<S> cfg)
      : model_(&model), cfg_(std::move(cfg)) {
    if (cfg_.minibatch < 2) throw config_error("SgfsSampler: minibatch must be >= 2");
    if (cfg_.minibatch > model.data_size()) throw config_error("SgfsSampler: minibatch exceeds N");
    if (cfg_.alpha < S(0)) throw config_error("SgfsSampler: alpha must be >= 0");
    if (cfg_.epsilon_schedule) cfg_.epsilon_schedule->validate();
    if (cfg_.b_spec.kind == BSpec<S>::Kind::explicit_matrix) {
      if (cfg_.b_spec.matrix.rows() != model.dim() || cfg_.b_spec.matrix.cols() != model.dim()) {
        throw config_error("SgfsSampler: explicit B has wrong shape");
      }
      if (cfg_.form == FisherForm::full) {
        explicit_b_chol_ = cholesky_lower(symmetrized<S>(cfg_.b_spec.matrix), "SgfsSampler B");
      }
    }
  }

  FisherForm fisher_form() const { return cfg_.form; }
  const SgfsConfig<S>& config() const { return cfg_; }

  void step(ChainState<S>& state) {
    const std::int64_t iter = state.t + 1;
    const Index n = cfg_.minibatch;
    const Index data_n = model_->data_size();
    const S big_n = static_cast<S>(data_n);
    const S gamma_n = static_cast<S>(sgfs_gamma(data_n, n)) * big_n;

    draw_minibatch(state.rng, data_n, n, cfg_.policy, batch_);
    model_->scores(state.theta, std::span<const Index>(batch_), scores_);
    const VectorX<S> gbar = scores_.colwise().mean().transpose();

    const bool frozen = cfg_.freeze_after && iter > *cfg_.freeze_after;
    if (!frozen) {
      if (cfg_.form == FisherForm::full) {
        online_update(state.fisher, empirical_fisher(scores_), cfg_.kappa);
      } else {
        online_update(state.fisher, diagonal_empirical_fisher(scores_), cfg_.kappa);
      }
    }

    // 4B/eps weight: alpha^2 for fixed alpha, 4/eps_t in anytime mode
    S noise_weight = cfg_.alpha * cfg_.alpha;
    if (cfg_.epsilon_schedule) noise_weight = S(4) / cfg_.epsilon_schedule->at(iter);

    const FisherEstimate<S> reg =
        regularized(state.fisher, default_jitter(state.fisher, cfg_.jitter_scale));

    VectorX<S> g = model_->grad_log_prior(state.theta) + big_n * gbar;
    VectorX<S> next;
    if (cfg_.form == FisherForm::full) {
      MatrixX<S> b;
      if (noise_weight > S(0)) {
        b = b_matrix(reg, gamma_n);
        g += std::sqrt(noise_weight) *
             (b_cholesky(b) * state.rng.normal_vector(model_->dim()));
      }
      MatrixX<S> precond = gamma_n * reg.full;
      if (noise_weight > S(0)) precond += noise_weight * b;
      next = sgfs_apply(state.theta, precond, g);
    } else {
      VectorX<S> b_diag;
      if (noise_weight > S(0)) {
        b_diag = b_diagonal(reg, gamma_n);
        g += ((noise_weight * b_diag).cwiseSqrt().array() *
              state.rng.normal_vector(model_->dim()).array())
                 .matrix();
      }
      VectorX<S> precond = gamma_n * reg.diag;
      if (noise_weight > S(0)) precond += noise_weight * b_diag;
      next = sgfs_apply(state.theta, precond, g);
    }

    if (!all_finite(next)) {
      throw divergence_error("sgfs step produced non-finite theta", iter);
    }
    state.theta = std::move(next);
    state.t = iter;
  }

 private:
  MatrixX<S> b_matrix(const FisherEstimate<S>& reg, S gamma_n) const {
    switch (cfg_.b_spec.kind) {
      case BSpec<S>::Kind::gamma_fisher: return (gamma_n * reg.full).eval();
      case BSpec<S>::Kind::scaled_identity:
        return (cfg_.b_spec.scale * MatrixX<S>::Identity(model_->dim(), model_->dim())).eval();
      case BSpec<S>::Kind::explicit_matrix: return cfg_.b_spec.matrix;
    }
    throw config_error("SgfsSampler: unknown B kind");
  }

  VectorX<S> b_diagonal(const FisherEstimate<S>& reg, S gamma_n) const {
    switch (cfg_.b_spec.kind) {
      case BSpec<S>::Kind::gamma_fisher: return (gamma_n * reg.diag).eval();
      case BSpec<S>::Kind::scaled_identity:
        return (cfg_.b_spec.scale * VectorX<S>::Ones(model_->dim())).eval();
      case BSpec<S>::Kind::explicit_matrix: return cfg_.b_spec.matrix.diagonal();
    }
    throw config_error("SgfsSampler: unknown B kind");
  }

  MatrixX<S> b_cholesky(const MatrixX<S>& b) const {
    if (cfg_.b_spec.kind == BSpec<S>::Kind::explicit_matrix) return explicit_b_chol_;
    return cholesky_lower(symmetrized<S>(b), "SgfsSampler B");
  }

  const Model<S>* model_;
  SgfsConfig<S> cfg_;
  MatrixX<S> explicit_b_chol_;
  std::vector<Index> batch_;
  MatrixX<S> scores_;
};

//! Preconditioned SGLD: theta <- theta + (eps C / 2)(grad log prior
//! + N gbar) + nu, nu ~ N(0, eps C).
template <typename S>
class SgldSampler {
 public:
  SgldSampler(const Model<S>& model, SgldConfig<S> cfg) : model_(&model), cfg_(std::move(cfg)) {
    if (cfg_.minibatch < 1 || cfg_.minibatch > model.data_size()) {
      throw config_error("SgldSampler: need 1 <= minibatch <= N");
    }
    if (!cfg_.epsilon_schedule && !(cfg_.epsilon > S(0))) {
      throw config_error("SgldSampler: epsilon must be positive");
    }
    if (cfg_.epsilon_schedule) cfg_.epsilon_schedule->validate();
    if (cfg_.preconditioner) {
      if (cfg_.preconditioner->rows() != model.dim() || cfg_.preconditioner->cols() != model.dim()) {
        throw config_error("SgldSampler: preconditioner has wrong shape");
      }
      chol_c_ = cholesky_lower(symmetrized<S>(*cfg_.preconditioner), "SgldSampler C");
    }
  }

  FisherForm fisher_form() const { return FisherForm::full; }

  void step(ChainState<S>& state) {
    const std::int64_t iter = state.t + 1;
    const S eps = cfg_.epsilon_schedule ? cfg_.epsilon_schedule->at(iter) : cfg_.epsilon;

    draw_minibatch(state.rng, model_->data_size(), cfg_.minibatch, cfg_.policy, batch_);
    const VectorX<S> gbar =
        minibatch_mean_score(*model_, state.theta, std::span<const Index>(batch_));
    const VectorX<S> g =
        model_->grad_log_prior(state.theta) + static_cast<S>(model_->data_size()) * gbar;

    const VectorX<S> z = state.rng.normal_vector(model_->dim());
    VectorX<S> next;
    if (cfg_.preconditioner) {
      const VectorX<S> nu = std::sqrt(eps) * (chol_c_ * z);
      next = sgld_apply(state.theta, eps, *cfg_.preconditioner, g, nu);
    } else {
      next = sgld_apply(state.theta, eps, g, (std::sqrt(eps) * z).eval());
    }

    if (!all_finite(next)) throw divergence_error("sgld step produced non-finite theta", iter);
    state.theta = std::move(next);
    state.t = iter;
  }

 private:
  const Model<S>* model_;
  SgldConfig<S> cfg_;
  MatrixX<S> chol_c_;
  std::vector<Index> batch_;
};

//! Stochastic gradient ascent on the log posterior with the polynomial
//! annealing schedule; no injected noise.
template <typename S>
class SgdSampler {
 public:
  SgdSampler(const Model<S>& model, SgdConfig<S> cfg) : model_(&model), cfg_(std::move(cfg)) {
    if (cfg_.minibatch < 1 || cfg_.minibatch > model.data_size()) {
      throw config_error("SgdSampler: need 1 <= minibatch <= N");
    }
    cfg_.schedule.validate();
  }

  FisherForm fisher_form() const { return FisherForm::full; }

  void step(ChainState<S>& state) {
    const std::int64_t iter = state.t + 1;
    const S eps = cfg_.schedule.at(iter);
    draw_minibatch(state.rng, model_->data_size(), cfg_.minibatch, cfg_.policy, batch_);
    const VectorX<S> gbar =
        minibatch_mean_score(*model_, state.theta, std::span<const Index>(batch_));
    VectorX<S> next = state.theta + eps * (model_->grad_log_prior(state.theta) +
                                           static_cast<S>(model_->data_size()) * gbar);
    if (!all_finite(next)) throw divergence_error("sgd step produced non-finite theta", iter);
    state.theta = std::move(next);
    state.t = iter;
  }

 private:
  const Model<S>* model_;
  SgdConfig<S> cfg_;
  std::vector<Index> batch_;
};

//! HMC over an arbitrary log-density target.  The step size is tuned
//! multiplicatively (Robbins-Monro on the acceptance statistic) during the
//! adaptation phase and frozen afterwards, preserving detailed balance for
//! the sampling phase.
template <typename S, typename Target>
class HmcSampler {
 public:
  HmcSampler(Target target, HmcConfig<S> cfg) : target_(std::move(target)), cfg_(std::move(cfg)) {
    cfg_.validate();
    log_step_ = std::log(cfg_.step_size);
  }

  FisherForm fisher_form() const { return FisherForm::full; }

  void step(ChainState<S>& state) {
    const std::int64_t iter = state.t + 1;
    const auto res =
        hmc_step(state.theta, target_, cfg_.leapfrog_steps, std::exp(log_step_), state.rng);
    if (iter <= cfg_.adapt_iterations) {
      const S gain = S(2) / std::pow(static_cast<S>(10 + iter), S(0.75));
      log_step_ += gain * (res.accept_prob - cfg_.target_accept);
    } else {
      ++proposals_;
      if (res.accepted) ++accepted_;
    }
    state.t = iter;
  }

  S current_step_size() const { return std::exp(log_step_); }
  void set_current_step_size(S s) { log_step_ = std::log(s); }
  double acceptance_rate() const {
    return proposals_ > 0 ? static_cast<double>(accepted_) / static_cast<double>(proposals_) : 0.0;
  }

 private:
  Target target_;
  HmcConfig<S> cfg_;
  S log_step_ = S(0);
  std::int64_t accepted_ = 0;
  std::int64_t proposals_ = 0;
};

//! Fixture stepper for the exact Gaussian chain.
template <typename S>
class GaussianChainSampler {
 public:
  GaussianChainSampler(GaussianPosterior<S> target, S eps, MatrixX<S> c)
      : target_(std::move(target)), eps_(eps), c_(std::move(c)) {
    const MatrixX<S> q = gaussian_chain_noise_covariance(target_, eps_, c_);
    chol_q_ = cholesky_lower(q, "GaussianChainSampler noise covariance");
    i_n_ = target_.precision();
  }

  FisherForm fisher_form() const { return FisherForm::full; }

  void step(ChainState<S>& state) {
    const VectorX<S> drift = (eps_ / S(2)) * (c_ * (-(i_n_ * (state.theta - target_.mean))));
    state.theta += drift + chol_q_ * state.rng.normal_vector(state.theta.size());
    state.t += 1;
  }

 private:
  GaussianPosterior<S> target_;
  S eps_;
  MatrixX<S> c_;
  MatrixX<S> i_n_;
  MatrixX<S> chol_q_;
};

// ---------------------------------------------------------------------------
// Chain driver
// ---------------------------------------------------------------------------

struct RunOptions {
  std::int64_t iterations = 0;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (burn_in < 0 || iterations < burn_in) {
      throw config_error("RunOptions: need iterations >= burn_in >= 0");
    }
    if (thin < 1) throw config_error("RunOptions: thin must be >= 1");
  }
};

//! Continues a chain from `state` through iteration `opt.iterations`,
//! recording every `thin`-th post-burn-in sample.  Timing covers compute
//! only (no trace I/O); step errors are annotated with the iteration.
template <typename S, typename Stepper>
Trace<S> run_chain_from(Stepper& stepper, ChainState<S>& state, const RunOptions& opt,
                        std::string label, std::string config_json) {
  opt.validate();
  using clock = std::chrono::steady_clock;

  Trace<S> trace;
  trace.sampler = std::move(label);
  trace.config_json = std::move(config_json);

  std::int64_t retained = 0;
  for (std::int64_t t = state.t + 1; t <= opt.iterations; ++t) {
    if (t > opt.burn_in && (t - opt.burn_in) % opt.thin == 0) ++retained;
  }
  trace.samples.resize(retained, state.theta.size());
  trace.iterations.reserve(static_cast<std::size_t>(retained));
  trace.seconds.reserve(static_cast<std::size_t>(retained));

  double post_burn_seconds = 0.0;
  Index row = 0;
  while (state.t < opt.iterations) {
    const std::int64_t t = state.t + 1;
    const auto begin = clock::now();
    try {
      stepper.step(state);
    } catch (const divergence_error&) {
      throw;
    } catch (const std::exception& e) {
      throw divergence_error(std::string("chain failed at iteration ") + std::to_string(t) + ": " +
                                 e.what(),
                             t);
    }
    const double elapsed = std::chrono::duration<double>(clock::now() - begin).count();
    state.wall_time += elapsed;
    if (t > opt.burn_in) post_burn_seconds += elapsed;
    if (t > opt.burn_in && (t - opt.burn_in) % opt.thin == 0) {
      trace.samples.row(row++) = state.theta.transpose();
      trace.iterations.push_back(t);
      trace.seconds.push_back(post_burn_seconds);
    }
  }
  return trace;
}

template <typename S, typename Stepper>
Trace<S> run_chain(Stepper& stepper, const VectorX<S>& theta0, const RunOptions& opt,
                   std::string label = "chain", std::string config_json = "{}") {
  ChainState<S> state = ChainState<S>::start(theta0, stepper.fisher_form(), opt.seed);
  return run_chain_from(stepper, state, opt, std::move(label), std::move(config_json));
}

//! Uniform handle over the sampler configurations the harness can run.
template <typename S>
using SamplerSpec = std::variant<SgfsConfig<S>, SgldConfig<S>, SgdConfig<S>, HmcConfig<S>>;

template <typename S>
SamplerKind kind_of(const SamplerSpec<S>& spec) {
  if (const auto* sgfs = std::get_if<SgfsConfig<S>>(&spec)) {
    return sgfs->form == FisherForm::full ? SamplerKind::sgfs_full : SamplerKind::sgfs_diag;
  }
  if (std::holds_alternative<SgldConfig<S>>(spec)) return SamplerKind::sgld;
  if (std::holds_alternative<SgdConfig<S>>(spec)) return SamplerKind::sgd;
  return SamplerKind::hmc;
}

//! Runs the configured sampler against the model.  HMC adapts through
//! burn-in when its adapt_iterations is negative.
template <typename S>
Trace<S> run_chain(const Model<S>& model, const SamplerSpec<S>& spec, const RunOptions& opt,
                   const VectorX<S>* theta0 = nullptr, std::string config_json = "{}") {
  const VectorX<S> start = theta0 ? *theta0 : VectorX<S>::Zero(model.dim()).eval();
  const std::string label = kind_label(kind_of(spec));
  return std::visit(
      [&](const auto& cfg) -> Trace<S> {
        using Cfg = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<Cfg, SgfsConfig<S>>) {
          SgfsSampler<S> sampler(model, cfg);
          return run_chain(sampler, start, opt, label, config_json);
        } else if constexpr (std::is_same_v<Cfg, SgldConfig<S>>) {
          SgldSampler<S> sampler(model, cfg);
          return run_chain(sampler, start, opt, label, config_json);
        } else if constexpr (std::is_same_v<Cfg, SgdConfig<S>>) {
          SgdSampler<S> sampler(model, cfg);
          return run_chain(sampler, start, opt, label, config_json);
        } else {
          HmcConfig<S> cfg_resolved = cfg;
          if (cfg_resolved.adapt_iterations < 0) cfg_resolved.adapt_iterations = opt.burn_in;
          HmcSampler<S, PosteriorTarget<S>> sampler(PosteriorTarget<S>{&model}, cfg_resolved);
          return run_chain(sampler, start, opt, label, config_json);
        }
      },
      spec);
}

}  // namespace sgmcmc
