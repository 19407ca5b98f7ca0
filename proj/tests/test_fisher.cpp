#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sgmcmc/fisher.hpp"
#include "sgmcmc/model.hpp"
#include "sgmcmc/samplers.hpp"
#include "sgmcmc/synthetic.hpp"

using namespace sgmcmc;

TEST_CASE("empirical_fisher") {
  SUBCASE("identical scores give the zero matrix") {
    MatrixX<double> scores(4, 3);
    scores.rowwise() = Eigen::RowVector3d(1.0, -2.0, 0.5);
    CHECK(empirical_fisher(scores).norm() == 0.0);
  }
  SUBCASE("two-point variance in one dimension") {
    MatrixX<double> scores(2, 1);
    scores << 1.0, -1.0;
    CHECK(empirical_fisher(scores)(0, 0) == doctest::Approx(2.0));
  }
  SUBCASE("matches the brute-force two-pass oracle") {
    Rng<double> rng(3);
    MatrixX<double> scores(5, 3);
    for (Index i = 0; i < scores.size(); ++i) scores.data()[i] = 10.0 * rng.normal();
    const MatrixX<double> expected = oracles::brute_force_covariance(scores);
    CHECK((empirical_fisher(scores) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("n < 2 is an error") {
    MatrixX<double> one(1, 3);
    one << 1.0, 2.0, 3.0;
    CHECK_THROWS_AS(empirical_fisher(one), precondition_error);
  }
  SUBCASE("result is symmetric PSD with rank <= n-1") {
    Rng<double> rng(4);
    MatrixX<double> scores(3, 5);
    for (Index i = 0; i < scores.size(); ++i) scores.data()[i] = rng.normal();
    const MatrixX<double> v = empirical_fisher(scores);
    CHECK((v - v.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::SelfAdjointEigenSolver<MatrixX<double>> eig(v);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
    Index rank = 0;
    for (Index i = 0; i < 5; ++i) rank += eig.eigenvalues()(i) > 1e-10;
    CHECK(rank <= 2);
  }
}

TEST_CASE("diagonal_empirical_fisher") {
  SUBCASE("identical scores give the zero vector") {
    MatrixX<double> scores(3, 2);
    scores.rowwise() = Eigen::RowVector2d(0.3, 0.4);
    CHECK(diagonal_empirical_fisher(scores).norm() == 0.0);
  }
  SUBCASE("per-coordinate variances") {
    MatrixX<double> scores(2, 2);
    scores << 1.0, 0.0, -1.0, 0.0;
    const VectorX<double> d = diagonal_empirical_fisher(scores);
    CHECK(d(0) == doctest::Approx(2.0));
    CHECK(d(1) == doctest::Approx(0.0));
  }
  SUBCASE("equals the diagonal of the full matrix") {
    Rng<double> rng(7);
    MatrixX<double> scores(6, 4);
    for (Index i = 0; i < scores.size(); ++i) scores.data()[i] = rng.normal();
    const VectorX<double> d = diagonal_empirical_fisher(scores);
    const VectorX<double> full_diag = empirical_fisher(scores).diagonal();
    CHECK((d - full_diag).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("online_update") {
  SUBCASE("first update overwrites the initialization (kappa_1 = 1)") {
    auto est = FisherEstimate<double>::identity(2, FisherForm::full);
    MatrixX<double> v(2, 2);
    v << 4.0, 1.0, 1.0, 3.0;
    online_update(est, v, KappaSchedule{});
    CHECK((est.full - v).norm() == 0.0);
    CHECK(est.t == 1);
  }
  SUBCASE("kappa = 0 leaves the estimate unchanged") {
    auto est = FisherEstimate<double>::identity(2, FisherForm::full);
    MatrixX<double> v = MatrixX<double>::Constant(2, 2, 9.0);
    online_update_with(est, v, 0.0);
    CHECK((est.full - MatrixX<double>::Identity(2, 2)).norm() == 0.0);
    CHECK(est.t == 1);
  }
  SUBCASE("kappa_t = 1/t reproduces the running mean of 10 random matrices") {
    Rng<double> rng(13);
    auto est = FisherEstimate<double>::identity(3, FisherForm::full);
    MatrixX<double> mean = MatrixX<double>::Zero(3, 3);
    const KappaSchedule kappa{};
    for (int k = 0; k < 10; ++k) {
      MatrixX<double> v(3, 3);
      for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
      v = ((v + v.transpose()) / 2).eval();
      mean += v;
      online_update(est, v, kappa);
    }
    mean /= 10.0;
    CHECK((est.full - mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(est.t == 10);
  }
  SUBCASE("form mismatch is an error") {
    auto est = FisherEstimate<double>::identity(2, FisherForm::diagonal);
    CHECK_THROWS_AS(online_update(est, MatrixX<double>::Identity(2, 2).eval(), KappaSchedule{}),
                    dimension_error);
  }
  SUBCASE("diagonal running mean") {
    Rng<double> rng(14);
    auto est = FisherEstimate<double>::identity(4, FisherForm::diagonal);
    VectorX<double> mean = VectorX<double>::Zero(4);
    for (int k = 0; k < 10; ++k) {
      const VectorX<double> v = rng.normal_vector(4).cwiseAbs();
      mean += v;
      online_update(est, v, KappaSchedule{});
    }
    mean /= 10.0;
    CHECK((est.diag - mean).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("regularized") {
  SUBCASE("jitter = 0 is the identity transformation") {
    auto est = FisherEstimate<double>::identity(3, FisherForm::full);
    est.full(0, 1) = est.full(1, 0) = 0.5;
    const auto reg = regularized(est, 0.0);
    CHECK((reg.full - est.full).norm() == 0.0);
  }
  SUBCASE("zero matrix with jitter becomes jitter * identity") {
    FisherEstimate<double> est;
    est.form = FisherForm::full;
    est.full = MatrixX<double>::Zero(2, 2);
    const auto reg = regularized(est, 1e-6);
    CHECK(oracles::relative_error(reg.full, (1e-6 * MatrixX<double>::Identity(2, 2)).eval()) <
          1e-12);
  }
  SUBCASE("rank-1 estimate becomes factorizable after jitter") {
    // n = 2 scores give a rank-1 V; the SGFS preconditioner
    // gammaN*Ihat + 4B/eps must still factorize after regularization
    Rng<double> rng(21);
    MatrixX<double> scores(2, 4);
    for (Index i = 0; i < scores.size(); ++i) scores.data()[i] = rng.normal();
    FisherEstimate<double> est;
    est.form = FisherForm::full;
    est.full = empirical_fisher(scores);
    est.t = 1;

    const auto reg = regularized(est, 1e-8);
    const double gamma_n = sgfs_gamma(1000, 2) * 1000.0;
    const double alpha = 1.0;  // eps = 4, 4B/eps = alpha^2 B
    const MatrixX<double> b = gamma_n * reg.full;
    const MatrixX<double> precond = gamma_n * reg.full + alpha * alpha * b;
    Eigen::LLT<MatrixX<double>> llt(precond);
    CHECK(llt.info() == Eigen::Success);
  }
  SUBCASE("diagonal form clamps entries at the jitter") {
    FisherEstimate<double> est;
    est.form = FisherForm::diagonal;
    est.diag = VectorX<double>::Zero(3);
    est.diag(1) = 5.0;
    const auto reg = regularized(est, 1e-4);
    CHECK(reg.diag(0) == 1e-4);
    CHECK(reg.diag(1) == 5.0);
    CHECK(reg.diag(2) == 1e-4);
  }
}

TEST_CASE("unbiasedness at fixed theta over many minibatches") {
  // average of empirical_fisher over independent minibatches approaches the
  // dataset-level score covariance
  auto synth = generate_synthetic<double>(SyntheticKind::linear, 1000, 3, 41, 1.0);
  LinearRegressionModel<double> model(synth.data, GaussianPrior<double>(1.0), 1.0);
  Rng<double> rng(42);
  const VectorX<double> theta = synth.theta0;

  std::vector<Index> all(1000);
  for (Index i = 0; i < 1000; ++i) all[static_cast<std::size_t>(i)] = i;
  MatrixX<double> all_scores;
  model.scores(theta, all, all_scores);
  const MatrixX<double> population = oracles::brute_force_covariance(all_scores);

  MatrixX<double> sum = MatrixX<double>::Zero(3, 3);
  std::vector<Index> batch;
  MatrixX<double> scores;
  const int trials = 10000;
  for (int k = 0; k < trials; ++k) {
    draw_minibatch(rng, 1000, 50, MinibatchPolicy::without_replacement, batch);
    model.scores(theta, batch, scores);
    sum += empirical_fisher(scores);
  }
  const MatrixX<double> averaged = sum / static_cast<double>(trials);
  CHECK(oracles::relative_error(averaged, population) < 0.05);
}

TEST_CASE("posterior-averaged empirical Fisher converges to I(theta_0)") {
  // draw theta_t exactly from the conjugate posterior and average the
  // minibatch covariance V across iterations; the average lands on the
  // data-conditional Fisher information (1/sigma2)(1/N) X'X
  const Index data_n = 10000;
  const Index batch_n = 100;
  const Index dim = 5;
  auto synth = generate_synthetic<double>(SyntheticKind::linear, data_n, dim, 51, 1.0);
  LinearRegressionModel<double> model(synth.data, GaussianPrior<double>(1.0), 1.0);
  const auto post = exact_posterior(model);
  const MatrixX<double> chol = cholesky_lower(post.covariance);

  const MatrixX<double> fisher_truth =
      (model.dataset().features().transpose() * model.dataset().features()) /
      (1.0 * static_cast<double>(data_n));

  Rng<double> rng(52);
  MatrixX<double> v_sum = MatrixX<double>::Zero(dim, dim);
  std::vector<Index> batch;
  MatrixX<double> scores;
  const int iterations = 10000;
  for (int t = 0; t < iterations; ++t) {
    const VectorX<double> theta = sample_gaussian(post.mean, chol, rng);
    draw_minibatch(rng, data_n, batch_n, MinibatchPolicy::without_replacement, batch);
    model.scores(theta, batch, scores);
    v_sum += empirical_fisher(scores);
  }
  const MatrixX<double> v_bar = v_sum / static_cast<double>(iterations);
  CHECK((v_bar - fisher_truth).norm() / fisher_truth.norm() <= 0.1);
}

TEST_CASE("symmetry and PSD are preserved by updates") {
  Rng<double> rng(61);
  auto est = FisherEstimate<double>::identity(4, FisherForm::full);
  MatrixX<double> scores(6, 4);
  for (int k = 0; k < 50; ++k) {
    for (Index i = 0; i < scores.size(); ++i) scores.data()[i] = rng.normal();
    online_update(est, empirical_fisher(scores), KappaSchedule{});
    CHECK((est.full - est.full.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::SelfAdjointEigenSolver<MatrixX<double>> eig(est.full);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("kappa schedule validates and exposes kappa_1 = 1") {
  const KappaSchedule k{0.7};
  CHECK(k(1) == doctest::Approx(1.0));
  CHECK(k(8) == doctest::Approx(std::pow(8.0, -0.7)));
  CHECK_THROWS_AS(k(0), precondition_error);
}

TEST_CASE("fisher kernels also instantiate for float") {
  MatrixX<float> scores(3, 2);
  scores << 1.f, 0.f, -1.f, 2.f, 0.f, 1.f;
  const MatrixX<float> v = empirical_fisher(scores);
  CHECK(v(0, 0) == doctest::Approx(1.0f));
  auto est = FisherEstimate<float>::identity(2, FisherForm::full);
  online_update(est, v, KappaSchedule{});
  CHECK(est.t == 1);
}
