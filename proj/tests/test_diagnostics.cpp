#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sgmcmc/diagnostics.hpp"

using namespace sgmcmc;

TEST_CASE("running_moments") {
  SUBCASE("identical samples have zero covariance") {
    MatrixX<double> samples(5, 2);
    samples.rowwise() = Eigen::RowVector2d(1.5, -0.5);
    const auto m = running_moments(samples, 5);
    CHECK(m.covariance.norm() == 0.0);
    CHECK((m.mean - Eigen::Vector2d(1.5, -0.5)).norm() == 0.0);
  }
  SUBCASE("two scalar samples use the population divisor") {
    MatrixX<double> samples(2, 1);
    samples << 0.0, 2.0;
    const auto m = running_moments(samples, 2);
    CHECK(m.mean(0) == doctest::Approx(1.0));
    CHECK(m.covariance(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("matches the brute-force double loop") {
    Rng<double> rng(31);
    MatrixX<double> samples(200, 3);
    for (Index i = 0; i < samples.size(); ++i) samples.data()[i] = rng.normal() * 2.0 + 0.3;
    const auto m = running_moments(samples, 200);
    const auto [mean, cov] = oracles::brute_force_population_moments(samples, 200);
    CHECK((m.mean - mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((m.covariance - cov).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("upto < 2 is an error") {
    MatrixX<double> samples(5, 2);
    samples.setZero();
    CHECK_THROWS_AS(running_moments(samples, 1), precondition_error);
  }
  SUBCASE("merge law: concatenation equals count-weighted merge") {
    Rng<double> rng(32);
    MatrixX<double> a(40, 3), b(25, 3);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal() + 1.0;

    RunningMoments<double> ra(3), rb(3), rc(3);
    for (Index i = 0; i < a.rows(); ++i) ra.update(a.row(i).transpose());
    for (Index i = 0; i < b.rows(); ++i) rb.update(b.row(i).transpose());
    for (Index i = 0; i < a.rows(); ++i) rc.update(a.row(i).transpose());
    for (Index i = 0; i < b.rows(); ++i) rc.update(b.row(i).transpose());
    ra.merge(rb);
    CHECK(ra.count() == rc.count());
    CHECK((ra.mean() - rc.mean()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((ra.covariance() - rc.covariance()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("relative_errors") {
  Rng<double> rng(33);
  MomentSummary<double> ref;
  ref.mean = rng.normal_vector(4).cwiseAbs() + VectorX<double>::Constant(4, 0.1);
  ref.covariance = oracles::random_spd(rng, 4);
  ref.count = 100;

  SUBCASE("identical summaries give (0, 0)") {
    const auto [e1, e2] = relative_errors(ref, ref);
    CHECK(e1 == 0.0);
    CHECK(e2 == 0.0);
  }
  SUBCASE("doubling the mean gives E1 = 1 when signs agree") {
    MomentSummary<double> est = ref;
    est.mean = 2.0 * ref.mean;
    const auto [e1, e2] = relative_errors(est, ref);
    CHECK(e1 == doctest::Approx(1.0));
    CHECK(e2 == 0.0);
  }
  SUBCASE("matches the direct-formula oracle") {
    MomentSummary<double> est;
    est.mean = ref.mean + rng.normal_vector(4);
    est.covariance = ref.covariance + oracles::random_spd(rng, 4, 0.01, 0.5);
    est.count = 100;
    const auto [e1, e2] = relative_errors(est, ref);
    const auto [o1, o2] =
        oracles::direct_relative_errors(est.mean, est.covariance, ref.mean, ref.covariance);
    CHECK(e1 == doctest::Approx(o1).epsilon(1e-12));
    CHECK(e2 == doctest::Approx(o2).epsilon(1e-12));
  }
  SUBCASE("zero reference denominator is an error") {
    MomentSummary<double> zero_ref = ref;
    zero_ref.mean.setZero();
    CHECK_THROWS_AS(relative_errors(ref, zero_ref), reference_error);
  }
  SUBCASE("scaling both summaries leaves the errors unchanged") {
    MomentSummary<double> est;
    est.mean = ref.mean + rng.normal_vector(4);
    est.covariance = ref.covariance + oracles::random_spd(rng, 4, 0.01, 0.5);
    const auto [e1, e2] = relative_errors(est, ref);
    MomentSummary<double> est_scaled = est, ref_scaled = ref;
    est_scaled.mean *= 7.0;
    est_scaled.covariance *= 7.0;
    ref_scaled.mean *= 7.0;
    ref_scaled.covariance *= 7.0;
    const auto [s1, s2] = relative_errors(est_scaled, ref_scaled);
    CHECK(s1 == doctest::Approx(e1).epsilon(1e-12));
    CHECK(s2 == doctest::Approx(e2).epsilon(1e-12));
  }
}

TEST_CASE("autocorrelation") {
  SUBCASE("lag 0 is exactly 1") {
    const VectorX<double> x = oracles::ar1_series(0.3, 500, 71);
    CHECK(autocorrelation(x, 0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("alternating series approaches -1 at lag 1") {
    VectorX<double> x(10000);
    for (Index i = 0; i < x.size(); ++i) x(i) = i % 2 == 0 ? 1.0 : -1.0;
    CHECK(autocorrelation(x, 1) == doctest::Approx(-1.0).epsilon(1e-3));
  }
  SUBCASE("AR(1) lag-1 autocorrelation is the coefficient") {
    const VectorX<double> x = oracles::ar1_series(0.9, 100000, 72);
    CHECK(std::abs(autocorrelation(x, 1) - 0.9) < 0.02);
  }
  SUBCASE("constant series is an error") {
    const VectorX<double> x = VectorX<double>::Constant(100, 3.0);
    CHECK_THROWS_AS(autocorrelation(x, 1), zero_variance_error);
  }
  SUBCASE("lag out of range is an error") {
    const VectorX<double> x = oracles::ar1_series(0.3, 50, 73);
    CHECK_THROWS_AS(autocorrelation(x, 50), precondition_error);
    CHECK_THROWS_AS(autocorrelation(x, -1), precondition_error);
  }
}

TEST_CASE("autocorrelation_time") {
  SUBCASE("white noise is close to 1") {
    Rng<double> rng(74);
    VectorX<double> x(100000);
    for (Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    CHECK(std::abs(autocorrelation_time(x) - 1.0) <= 0.1);
  }
  SUBCASE("AR(1) matches the closed form (1+phi)/(1-phi)") {
    const VectorX<double> x5 = oracles::ar1_series(0.5, 100000, 75);
    CHECK(std::abs(autocorrelation_time(x5) - 3.0) <= 0.45);
    const VectorX<double> x9 = oracles::ar1_series(0.9, 100000, 76);
    CHECK(std::abs(autocorrelation_time(x9) - 19.0) <= 3.0);
  }
  SUBCASE("affine transformations leave the ACT unchanged") {
    const VectorX<double> x = oracles::ar1_series(0.6, 20000, 77);
    const VectorX<double> y = (-2.5 * x.array() + 7.0).matrix();
    CHECK(autocorrelation_time(x) == doctest::Approx(autocorrelation_time(y)).epsilon(1e-10));
  }
  SUBCASE("alternating series clamps at the floor") {
    VectorX<double> x(1000);
    for (Index i = 0; i < x.size(); ++i) x(i) = i % 2 == 0 ? 1.0 : -1.0;
    CHECK(autocorrelation_time(x) >= 1e-3);
  }
}

TEST_CASE("atuc") {
  const VectorX<double> x = oracles::ar1_series(0.5, 50000, 78);
  SUBCASE("is the product of ACT and time per sample") {
    CHECK(atuc(x, 2.0) == doctest::Approx(2.0 * autocorrelation_time(x)));
  }
  SUBCASE("white noise at 1 ms per sample is about 1 ms") {
    Rng<double> rng(79);
    VectorX<double> w(100000);
    for (Index i = 0; i < w.size(); ++i) w(i) = rng.normal();
    CHECK(atuc(w, 1e-3) == doctest::Approx(1e-3).epsilon(0.1));
  }
  SUBCASE("non-positive time per sample is an error") {
    CHECK_THROWS_AS(atuc(x, 0.0), precondition_error);
  }
}

TEST_CASE("trace-level diagnostics") {
  Trace<double> trace;
  trace.samples.resize(5000, 2);
  trace.samples.col(0) = oracles::ar1_series(0.5, 5000, 81);
  trace.samples.col(1) = oracles::ar1_series(0.5, 5000, 82);
  trace.seconds.resize(5000);
  for (std::size_t i = 0; i < trace.seconds.size(); ++i) {
    trace.seconds[i] = 1e-4 * static_cast<double>(i + 1);
  }
  const double mean_act = mean_autocorrelation_time(trace);
  CHECK(std::abs(mean_act - 3.0) < 1.0);
  CHECK(atuc(trace) == doctest::Approx(mean_act * trace.time_per_sample()));
  CHECK(trace.time_per_sample() == doctest::Approx(1e-4));
}
