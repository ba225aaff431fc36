#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "phsis/expm.hpp"
#include "phsis/phase_type.hpp"
#include "test_support.hpp"

using namespace phsis;
using phsis::testing::ks_critical_1pct;
using phsis::testing::ks_statistic;
using phsis::testing::random_phase_type;
using phsis::testing::simpson;

namespace {

// Taylor series with many terms on a small-norm matrix.
Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& A) {
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k < 60; ++k) {
    term = term * A / k;
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("expm matches closed forms and a Taylor oracle") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d.diagonal() << -1.0, 0.5, -30.0;
  const Eigen::MatrixXd ed = expm(d);
  CHECK(ed(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(ed(1, 1) == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
  CHECK(ed(2, 2) == doctest::Approx(std::exp(-30.0)).epsilon(1e-12));

  Eigen::MatrixXd rot(2, 2);
  rot << 0.0, -2.0, 2.0, 0.0;
  const Eigen::MatrixXd er = expm(rot);
  CHECK(er(0, 0) == doctest::Approx(std::cos(2.0)).epsilon(1e-13));
  CHECK(er(1, 0) == doctest::Approx(std::sin(2.0)).epsilon(1e-13));

  RandomStream rng(3);
  Eigen::MatrixXd a(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = rng.uniform() - 0.5;
  CHECK((expm(a) - expm_taylor(a)).cwiseAbs().maxCoeff() < 1e-13);
  // Large norm goes through the squaring phase.
  const Eigen::MatrixXd big = 20.0 * a;
  const Eigen::MatrixXd half = expm(big / 2.0);
  CHECK((expm(big) - half * half).norm() / (half * half).norm() < 1e-11);
}

TEST_CASE("make_phase_type builds and validates") {
  const PhaseType ex = PhaseType::make(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Constant(1, 1, -2.0));
  CHECK(ex.v()[0] == 2.0);

  Eigen::MatrixXd S(2, 2);
  S << -3.0, 3.0, 0.0, -3.0;
  const PhaseType er = PhaseType::make(Eigen::Vector2d(1.0, 0.0), S);
  CHECK(er.v()[0] == 0.0);
  CHECK(er.v()[1] == 3.0);

  SUBCASE("negative off-diagonal") {
    Eigen::MatrixXd bad(2, 2);
    bad << -1.0, -0.1, 0.0, -2.0;
    CHECK_THROWS_WITH_AS(PhaseType::make(Eigen::Vector2d(0.5, 0.5), bad), doctest::Contains("off-diagonal negative"),
                         InputError);
  }
  SUBCASE("positive row sum") {
    Eigen::MatrixXd bad(2, 2);
    bad << -1.0, 1.5, 0.0, -2.0;
    CHECK_THROWS_WITH_AS(PhaseType::make(Eigen::Vector2d(0.5, 0.5), bad), doctest::Contains("row sum"), InputError);
  }
  SUBCASE("no exit anywhere") {
    Eigen::MatrixXd bad(2, 2);
    bad << -1.0, 1.0, 1.0, -1.0;
    CHECK_THROWS_WITH_AS(PhaseType::make(Eigen::Vector2d(0.5, 0.5), bad), doctest::Contains("strictly negative"),
                         InputError);
  }
  SUBCASE("closed class without exit is singular") {
    // Phases 2 and 3 form a closed class; phase 1 exits.
    Eigen::MatrixXd bad(3, 3);
    bad << -2.0, 0.5, 0.5, 0.0, -1.0, 1.0, 0.0, 1.0, -1.0;
    CHECK_THROWS_AS(PhaseType::make(Eigen::Vector3d(1.0, 0.0, 0.0), bad), InputError);
  }
  SUBCASE("phi off the simplex") {
    CHECK_THROWS_AS(PhaseType::make(Eigen::Vector2d(0.5, 0.4), S), InputError);
    CHECK_THROWS_AS(PhaseType::make(Eigen::Vector2d(1.1, -0.1), S), InputError);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_WITH_AS(PhaseType::make(Eigen::Vector3d(1.0, 0.0, 0.0), S), doctest::Contains("dimension"),
                         InputError);
    CHECK_THROWS_AS(PhaseType::make(Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)), InputError);
  }
}

TEST_CASE("mean") {
  CHECK(mean(PhaseType::exponential(2.0)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mean(PhaseType::erlang(3, 3.0)) == doctest::Approx(1.0).epsilon(1e-14));

  // S x = -1 solves to x = (1, 1) by hand, so the mean is 1.
  Eigen::MatrixXd S(2, 2);
  S << -2.0, 1.0, 0.5, -1.5;
  const PhaseType ph = PhaseType::make(Eigen::Vector2d(0.3, 0.7), S);
  CHECK(mean(ph) == doctest::Approx(1.0).epsilon(1e-14));

  RandomStream rng(11);
  const int n = 1'000'000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = sample(ph, rng);
    s += x;
    s2 += x * x;
  }
  const double m = s / n;
  const double se = std::sqrt((s2 / n - m * m) / n);
  CHECK(std::abs(m - 1.0) < 3.0 * se);
}

TEST_CASE("pdf and cdf closed forms") {
  const PhaseType ex = PhaseType::exponential(2.0);
  CHECK(pdf(ex, 0.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(cdf(ex, 0.0) == 0.0);
  CHECK(cdf(ex, std::log(2.0) / 2.0) == doctest::Approx(0.5).epsilon(1e-13));

  const PhaseType er = PhaseType::erlang(2, 3.0);
  CHECK(pdf(er, 1.0) == doctest::Approx(9.0 * std::exp(-3.0)).epsilon(1e-12));
  CHECK(pdf(er, 1.0) == doctest::Approx(0.4481).epsilon(1e-4));
  CHECK(cdf(er, 1.0) == doctest::Approx(1.0 - 4.0 * std::exp(-3.0)).epsilon(1e-12));
  CHECK(cdf(er, 1.0) == doctest::Approx(0.8009).epsilon(1e-4));

  for (double t : {0.0, 0.1, 0.7, 2.0, 5.0}) {
    const double lam = 1.7;
    const PhaseType e3 = PhaseType::erlang(3, lam);
    const double want_pdf = lam * lam * lam * t * t / 2.0 * std::exp(-lam * t);
    const double want_cdf = 1.0 - std::exp(-lam * t) * (1.0 + lam * t + lam * lam * t * t / 2.0);
    CHECK(std::abs(pdf(e3, t) - want_pdf) < 1e-10);
    CHECK(std::abs(cdf(e3, t) - want_cdf) < 1e-10);
  }
}

TEST_CASE("pdf is the derivative of cdf") {
  RandomStream rng(21);
  for (int rep = 0; rep < 5; ++rep) {
    const PhaseType ph = random_phase_type(3, rng);
    const double h = 1e-5;
    for (double t : {0.05, 0.3, 0.7, 1.5, 3.0}) {
      const double fd = (cdf(ph, t + h) - cdf(ph, t - h)) / (2.0 * h);
      CHECK(std::abs(fd - pdf(ph, t)) < 1e-6);
    }
  }
}

TEST_CASE("cdf is monotone with correct limits") {
  RandomStream rng(5);
  const PhaseType ph = random_phase_type(4, rng);
  double prev = 0.0;
  for (double t = 0.0; t < 30.0; t += 0.25) {
    const double c = cdf(ph, t);
    CHECK(c >= prev - 1e-15);
    prev = c;
  }
  CHECK(prev > 1.0 - 1e-9);
}

TEST_CASE("laplace transform") {
  for (double s : {0.0, 0.5, 3.0}) CHECK(laplace(PhaseType::exponential(1.5), s) == doctest::Approx(1.5 / (s + 1.5)));

  RandomStream rng(8);
  for (int rep = 0; rep < 4; ++rep) {
    const PhaseType ph = random_phase_type(1 + rep, rng);
    CHECK(std::abs(laplace(ph, 0.0) - 1.0) < 1e-10);
    double prev = 1.0 + 1e-12;
    for (double s = 0.0; s < 20.0; s += 0.5) {
      const double f = laplace(ph, s);
      CHECK(f < prev);
      prev = f;
    }
  }

  // Quadrature oracle: integral of exp(-s t) pdf(t) on [0, T_0.9999].
  const PhaseType ph4 = random_phase_type(4, rng);
  const double s = 1.3;
  const double T = quantile_horizon(ph4, 0.9999);
  const double quad = simpson([&](double t) { return std::exp(-s * t) * pdf(ph4, t); }, 0.0, T, 4000);
  CHECK(std::abs(quad - laplace(ph4, s)) < 1e-5);
}

TEST_CASE("mean matches quadrature of t·pdf") {
  RandomStream rng(17);
  for (int rep = 0; rep < 3; ++rep) {
    const PhaseType ph = random_phase_type(3, rng);
    const double T = quantile_horizon(ph, 1.0 - 1e-10);
    const double quad = simpson([&](double t) { return t * pdf(ph, t); }, 0.0, T, 6000);
    CHECK(std::abs(quad - mean(ph)) / mean(ph) < 1e-6);
  }
}

TEST_CASE("quantile horizon") {
  const PhaseType ex = PhaseType::exponential(2.0);
  const double t = quantile_horizon(ex, 0.9999);
  CHECK(t == doctest::Approx(-std::log(1e-4) / 2.0).epsilon(1e-8));
  CHECK(cdf(ex, t) >= 0.9999);
  CHECK_THROWS_AS(quantile_horizon(ex, 1.0), InputError);
}

TEST_CASE("sampling") {
  SUBCASE("exponential mean") {
    RandomStream rng(1);
    const int n = 100'000;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += sample(PhaseType::exponential(2.0), rng);
    CHECK(std::abs(s / n - 0.5) < 3.0 * 0.5 / std::sqrt(n));
  }
  SUBCASE("erlang variance") {
    RandomStream rng(2);
    const PhaseType er = PhaseType::erlang(4, 4.0);
    const int n = 100'000;
    std::vector<double> xs(n);
    for (double& x : xs) x = sample(er, rng);
    double m = 0.0;
    for (double x : xs) m += x;
    m /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
      m2 += (x - m) * (x - m);
      m4 += std::pow(x - m, 4);
    }
    m2 /= n;
    m4 /= n;
    const double se = std::sqrt((m4 - m2 * m2) / n);
    CHECK(std::abs(m2 - 0.25) < 4.0 * se);
  }
  SUBCASE("KS against cdf") {
    RandomStream rng(3);
    RandomStream gen(99);
    const PhaseType ph = random_phase_type(3, gen);
    std::vector<double> xs(10'000);
    for (double& x : xs) x = sample(ph, rng);
    CHECK(ks_statistic(xs, [&](double t) { return cdf(ph, t); }) < ks_critical_1pct(xs.size()));
  }
  SUBCASE("deterministic per stream") {
    const PhaseType ph = PhaseType::erlang(3, 1.0);
    RandomStream a(42, 7), b(42, 7), c(42, 8);
    const double xa = sample(ph, a);
    CHECK(xa == sample(ph, b));
    CHECK(xa != sample(ph, c));
  }
}

TEST_CASE("weibull density") {
  CHECK(weibull_pdf(1.0, 1.0, 0.0) == 1.0);
  const double b = std::tgamma(1.5);
  CHECK(weibull_pdf(2.0, b, b) == doctest::Approx(2.0 / b * std::exp(-1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(weibull_pdf(0.5, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(weibull_pdf(-1.0, 1.0, 1.0), InputError);
  CHECK(weibull_pdf(0.5, 1.0, 1e-3) > 0.0);

  const double alpha = 3.5;
  const double scale = weibull_unit_mean_scale(alpha);
  const double upper = weibull_quantile(alpha, scale, 1.0 - 1e-16);
  const double m = simpson([&](double t) { return t * weibull_pdf(alpha, scale, t); }, 0.0, upper, 20000);
  CHECK(std::abs(m - 1.0) < 1e-8);
  const double mass = simpson([&](double t) { return weibull_pdf(alpha, scale, t); }, 0.0, upper, 20000);
  CHECK(std::abs(mass - 1.0) < 1e-8);
}
