#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "taglasso/model.hpp"

using namespace taglasso;

TEST_CASE("sample covariance of two opposite rows") {
  Matrix data(2, 2);
  data << 1, 0, -1, 0;
  const SampleCovariance s = sample_covariance(data);
  CHECK(s.matrix(0, 0) == doctest::Approx(1.0));
  CHECK(s.matrix(0, 1) == doctest::Approx(0.0));
  CHECK(s.matrix(1, 1) == doctest::Approx(0.0));
  CHECK(s.n == 2);
  CHECK(s.centered);
  REQUIRE(s.zero_variance_cols.size() == 1);
  CHECK(s.zero_variance_cols[0] == 1);
}

TEST_CASE("sample covariance of identical rows is zero") {
  Matrix data(5, 3);
  for (int i = 0; i < 5; ++i) data.row(i) << 2.0, -1.0, 0.5;
  const SampleCovariance s = sample_covariance(data);
  CHECK(s.matrix.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("sample covariance matches the brute-force double loop") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 2.0);
  Matrix data(10, 4);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 4; ++j) data(i, j) = normal(rng);
  }
  const SampleCovariance s = sample_covariance(data);
  const Matrix expected = oracles::brute_force_covariance(data);
  CHECK((s.matrix - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sample covariance is invariant to row translation") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix data(12, 5);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 5; ++j) data(i, j) = normal(rng);
  }
  Eigen::RowVectorXd shift(5);
  shift << 100.0, -3.5, 0.25, 7.0, -42.0;
  const Matrix shifted = data.rowwise() + shift;
  const Matrix diff = sample_covariance(data).matrix - sample_covariance(shifted).matrix;
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sample covariance rejects degenerate inputs") {
  CHECK_THROWS_AS(sample_covariance(Matrix::Zero(1, 3)), std::invalid_argument);
  CHECK_THROWS_AS(sample_covariance(Matrix::Zero(4, 1)), std::invalid_argument);
  Matrix bad = Matrix::Zero(3, 3);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sample_covariance(bad), std::invalid_argument);
}

TEST_CASE("positive definiteness checks") {
  CHECK(is_positive_definite(Matrix::Identity(3, 3), 1e-10));
  Matrix singular(2, 2);
  singular << 1, 1, 1, 1;
  CHECK_FALSE(is_positive_definite(singular, 1e-10));
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(is_positive_definite(bad, 1e-10), std::invalid_argument);
}

TEST_CASE("negative log-likelihood closed forms") {
  SampleCovariance s;
  s.matrix = Matrix::Identity(3, 3);
  s.n = 10;
  CHECK(neg_log_likelihood(Matrix::Identity(3, 3), s) == doctest::Approx(3.0));

  SampleCovariance s2;
  s2.matrix = Matrix::Identity(2, 2);
  s2.n = 10;
  const Matrix omega = 2.0 * Matrix::Identity(2, 2);
  CHECK(neg_log_likelihood(omega, s2) == doctest::Approx(-2.0 * std::log(2.0) + 4.0).epsilon(1e-12));
}

TEST_CASE("negative log-likelihood agrees with the cofactor-determinant oracle") {
  std::mt19937_64 rng(21);
  const Matrix omega = oracles::random_spd(5, rng);
  SampleCovariance s;
  s.matrix = oracles::random_spd(5, rng);
  s.n = 50;

  double trace = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) trace += s.matrix(i, j) * omega(j, i);
  }
  const double expected = -std::log(oracles::cofactor_det(omega)) + trace;
  CHECK(neg_log_likelihood(omega, s) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("negative log-likelihood requires positive definiteness") {
  SampleCovariance s;
  s.matrix = Matrix::Identity(2, 2);
  s.n = 4;
  Matrix not_pd(2, 2);
  not_pd << 1, 2, 2, 1;
  CHECK_THROWS_AS(neg_log_likelihood(not_pd, s), std::domain_error);
}

TEST_CASE("likelihood is minimized at the inverse of the truth") {
  std::mt19937_64 rng(33);
  const Matrix sigma = oracles::random_spd(4, rng);
  SampleCovariance s;
  s.matrix = sigma;
  s.n = 100;
  const Matrix omega_star = sigma.llt().solve(Matrix::Identity(4, 4));
  const double best = neg_log_likelihood(omega_star, s);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix perturbed = omega_star + 0.1 * oracles::random_symmetric(4, rng, 0.5);
    if (!is_positive_definite(perturbed, 1e-12)) continue;
    CHECK(neg_log_likelihood(perturbed, s) >= best - 1e-10);
  }
}
