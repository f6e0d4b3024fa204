#include <random>

#include "doctest.h"
#include "spconf/errors.hpp"
#include "spconf/linalg.hpp"

using namespace spconf;

namespace {

Eigen::MatrixXd random_psd(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = z(rng);
  Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ();
  Eigen::VectorXd lam(n);
  for (int i = 0; i < n; ++i) lam[i] = 1.0 / ((i + 1.0) * (i + 1.0));
  return Q * lam.asDiagonal() * Q.transpose();
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("subspace iteration agrees with the dense solver") {
  const Eigen::MatrixXd A = random_psd(500, 3);
  auto dense = linalg::top_eigen_dense(A, 6);
  auto sub = linalg::top_eigen_subspace(A, 6, 11);
  REQUIRE(sub.has_value());
  for (int i = 0; i < 6; ++i) {
    CHECK(sub->values[i] == doctest::Approx(dense.values[i]).epsilon(1e-10));
    CHECK(std::abs(std::abs(sub->vectors.col(i).dot(dense.vectors.col(i))) - 1.0) < 1e-8);
  }
  CHECK(dense.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dense.values[5] == doctest::Approx(1.0 / 36.0).epsilon(1e-10));
}

TEST_CASE("orthonormal columns keep nested spans") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  Eigen::MatrixXd A(40, 6);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 6; ++j) A(i, j) = z(rng);
  Eigen::MatrixXd Q = linalg::orthonormal_columns(A);
  CHECK((Q.transpose() * Q - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::MatrixXd Q3 = linalg::orthonormal_columns(A.leftCols(3));
  CHECK((Q.leftCols(3) - Q3).cwiseAbs().maxCoeff() < 1e-12);
  for (int j = 0; j < 6; ++j) CHECK(Q.col(j).dot(A.col(j)) > 0.0);
}

TEST_CASE("dependent columns are reported") {
  Eigen::MatrixXd A(5, 3);
  A << 1, 2, 3, 1, 0, 1, 1, 1, 2, 1, 4, 5, 1, 3, 4;
  CHECK_THROWS_AS(linalg::orthonormal_columns(A), RankDeficientError);
  CHECK(linalg::numerical_rank(A) == 2);
}

}
