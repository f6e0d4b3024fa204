#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace spconf::linalg {

/// Eigenpairs sorted by eigenvalue, descending.
struct SymEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Largest k eigenpairs of the symmetric matrix A via LAPACK dsyevr.
SymEigen top_eigen_dense(const Eigen::MatrixXd& A, int k);

/// Largest k eigenpairs of the symmetric positive semidefinite matrix A by
/// block subspace iteration with Rayleigh-Ritz extraction. Returns nullopt
/// when the Ritz residuals have not dropped below `tol * lambda_max` after
/// `max_iter` sweeps.
std::optional<SymEigen> top_eigen_subspace(const Eigen::MatrixXd& A, int k, std::uint64_t seed,
                                           double tol = 1e-10, int max_iter = 300);

/// Picks the subspace route for small k relative to n, dense otherwise.
SymEigen top_eigen(const Eigen::MatrixXd& A, int k);

/// Orthonormal basis of the column space of A, column order preserved
/// (Q factor of a Householder QR). Throws RankDeficientError when a
/// diagonal entry of R falls below `rel_tol` times the largest.
Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& A, double rel_tol = 1e-10);

/// Numerical rank from singular values relative to the largest.
int numerical_rank(const Eigen::MatrixXd& A, double rel_tol = 1e-10);

}  // namespace spconf::linalg
