#include "spconf/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <lapacke.h>

#include "spconf/errors.hpp"

namespace spconf::linalg {

namespace {

SymEigen sorted_descending(const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors, int k) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] > values[b]; });
  SymEigen out;
  out.values.resize(k);
  out.vectors.resize(vectors.rows(), k);
  for (int j = 0; j < k; ++j) {
    out.values[j] = values[order[j]];
    out.vectors.col(j) = vectors.col(order[j]);
  }
  return out;
}

}  // namespace

SymEigen top_eigen_dense(const Eigen::MatrixXd& A, int k) {
  const auto n = static_cast<lapack_int>(A.rows());
  if (A.cols() != n) throw InvalidArgument("top_eigen_dense: matrix must be square");
  if (k < 0 || k > n) throw InvalidArgument("top_eigen_dense: k out of range");
  if (k == 0) return {Eigen::VectorXd(0), Eigen::MatrixXd(n, 0)};
  Eigen::MatrixXd work = A;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd Z(n, k);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, work.data(), n, 0.0, 0.0, n - k + 1, n,
                     0.0, &found, w.data(), Z.data(), n, support.data());
  if (info != 0 || found != k) {
    throw Error("top_eigen_dense: dsyevr failed (info=" + std::to_string(info) + ")");
  }
  return sorted_descending(w.head(k), Z, k);
}

std::optional<SymEigen> top_eigen_subspace(const Eigen::MatrixXd& A, int k, std::uint64_t seed,
                                           double tol, int max_iter) {
  const Eigen::Index n = A.rows();
  if (k <= 0 || k > n) throw InvalidArgument("top_eigen_subspace: k out of range");
  const Eigen::Index block = std::min<Eigen::Index>(n, k + std::max(10, k));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);
  X = Eigen::HouseholderQR<Eigen::MatrixXd>(X).householderQ() * Eigen::MatrixXd::Identity(n, block);

  Eigen::MatrixXd Y(n, block);
  for (int iter = 0; iter < max_iter; ++iter) {
    Y.noalias() = A * X;
    Eigen::MatrixXd T = X.transpose() * Y;
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(T);
    SymEigen ritz = sorted_descending(small.eigenvalues(), small.eigenvectors(), static_cast<int>(block));
    const double scale = std::max(std::abs(ritz.values[0]), 1e-300);
    // Residuals of the leading k Ritz pairs: A X u - theta X u = Y u - theta X u.
    Eigen::MatrixXd U = ritz.vectors.leftCols(k);
    Eigen::MatrixXd R = Y * U - X * U * ritz.values.head(k).asDiagonal();
    const double worst = R.colwise().norm().maxCoeff();
    if (worst <= tol * scale) {
      return SymEigen{ritz.values.head(k), X * U};
    }
    // Next basis: Ritz-rotated image, re-orthonormalized.
    X = Eigen::HouseholderQR<Eigen::MatrixXd>(Y * ritz.vectors).householderQ() *
        Eigen::MatrixXd::Identity(n, block);
  }
  return std::nullopt;
}

SymEigen top_eigen(const Eigen::MatrixXd& A, int k) {
  const auto n = A.rows();
  if (n >= 400 && k > 0 && 8 * k <= n / 10) {
    if (auto r = top_eigen_subspace(A, k, 0x5eed5ull + static_cast<std::uint64_t>(n))) return *r;
  }
  return top_eigen_dense(A, k);
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& A, double rel_tol) {
  const auto n = A.rows();
  const auto m = A.cols();
  if (m == 0) return Eigen::MatrixXd(n, 0);
  if (m > n) throw RankDeficientError("orthonormal_columns: more columns than rows");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::VectorXd diag = qr.matrixQR().diagonal().cwiseAbs();
  const double biggest = A.colwise().norm().maxCoeff();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!(diag[j] > rel_tol * biggest)) {
      throw RankDeficientError("orthonormal_columns: column " + std::to_string(j) +
                               " is linearly dependent on earlier columns");
    }
  }
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  // Fix signs so each column correlates positively with its source column.
  for (Eigen::Index j = 0; j < m; ++j) {
    if (qr.matrixQR()(j, j) < 0) Q.col(j) *= -1.0;
  }
  return Q;
}

int numerical_rank(const Eigen::MatrixXd& A, double rel_tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  return static_cast<int>((s.array() > rel_tol * s[0]).count());
}

}  // namespace spconf::linalg
