#include "spconf/tprs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "spconf/errors.hpp"
#include "spconf/linalg.hpp"

namespace spconf {

namespace {

Eigen::MatrixXd polynomial_block(const Eigen::MatrixX2d& pts) {
  Eigen::MatrixXd T(pts.rows(), 3);
  T.col(0).setOnes();
  T.col(1) = pts.col(0);
  T.col(2) = pts.col(1);
  return T;
}

// r^2 log r from a squared distance, avoiding the square root.
inline double kernel_from_squared(double r2) {
  constexpr double scale = 1.0 / (16.0 * std::numbers::pi);
  return r2 > 0.0 ? scale * r2 * std::log(r2) : 0.0;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixX2d& a, const Eigen::MatrixX2d& b) {
  Eigen::MatrixXd E(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    const double bu = b(j, 0), bv = b(j, 1);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double du = a(i, 0) - bu, dv = a(i, 1) - bv;
      E(i, j) = kernel_from_squared(du * du + dv * dv);
    }
  }
  return E;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixX2d& a) {
  const auto n = a.rows();
  Eigen::MatrixXd E(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double bu = a(j, 0), bv = a(j, 1);
    E(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double du = a(i, 0) - bu, dv = a(i, 1) - bv;
      E(i, j) = kernel_from_squared(du * du + dv * dv);
    }
  }
  E.triangularView<Eigen::StrictlyUpper>() = E.transpose();
  return E;
}

struct UniquePoints {
  Eigen::MatrixX2d points;
  std::vector<int> row_to_unique;
};

UniquePoints unique_points(const Eigen::MatrixX2d& pts) {
  std::map<std::pair<double, double>, int> seen;
  UniquePoints out;
  std::vector<Eigen::Index> firsts;
  out.row_to_unique.reserve(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    auto [it, inserted] = seen.try_emplace({pts(i, 0), pts(i, 1)}, static_cast<int>(firsts.size()));
    if (inserted) firsts.push_back(i);
    out.row_to_unique.push_back(it->second);
  }
  out.points.resize(static_cast<Eigen::Index>(firsts.size()), 2);
  for (std::size_t k = 0; k < firsts.size(); ++k) out.points.row(k) = pts.row(firsts[k]);
  return out;
}

}  // namespace

BasisMatrix BasisMatrix::leading(int m) const {
  if (m < 0 || m > cols()) throw InvalidArgument("basis: requested more columns than available");
  return BasisMatrix{values.leftCols(m), ordering};
}

double thin_plate_kernel(double r) {
  return r > 0.0 ? r * r * std::log(r) / (8.0 * std::numbers::pi) : 0.0;
}

ThinPlateSpline ThinPlateSpline::build(const Eigen::MatrixX2d& knots, int df) {
  const auto n = knots.rows();
  if (df < 3) throw InvalidArgument("tprs: df must be at least 3 (got " + std::to_string(df) + ")");
  if (df > n) {
    throw InvalidArgument("tprs: df " + std::to_string(df) + " exceeds the " + std::to_string(n) +
                          " distinct locations");
  }
  const Eigen::MatrixXd T = polynomial_block(knots);
  {
    Eigen::MatrixXd centered = T.rightCols(2).rowwise() - T.rightCols(2).colwise().mean();
    if (linalg::numerical_rank(centered) < 2) {
      throw RankDeficientError("tprs: locations are collinear; polynomial block is rank deficient");
    }
  }
  ThinPlateSpline tps;
  tps.knots_ = knots;
  const int k = df - 3;
  if (k == 0) {
    tps.vectors_.resize(n, 0);
    tps.eigenvalues_.resize(0);
    return tps;
  }

  // P E P with P the projector off span{1, u, v}.
  Eigen::MatrixXd B = kernel_matrix(knots);
  const Eigen::MatrixXd Q = linalg::orthonormal_columns(T);
  const Eigen::MatrixXd EQ = B * Q;
  const Eigen::MatrixXd QtEQ = Q.transpose() * EQ;
  B.noalias() -= Q * EQ.transpose();
  B.noalias() -= EQ * Q.transpose();
  B.noalias() += Q * (QtEQ * Q.transpose());
  B = 0.5 * (B + B.transpose()).eval();

  // The thin-plate kernel is conditionally positive definite of order 2, so
  // the constrained spectrum is non-negative and "largest" is "largest
  // magnitude".
  linalg::SymEigen eig = linalg::top_eigen(B, k);
  if (!(eig.values.minCoeff() > 0.0)) {
    throw RankDeficientError("tprs: df " + std::to_string(df) +
                             " exceeds the rank of the constrained kernel");
  }
  tps.vectors_ = std::move(eig.vectors);
  tps.eigenvalues_ = std::move(eig.values);
  return tps;
}

Eigen::MatrixXd ThinPlateSpline::at_knots() const {
  Eigen::MatrixXd H(knots_.rows(), df());
  H.leftCols(3) = polynomial_block(knots_);
  H.rightCols(vectors_.cols()) = vectors_;
  return H;
}

Eigen::MatrixXd ThinPlateSpline::evaluate(const Eigen::MatrixX2d& points) const {
  Eigen::MatrixXd H(points.rows(), df());
  H.leftCols(3) = polynomial_block(points);
  if (vectors_.cols() > 0) {
    H.rightCols(vectors_.cols()) =
        kernel_matrix(points, knots_) * vectors_ * eigenvalues_.cwiseInverse().asDiagonal();
  }
  return H;
}

BasisMatrix tprs_basis_at(const ThinPlateSpline& spline, const Eigen::MatrixX2d& points) {
  return BasisMatrix{linalg::orthonormal_columns(spline.evaluate(points)), BasisOrdering::tprs_df};
}

BasisMatrix tprs_basis(const Eigen::MatrixX2d& locations, int df, const TprsOptions& options) {
  if (df < 3) throw InvalidArgument("tprs: df must be at least 3 (got " + std::to_string(df) + ")");
  const UniquePoints up = unique_points(locations);
  const auto n_unique = up.points.rows();
  if (df > n_unique) {
    throw InvalidArgument("tprs: df " + std::to_string(df) + " exceeds the " +
                          std::to_string(n_unique) + " distinct locations");
  }

  Eigen::MatrixXd raw;
  if (n_unique <= options.max_knots) {
    raw = ThinPlateSpline::build(up.points, df).at_knots();
  } else {
    std::vector<int> idx(n_unique);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(options.knot_seed);
    for (int i = 0; i < options.max_knots; ++i) {
      std::uniform_int_distribution<int> pick(i, static_cast<int>(n_unique) - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(options.max_knots);
    std::sort(idx.begin(), idx.end());
    Eigen::MatrixX2d knots(options.max_knots, 2);
    for (int i = 0; i < options.max_knots; ++i) knots.row(i) = up.points.row(idx[i]);
    raw = ThinPlateSpline::build(knots, df).evaluate(up.points);
  }

  Eigen::MatrixXd full(locations.rows(), df);
  for (Eigen::Index i = 0; i < locations.rows(); ++i) full.row(i) = raw.row(up.row_to_unique[i]);
  return BasisMatrix{linalg::orthonormal_columns(full), BasisOrdering::tprs_df};
}

SmoothingMatrix smoothing_matrix(const BasisMatrix& basis) {
  const Eigen::MatrixXd Q = linalg::orthonormal_columns(basis.values);
  Eigen::MatrixXd S = Q * Q.transpose();
  return SmoothingMatrix{0.5 * (S + S.transpose())};
}

Decomposition project_decompose(const Eigen::VectorXd& x, const BasisMatrix& basis) {
  if (x.size() != basis.rows()) {
    throw InvalidArgument("project_decompose: vector has " + std::to_string(x.size()) +
                          " entries but basis has " + std::to_string(basis.rows()) + " rows");
  }
  const Eigen::MatrixXd Q = linalg::orthonormal_columns(basis.values);
  Decomposition d;
  d.x1 = Q * (Q.transpose() * x);
  d.x2 = x - d.x1;
  return d;
}

}  // namespace spconf

namespace spconf {

Decomposition project_decompose(const Eigen::VectorXd& x, const BasisMatrix& basis, const Eigen::VectorXd& weights) {
  if (x.size() != basis.rows() || weights.size() != basis.rows()) {
    throw InvalidArgument("project_decompose: vector, weights and basis rows differ in length");
  }
  if (!(weights.minCoeff() > 0.0)) throw InvalidArgument("project_decompose: weights must be positive");
  const Eigen::VectorXd sw = weights.cwiseSqrt();
  const Eigen::MatrixXd Q = linalg::orthonormal_columns(sw.asDiagonal() * basis.values);
  Decomposition d;
  d.x1 = (Q * (Q.transpose() * sw.cwiseProduct(x))).cwiseQuotient(sw);
  d.x2 = x - d.x1;
  return d;
}

}  // namespace spconf
