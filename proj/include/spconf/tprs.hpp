#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace spconf {

/// How the columns of a basis are ordered (coarse to fine in every case).
enum class BasisOrdering { tprs_df, fourier_frequency, wavelet_level };

/// n x m evaluation of hierarchical basis functions, one row per
/// subject/location. The first j columns always form the rank-j member of
/// the hierarchy.
struct BasisMatrix {
  Eigen::MatrixXd values;
  BasisOrdering ordering = BasisOrdering::tprs_df;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  /// The first m columns.
  BasisMatrix leading(int m) const;
};

struct SmoothingMatrix {
  Eigen::MatrixXd values;
};

/// Thin-plate radial function r^2 log(r) / (8 pi), with value 0 at r = 0.
double thin_plate_kernel(double r);

/// Truncated thin-plate eigenbasis fitted at a knot set: the polynomial
/// block {1, u, v} plus the leading (df - 3) eigenvectors of the radial
/// kernel matrix restricted to the orthogonal complement of the polynomials.
/// Evaluation at other points uses the Nystrom extension of each eigenvector.
class ThinPlateSpline {
 public:
  static ThinPlateSpline build(const Eigen::MatrixX2d& knots, int df);

  int df() const { return static_cast<int>(eigenvalues_.size()) + 3; }
  const Eigen::MatrixX2d& knots() const { return knots_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

  /// Unnormalized columns [1, u, v, h_1, ..., h_{df-3}] at the knots. The
  /// radial columns are the constrained eigenvectors themselves.
  Eigen::MatrixXd at_knots() const;
  /// Same column space as at_knots() at the knots, extended to any points.
  Eigen::MatrixXd evaluate(const Eigen::MatrixX2d& points) const;

 private:
  Eigen::MatrixX2d knots_;
  Eigen::MatrixXd vectors_;
  Eigen::VectorXd eigenvalues_;
};

struct TprsOptions {
  /// Above this many distinct locations, the eigenbasis is fitted on a
  /// uniform subsample of knots and extended to the remaining points.
  int max_knots = 4000;
  std::uint64_t knot_seed = 0x7a1e5ull;
};

/// Orthonormal TPRS basis with `df` columns at `locations` (one row per
/// input row). Duplicated coordinates share a basis row.
BasisMatrix tprs_basis(const Eigen::MatrixX2d& locations, int df, const TprsOptions& options = {});

/// Orthonormalized evaluation of a fitted spline at arbitrary points.
BasisMatrix tprs_basis_at(const ThinPlateSpline& spline, const Eigen::MatrixX2d& points);

/// H (H^T H)^{-1} H^T. Throws RankDeficientError when H is not full rank.
SmoothingMatrix smoothing_matrix(const BasisMatrix& basis);

struct Decomposition {
  Eigen::VectorXd x1;  // projection onto the basis column space
  Eigen::VectorXd x2;  // orthogonal complement, x - x1
};

Decomposition project_decompose(const Eigen::VectorXd& x, const BasisMatrix& basis);

/// Weighted split: x1 is the W-orthogonal projection, so sum w x2 h_j = 0
/// for every basis column h_j.
Decomposition project_decompose(const Eigen::VectorXd& x, const BasisMatrix& basis, const Eigen::VectorXd& weights);

}  // namespace spconf
