#include "spconf/inference.hpp"

#include <Eigen/QR>
#include <cmath>
#include <numbers>
#include <string>

#include "spconf/errors.hpp"

namespace spconf {

double FitSummary::aic() const { return 2.0 * (n_params + 1) - 2.0 * log_lik; }
double FitSummary::bic() const { return (n_params + 1) * std::log(static_cast<double>(n)) - 2.0 * log_lik; }

Estimate Estimate::make(double beta_hat, double se, double tuning, std::optional<double> k_hat) {
  return Estimate{beta_hat, se, beta_hat - kCiMultiplier * se, beta_hat + kCiMultiplier * se, tuning, k_hat};
}

FitResult fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                  const std::optional<Eigen::VectorXd>& weights, RankPolicy policy, int extra_params) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (y.size() != n) throw InvalidArgument("fit_ols: y has " + std::to_string(y.size()) + " rows, X has " + std::to_string(n));
  if (!y.allFinite() || !X.allFinite()) throw InvalidArgument("fit_ols: non-finite input");
  if (weights) {
    if (weights->size() != n) throw InvalidArgument("fit_ols: weights length mismatch");
    if (!((weights->array() > 0.0).all()) || !weights->allFinite()) {
      throw InvalidArgument("fit_ols: weights must be positive and finite");
    }
  }
  const Eigen::VectorXd sw = weights ? weights->cwiseSqrt().eval() : Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd Xw = sw.asDiagonal() * X;
  const Eigen::VectorXd yw = sw.cwiseProduct(y);

  FitResult fit;
  // Rank detection by column-pivoted QR.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  std::vector<int> kept;
  if (rank < p) {
    if (policy == RankPolicy::fail) {
      throw RankDeficientError("fit_ols: design has rank " + std::to_string(rank) + " < " +
                               std::to_string(p) + " columns");
    }
    // Greedy in column order, so earlier columns win over later ones.
    std::vector<Eigen::VectorXd> basis;
    for (Eigen::Index j = 0; j < p; ++j) {
      Eigen::VectorXd v = Xw.col(j);
      const double original = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) v -= q.dot(v) * q;
      }
      if (original > 0.0 && v.norm() > 1e-9 * original) {
        basis.push_back(v / v.norm());
        kept.push_back(static_cast<int>(j));
      } else {
        fit.dropped.push_back(static_cast<int>(j));
        fit.warnings.push_back("rank guard: dropped design column " + std::to_string(j));
      }
    }
  } else {
    for (Eigen::Index j = 0; j < p; ++j) kept.push_back(static_cast<int>(j));
  }
  const auto k = static_cast<Eigen::Index>(kept.size());
  if (n <= k) throw InvalidArgument("fit_ols: need more observations than parameters");

  Eigen::MatrixXd Xk(n, k);
  for (Eigen::Index j = 0; j < k; ++j) Xk.col(j) = Xw.col(kept[j]);
  Eigen::HouseholderQR<Eigen::MatrixXd> qrk(Xk);
  const Eigen::MatrixXd R = qrk.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::VectorXd bk = R.triangularView<Eigen::Upper>().solve(
      (qrk.householderQ().transpose() * yw).head(k));
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd bread = Rinv * Rinv.transpose();  // (X'WX)^{-1}

  const Eigen::VectorXd rw = yw - Xk * bk;  // sqrt(w) * residual
  const double rss = rw.squaredNorm();
  fit.sigma2 = rss / static_cast<double>(n - k);

  const Eigen::MatrixXd scaled = rw.asDiagonal() * Xk;
  const Eigen::MatrixXd meat = scaled.transpose() * scaled;
  const Eigen::MatrixXd sandwich = bread * meat * bread;

  fit.coefficients = Eigen::VectorXd::Zero(p);
  fit.cov_classical = Eigen::MatrixXd::Zero(p, p);
  fit.cov_sandwich = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index a = 0; a < k; ++a) {
    fit.coefficients[kept[a]] = bk[a];
    for (Eigen::Index b = 0; b < k; ++b) {
      fit.cov_classical(kept[a], kept[b]) = fit.sigma2 * bread(a, b);
      fit.cov_sandwich(kept[a], kept[b]) = sandwich(a, b);
    }
  }
  fit.residuals = y - X * fit.coefficients;

  const double nn = static_cast<double>(n);
  double log_w = 0.0;
  if (weights) log_w = weights->array().log().sum();
  fit.summary.n = static_cast<int>(n);
  fit.summary.n_params = static_cast<int>(k) + extra_params;
  fit.summary.log_lik = -0.5 * nn * std::log(2.0 * std::numbers::pi * rss / nn) - 0.5 * nn + 0.5 * log_w;
  return fit;
}

namespace {

void check_cohort_shapes(const Cohort& c) {
  if (c.y.size() != c.n() || c.x.size() != c.n()) throw InvalidArgument("cohort: x/y length mismatch");
  if (c.z.size() > 0 && c.z.rows() != c.n()) throw InvalidArgument("cohort: z row mismatch");
}

}  // namespace

AdjustedFit fit_unadjusted(const Cohort& cohort) {
  check_cohort_shapes(cohort);
  const auto n = cohort.n();
  Eigen::MatrixXd X(n, 2 + cohort.p());
  X.col(0).setOnes();
  X.col(1) = cohort.x;
  if (cohort.p() > 0) X.rightCols(cohort.p()) = cohort.z;
  AdjustedFit out;
  out.fit = fit_ols(cohort.y, X, cohort.weights);
  out.estimate = Estimate::make(out.fit.coefficients[1], std::sqrt(out.fit.cov_sandwich(1, 1)));
  return out;
}

AdjustedFit fit_outcome_adjusted(const Cohort& cohort, const BasisMatrix& basis) {
  check_cohort_shapes(cohort);
  const auto n = cohort.n();
  if (basis.rows() != n) {
    throw InvalidArgument("fit_outcome_adjusted: basis has " + std::to_string(basis.rows()) +
                          " rows for " + std::to_string(n) + " subjects");
  }
  const auto p = cohort.p();
  const auto m = basis.cols();
  // Column 0 is the exposure so that its index is stable under the guard.
  Eigen::MatrixXd X(n, 2 + p + m);
  X.col(0) = cohort.x;
  X.col(1).setOnes();
  if (p > 0) X.middleCols(2, p) = cohort.z;
  if (m > 0) X.rightCols(m) = basis.values;

  // Collinearity between x and the nuisance columns, measured on the
  // weighted scale used by the fit.
  const Eigen::VectorXd sw = cohort.weights ? cohort.weights->cwiseSqrt().eval() : Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd nuisance = sw.asDiagonal() * X.rightCols(X.cols() - 1);
  const Eigen::VectorXd xw = sw.cwiseProduct(cohort.x);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(nuisance);
  qr.setThreshold(1e-10);
  const double resid = (xw - nuisance * qr.solve(xw)).norm();
  const double centered = (xw.array() - xw.mean()).matrix().norm();
  const double scale = centered > 0.0 ? centered : xw.norm();
  if (!(resid > 1e-9 * scale)) {
    throw RankDeficientError("fit_outcome_adjusted: exposure lies in the span of the basis");
  }

  AdjustedFit out;
  out.fit = fit_ols(cohort.y, X, cohort.weights, RankPolicy::drop);
  for (int j : out.fit.dropped) {
    if (j == 0) throw RankDeficientError("fit_outcome_adjusted: exposure lies in the span of the basis");
  }
  out.fit.warnings.clear();
  if (resid < 1e-3 * scale) {
    out.fit.warnings.push_back("fit_outcome_adjusted: exposure is nearly collinear with the basis (residual norm ratio " +
                               std::to_string(resid / scale) + ")");
  }
  out.estimate = Estimate::make(out.fit.coefficients[0], std::sqrt(out.fit.cov_sandwich(0, 0)),
                                static_cast<double>(m));
  return out;
}

AdjustedFit fit_preadjusted(const Cohort& cohort, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                            const std::optional<Eigen::VectorXd>& weights, int removed_components) {
  check_cohort_shapes(cohort);
  const auto n = cohort.n();
  if (x1.size() != n || x2.size() != n) throw InvalidArgument("fit_preadjusted: x1/x2 length mismatch");
  const auto p = cohort.p();
  Eigen::MatrixXd X(n, 3 + p);
  X.col(0).setOnes();
  X.col(1) = x2;
  X.col(2) = x1;
  if (p > 0) X.rightCols(p) = cohort.z;
  AdjustedFit out;
  out.fit = fit_ols(cohort.y, X, weights, RankPolicy::drop, removed_components);
  for (int j : out.fit.dropped) {
    if (j == 1) throw RankDeficientError("fit_preadjusted: pre-adjusted exposure x2 is degenerate");
  }
  out.estimate = Estimate::make(out.fit.coefficients[1], std::sqrt(out.fit.cov_sandwich(1, 1)));
  return out;
}

double bias_beta2_oracle(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& f) {
  const auto n = x1.size();
  if (x2.size() != n || z.size() != n || f.size() != n) {
    throw InvalidArgument("bias_beta2_oracle: vectors must have equal length");
  }
  const double x2f = x2.dot(f), x2z = x2.dot(z);
  const double x1z = x1.dot(z), x1x1 = x1.squaredNorm(), zz = z.squaredNorm();
  const double zf = z.dot(f), x1f = x1.dot(f);
  return x2f * (x1z * x1z - x1x1 * zz) + x2z * (x1x1 * zf - x1z * x1f);
}

double bias_beta2_exact(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const Eigen::VectorXd& z,
                        const Eigen::VectorXd& f) {
  const double expr = bias_beta2_oracle(x1, x2, z, f);
  Eigen::Matrix3d G;
  const double x1z = x1.dot(z), x2z = x2.dot(z);
  G << x1.squaredNorm(), 0.0, x1z, 0.0, x2.squaredNorm(), x2z, x1z, x2z, z.squaredNorm();
  const double det = G.determinant();
  if (!(std::abs(det) > 0.0)) throw RankDeficientError("bias_beta2_exact: singular Gram matrix");
  return -expr / det;
}

}  // namespace spconf
