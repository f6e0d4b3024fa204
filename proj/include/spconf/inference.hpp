#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spconf/grid.hpp"
#include "spconf/tprs.hpp"

namespace spconf {

/// Normal-quantile multiplier for the reported 95% intervals.
inline constexpr double kCiMultiplier = 1.96;

/// Gaussian log-likelihood summary of a fitted mean model. `n_params` counts
/// mean parameters; the error variance adds one more in AIC/BIC.
struct FitSummary {
  double log_lik = 0.0;
  int n = 0;
  int n_params = 0;

  double aic() const;
  double bic() const;
};

enum class RankPolicy {
  fail,  // throw RankDeficientError
  drop,  // drop dependent columns (singular value < 1e-10 * max) with a warning
};

struct FitResult {
  Eigen::VectorXd coefficients;  // one per design column; dropped columns hold 0
  std::vector<int> dropped;      // indices of dropped design columns
  Eigen::MatrixXd cov_classical;
  Eigen::MatrixXd cov_sandwich;  // White (HC0), weighted when weights are given
  Eigen::VectorXd residuals;     // y - X b on the original (unweighted) scale
  double sigma2 = 0.0;           // sum(w r^2) / (n - p)
  FitSummary summary;
  std::vector<std::string> warnings;
};

/// Least squares of y on X (weighted when `weights` is given). `extra_params`
/// is added to the parameter count used by AIC/BIC.
FitResult fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                  const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                  RankPolicy policy = RankPolicy::fail, int extra_params = 0);

struct Estimate {
  double beta_hat = 0.0;
  double se = 0.0;  // sandwich
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double tuning = 0.0;  // m, cutoff or level; 0 when unadjusted
  std::optional<double> k_hat;

  static Estimate make(double beta_hat, double se, double tuning = 0.0,
                       std::optional<double> k_hat = std::nullopt);
};

struct AdjustedFit {
  Estimate estimate;
  FitResult fit;
};

/// y ~ 1 + x (+ z) with no spatial adjustment.
AdjustedFit fit_unadjusted(const Cohort& cohort);

/// y ~ 1 + x + z + H_m, reporting the x coefficient. Basis columns that are
/// redundant with the intercept are dropped silently; an exposure nearly in
/// the basis span produces a warning, one exactly in it a RankDeficientError.
AdjustedFit fit_outcome_adjusted(const Cohort& cohort, const BasisMatrix& basis);

/// y ~ 1 + x1 + x2 + z, reporting the x2 coefficient. A degenerate x1 (e.g.
/// all zero) is dropped by the rank guard. `removed_components` is added to
/// the AIC/BIC parameter count.
AdjustedFit fit_preadjusted(const Cohort& cohort, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                            const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                            int removed_components = 0);

/// Bias structure of the x2 coefficient for a scalar covariate z (sums over
/// subjects, x1 orthogonal to x2):
///   sum(x2 f) ((sum x1 z)^2 - sum(x1^2) sum(z^2))
///   + sum(x2 z) (sum(x1^2) sum(z f) - sum(x1 z) sum(x1 f)).
/// Zero whenever x2 is orthogonal to both f and z.
double bias_beta2_oracle(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& f);

/// Exact bias of the x2 coefficient in the no-intercept regression of
/// f on [x1, x2, z]: -bias_beta2_oracle(...) / det(X^T X). Requires x1 ⟂ x2.
double bias_beta2_exact(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const Eigen::VectorXd& z,
                        const Eigen::VectorXd& f);

}  // namespace spconf
