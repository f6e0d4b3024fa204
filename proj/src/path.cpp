#include "spconf/path.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "spconf/errors.hpp"
#include "spconf/linalg.hpp"

namespace spconf {

AdjustmentPath::AdjustmentPath(std::vector<PathEntry> entries, std::string basis)
    : entries_(std::move(entries)), basis_(std::move(basis)) {
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (!(entries_[i].tuning > entries_[i - 1].tuning)) {
      throw InvalidArgument("adjustment path: tuning values must be strictly increasing");
    }
  }
}

std::optional<std::size_t> AdjustmentPath::find(double tuning) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].tuning == tuning) return i;
  }
  return std::nullopt;
}

namespace {

void check_dfs(std::span<const int> dfs, Eigen::Index max_cols) {
  for (std::size_t i = 0; i < dfs.size(); ++i) {
    if (dfs[i] < 0 || dfs[i] > max_cols) {
      throw InvalidArgument("path: df " + std::to_string(dfs[i]) + " exceeds the " + std::to_string(max_cols) +
                            " available basis columns");
    }
    if (i > 0 && dfs[i] <= dfs[i - 1]) throw InvalidArgument("path: dfs must be strictly increasing");
  }
}

// Residualizes weighted y and x against a growing set of nuisance columns
// (intercept, z, then basis columns in order) by modified Gram-Schmidt with
// one reorthogonalization pass. Dependent columns are skipped.
class NestedResidualizer {
 public:
  NestedResidualizer(const Cohort& cohort, const BasisMatrix& basis) : basis_(basis) {
    const auto n = cohort.n();
    sw_ = cohort.weights ? cohort.weights->cwiseSqrt().eval() : Eigen::VectorXd::Ones(n);
    log_w_ = cohort.weights ? cohort.weights->array().log().sum() : 0.0;
    y_ = sw_.cwiseProduct(cohort.y);
    x_ = sw_.cwiseProduct(cohort.x);
    q_.reserve(1 + cohort.p() + basis.cols());
    add(sw_);
    for (Eigen::Index j = 0; j < cohort.p(); ++j) add(sw_.cwiseProduct(cohort.z.col(j)));
  }

  void advance_to(int m) {
    while (used_ < m) add(sw_.cwiseProduct(basis_.values.col(used_++)));
  }

  int rank() const { return static_cast<int>(q_.size()); }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& x() const { return x_; }
  double log_w() const { return log_w_; }

 private:
  void add(Eigen::VectorXd v) {
    const double original = v.norm();
    if (!(original > 0.0)) return;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : q_) v -= q.dot(v) * q;
    }
    const double left = v.norm();
    if (!(left > 1e-10 * original)) return;
    v /= left;
    y_ -= v.dot(y_) * v;
    x_ -= v.dot(x_) * v;
    q_.push_back(std::move(v));
  }

  const BasisMatrix& basis_;
  Eigen::VectorXd sw_, y_, x_;
  double log_w_ = 0.0;
  std::vector<Eigen::VectorXd> q_;
  int used_ = 0;
};

double gaussian_loglik(double rss, int n, double log_w) {
  const double nn = n;
  return -0.5 * nn * std::log(2.0 * std::numbers::pi * rss / nn) - 0.5 * nn + 0.5 * log_w;
}

}  // namespace

AdjustmentPath outcome_adjusted_path(const Cohort& cohort, const BasisMatrix& basis, std::span<const int> dfs) {
  if (basis.rows() != cohort.n()) throw InvalidArgument("outcome_adjusted_path: basis rows != subjects");
  check_dfs(dfs, basis.cols());
  NestedResidualizer res(cohort, basis);
  const int n = cohort.n();
  std::vector<PathEntry> entries;
  for (int m : dfs) {
    res.advance_to(m);
    const Eigen::VectorXd& xt = res.x();
    const Eigen::VectorXd& yt = res.y();
    const double sxx = xt.squaredNorm();
    const double scale = res.rank() > 0 ? cohort.x.norm() : 1.0;
    if (!(sxx > 1e-20 * scale * scale)) {
      throw RankDeficientError("outcome_adjusted_path: exposure lies in the span of the basis at df " +
                               std::to_string(m));
    }
    const double beta = xt.dot(yt) / sxx;
    const Eigen::VectorXd r = yt - beta * xt;
    const double meat = (xt.array().square() * r.array().square()).sum();
    PathEntry e;
    e.tuning = m;
    e.full = FitSummary{gaussian_loglik(r.squaredNorm(), n, res.log_w()), n, res.rank() + 1};
    e.no_exposure = FitSummary{gaussian_loglik(yt.squaredNorm(), n, res.log_w()), n, res.rank()};
    e.estimate = Estimate::make(beta, std::sqrt(meat) / sxx, m);
    entries.push_back(e);
  }
  return AdjustmentPath(std::move(entries), "tprs-outcome");
}

AdjustmentPath preadjusted_path(const Cohort& cohort, const BasisMatrix& basis, std::span<const int> dfs,
                                const std::optional<Eigen::VectorXd>& weights) {
  if (basis.rows() != cohort.n()) throw InvalidArgument("preadjusted_path: basis rows != subjects");
  check_dfs(dfs, basis.cols());
  const int max_df = dfs.empty() ? 0 : dfs.back();
  // With weights the split is W-orthogonal: sum w x2 h_j = 0.
  Eigen::VectorXd sw = Eigen::VectorXd::Ones(cohort.n());
  if (weights) {
    if (weights->size() != cohort.n()) throw InvalidArgument("preadjusted_path: weights length != subjects");
    sw = weights->cwiseSqrt();
  }
  const Eigen::MatrixXd Q = linalg::orthonormal_columns(sw.asDiagonal() * basis.values.leftCols(max_df));
  const Eigen::VectorXd coef = Q.transpose() * sw.cwiseProduct(cohort.x);

  // The no-exposure fits only involve y, z and the basis, as in the outcome path.
  Cohort ne_cohort = cohort;
  ne_cohort.weights = weights;
  NestedResidualizer res(ne_cohort, basis);

  std::vector<PathEntry> entries;
  Eigen::VectorXd x1 = Eigen::VectorXd::Zero(cohort.n());
  int used = 0;
  for (int m : dfs) {
    for (; used < m; ++used) x1 += coef[used] * Q.col(used);
    const Eigen::VectorXd x1_raw = x1.cwiseQuotient(sw);
    const Eigen::VectorXd x2 = cohort.x - x1_raw;
    AdjustedFit fit = fit_preadjusted(cohort, x1_raw, x2, weights, m);
    res.advance_to(m);
    PathEntry e;
    e.tuning = m;
    e.full = fit.fit.summary;
    e.no_exposure = FitSummary{gaussian_loglik(res.y().squaredNorm(), cohort.n(), res.log_w()), cohort.n(), res.rank()};
    e.estimate = fit.estimate;
    e.estimate.tuning = m;
    entries.push_back(e);
  }
  return AdjustmentPath(std::move(entries), "tprs-preadjust");
}

AdjustmentPath filtered_path(const Cohort& cohort, std::span<const double> tunings,
                             std::span<const Eigen::VectorXd> x2_per_tuning, std::span<const int> removed_counts,
                             const std::optional<Eigen::VectorXd>& weights, std::string basis) {
  if (tunings.size() != x2_per_tuning.size() || tunings.size() != removed_counts.size()) {
    throw InvalidArgument("filtered_path: tunings, x2 vectors and removed counts differ in length");
  }
  std::vector<PathEntry> entries;
  for (std::size_t i = 0; i < tunings.size(); ++i) {
    const Eigen::VectorXd& x2 = x2_per_tuning[i];
    const Eigen::VectorXd x1 = cohort.x - x2;
    AdjustedFit fit = fit_preadjusted(cohort, x1, x2, weights, removed_counts[i]);
    PathEntry e;
    e.tuning = tunings[i];
    e.full = fit.fit.summary;
    e.estimate = fit.estimate;
    e.estimate.tuning = tunings[i];
    entries.push_back(e);
  }
  return AdjustmentPath(std::move(entries), std::move(basis));
}

}  // namespace spconf
