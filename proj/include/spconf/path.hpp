#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spconf/grid.hpp"
#include "spconf/inference.hpp"
#include "spconf/tprs.hpp"

namespace spconf {

/// One amount of adjustment on a path: the full-model fit summary, the
/// optional no-exposure fit summary (outcome ~ basis + z), and the exposure
/// estimate.
struct PathEntry {
  double tuning = 0.0;
  FitSummary full;
  std::optional<FitSummary> no_exposure;
  Estimate estimate;
};

/// Estimates over strictly increasing tuning values.
class AdjustmentPath {
 public:
  AdjustmentPath() = default;
  explicit AdjustmentPath(std::vector<PathEntry> entries, std::string basis = {});

  const std::vector<PathEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const PathEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::string& basis() const { return basis_; }

  /// Index of the entry with this tuning value, if present.
  std::optional<std::size_t> find(double tuning) const;

 private:
  std::vector<PathEntry> entries_;
  std::string basis_;
};

/// Outcome-model adjustment y ~ 1 + x + z + H_m for every m in `dfs`
/// (ascending, each <= basis.cols()), plus the no-exposure models
/// y ~ 1 + z + H_m. Uses the cohort weights when present. Computed by
/// nested orthogonalization of the leading basis columns, so the whole path
/// costs about one QR of the widest design.
AdjustmentPath outcome_adjusted_path(const Cohort& cohort, const BasisMatrix& basis, std::span<const int> dfs);

/// Exposure pre-adjustment by projection onto the leading m basis columns,
/// followed by y ~ 1 + x1 + x2 + z. The no-exposure fits are the same as for
/// outcome_adjusted_path. AIC/BIC parameter counts include the m removed
/// components.
AdjustmentPath preadjusted_path(const Cohort& cohort, const BasisMatrix& basis, std::span<const int> dfs,
                                const std::optional<Eigen::VectorXd>& weights = std::nullopt);

/// Pre-adjustment with externally computed x2 vectors (Fourier or wavelet
/// filtering), one per tuning value, with x1 = x - x2. No no-exposure fits.
AdjustmentPath filtered_path(const Cohort& cohort, std::span<const double> tunings,
                             std::span<const Eigen::VectorXd> x2_per_tuning, std::span<const int> removed_counts,
                             const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                             std::string basis = {});

}  // namespace spconf
