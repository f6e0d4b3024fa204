#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spconf/grid.hpp"
#include "spconf/tprs.hpp"

namespace spconf {

struct BandwidthResult {
  std::optional<double> k_hat;  // nullopt = the kernel never crosses zero
  std::vector<double> distances;
  std::vector<double> profile;

  bool defined() const { return k_hat.has_value(); }
};

struct LoessConfig {
  double span = 0.1;
  int degree = 1;
  int eval_points = 512;
};

/// Local polynomial regression with tricube weights over the q = floor(span * n)
/// nearest neighbours, evaluated at `eval_at`.
std::vector<double> loess_fit(std::span<const double> xs, std::span<const double> ys,
                              const LoessConfig& config, std::span<const double> eval_at);

struct SmootherBandwidthOptions {
  /// With more locations than this, the median is taken over a fixed-seed
  /// subsample of `subsample_columns` columns.
  int max_columns = 1000;
  int subsample_columns = 500;
  std::uint64_t seed = 0xb7d3ull;
};

/// k-hat of a linear smoother: loess-smooth each column of S against the
/// distances from its location, take the pointwise median across columns on
/// a common distance grid, and report where it first crosses zero.
BandwidthResult effective_bandwidth_smoother(const SmoothingMatrix& S, const Eigen::MatrixX2d& locations,
                                             const LoessConfig& config = {},
                                             const SmootherBandwidthOptions& options = {});

/// Same, with S = H H^T for an orthonormal basis H (S is never formed).
BandwidthResult effective_bandwidth_smoother(const BasisMatrix& orthonormal_basis,
                                             const Eigen::MatrixX2d& locations,
                                             const LoessConfig& config = {},
                                             const SmootherBandwidthOptions& options = {});

/// k-hat of the high-pass filter: first zero crossing of the filter kernel's
/// profile along the coordinate axes, in domain units.
BandwidthResult effective_bandwidth_filter(double cutoff, const Grid& grid);

/// k-hat of level-L wavelet thresholding: domain_width * 2^-L.
BandwidthResult effective_bandwidth_wavelet(int L, double domain_width = 1.0);

/// Linear-interpolated first crossing from positive to <= 0, starting the
/// scan at index `start`. nullopt if there is none.
std::optional<double> first_zero_crossing(std::span<const double> xs, std::span<const double> ys,
                                          std::size_t start = 0);

}  // namespace spconf
