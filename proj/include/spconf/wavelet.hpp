#pragma once

#include <span>

#include "spconf/grid.hpp"

namespace spconf {

/// Low-pass filter of the Daubechies wavelet with the given number of
/// vanishing moments (1 = Haar, ..., 10).
std::span<const double> daubechies_lowpass(int vanishing_moments);

enum class Orientation { horizontal, vertical, diagonal };

/// Full periodic 2-D DWT of a 2^J x 2^J field, stored in the usual pyramid
/// layout: entry (0, 0) is the scaling coefficient and the level-l details
/// (level 0 = coarsest) fill the three 2^l x 2^l blocks between 2^l and
/// 2^(l+1) in each direction.
struct WaveletDecomposition {
  int side = 0;
  int levels = 0;  // J
  int family = 4;
  Eigen::VectorXd coefficients;  // row-major side x side

  double& at(int col, int row) { return coefficients[static_cast<Eigen::Index>(row) * side + col]; }
  double at(int col, int row) const { return coefficients[static_cast<Eigen::Index>(row) * side + col]; }

  double scaling() const { return coefficients[0]; }
  /// Detail coefficient (i, j) of the given level and orientation,
  /// 0 <= i, j < 2^level. Horizontal = high-pass along u.
  double detail(int level, Orientation o, int i, int j) const;
};

/// Forward transform. Throws InvalidArgument unless the field is square
/// with power-of-two side (see embed_dyadic). Masked-out cells count as 0.
WaveletDecomposition dwt2(const Field& field, int family = 4);

/// Inverse transform back onto `grid` (which must be 2^J square).
Field idwt2(const WaveletDecomposition& decomp, const Grid& grid);

/// Zero the scaling coefficient and all detail levels 0..L.
WaveletDecomposition threshold_levels(const WaveletDecomposition& decomp, int L);

/// Number of coefficients removed by threshold_levels(., L): 4^(L+1).
long thresholded_count(int L);

/// inverse(threshold(forward(x))). Masked-out cells stay masked.
Field wavelet_preadjust(const Field& field, int L, int family = 4);

}  // namespace spconf
