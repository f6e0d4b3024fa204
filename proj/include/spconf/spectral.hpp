#pragma once

#include <complex>
#include <vector>

#include "spconf/grid.hpp"

namespace spconf {

/// Unnormalized in-place 2-D DFT of a row-major N x M buffer (FFTW sign
/// convention: forward uses exp(-i...), inverse exp(+i...)).
void fft2_inplace(std::vector<std::complex<double>>& data, int M, int N, bool inverse = false);

/// Magnitude of the 2-D frequency (p, q) in cycles per domain unit, with
/// aliasing-aware indices p' = min(p, M - p), q' = min(q, N - q). On the unit
/// square this is sqrt(p'^2 + q'^2).
double effective_frequency(int p, int q, const Grid& grid);

/// Binary high-pass mask: keep (p, q) iff its effective frequency is
/// strictly above the cutoff.
class FrequencyFilter {
 public:
  FrequencyFilter(double cutoff, const Grid& grid);

  double cutoff() const { return cutoff_; }
  int M() const { return M_; }
  int N() const { return N_; }
  /// Mask value at column frequency p and row frequency q.
  bool keeps(int p, int q) const { return keep_[static_cast<std::size_t>(q) * M_ + p] != 0; }
  /// Number of removed spectral coefficients (including the DC term).
  int removed_count() const { return removed_; }

 private:
  double cutoff_;
  int M_, N_;
  std::vector<std::uint8_t> keep_;
  int removed_ = 0;
};

/// Unnormalized forward DFT coefficients, row-major N x M (row = v
/// frequency q, column = u frequency p).
struct Spectrum {
  int M = 0;
  int N = 0;
  std::vector<std::complex<double>> coefficients;

  std::complex<double>& at(int p, int q) { return coefficients[static_cast<std::size_t>(q) * M + p]; }
  std::complex<double> at(int p, int q) const { return coefficients[static_cast<std::size_t>(q) * M + p]; }
};

/// Forward transform of the field (masked-out cells contribute 0).
Spectrum dft2(const Field& field);

/// Inverse transform scaled by 1/(MN). The real part is returned; the
/// largest absolute imaginary residue is written to `max_imag` if given.
Field idft2(const Spectrum& spectrum, const Grid& grid, double* max_imag = nullptr);

/// High-pass pre-adjustment: remove every Fourier component with effective
/// frequency <= cutoff. Masked-out cells are zero-filled before the
/// transform and stay masked in the output.
Field highpass_preadjust(const Field& field, double cutoff);

/// Spatial kernel of the high-pass filter (inverse DFT of the mask). Cell
/// (c, r) holds the kernel at displacement (c * du, r * dv), periodically.
Field filter_kernel(double cutoff, const Grid& grid);

}  // namespace spconf
