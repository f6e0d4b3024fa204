#include "spconf/spectral.hpp"

#include <cmath>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "spconf/errors.hpp"

namespace spconf {

namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void transform(std::vector<std::complex<double>>& data, int M, int N, int sign) {
  if (static_cast<long>(data.size()) != static_cast<long>(M) * N) {
    throw InvalidArgument("fft2: buffer size does not match dimensions");
  }
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(N, M, ptr, ptr, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
}

}  // namespace

void fft2_inplace(std::vector<std::complex<double>>& data, int M, int N, bool inverse) {
  transform(data, M, N, inverse ? FFTW_BACKWARD : FFTW_FORWARD);
}

double effective_frequency(int p, int q, const Grid& grid) {
  if (p < 0 || p >= grid.M || q < 0 || q >= grid.N) {
    throw InvalidArgument("effective_frequency: index (" + std::to_string(p) + "," +
                          std::to_string(q) + ") out of range");
  }
  const double pa = std::min(p, grid.M - p) / grid.width();
  const double qa = std::min(q, grid.N - q) / grid.height();
  return std::sqrt(pa * pa + qa * qa);
}

FrequencyFilter::FrequencyFilter(double cutoff, const Grid& grid)
    : cutoff_(cutoff), M_(grid.M), N_(grid.N), keep_(static_cast<std::size_t>(grid.size())) {
  if (!(cutoff >= 0.0)) throw InvalidArgument("frequency filter: cutoff must be >= 0");
  for (int q = 0; q < N_; ++q) {
    for (int p = 0; p < M_; ++p) {
      const bool keep = effective_frequency(p, q, grid) > cutoff;
      keep_[static_cast<std::size_t>(q) * M_ + p] = keep ? 1 : 0;
      if (!keep) ++removed_;
    }
  }
}

Spectrum dft2(const Field& field) {
  const Grid& g = field.grid;
  Spectrum sp{g.M, g.N, std::vector<std::complex<double>>(static_cast<std::size_t>(g.size()))};
  const Eigen::VectorXd v = field.filled(0.0);
  for (int s = 0; s < g.size(); ++s) sp.coefficients[s] = v[s];
  transform(sp.coefficients, g.M, g.N, FFTW_FORWARD);
  return sp;
}

Field idft2(const Spectrum& spectrum, const Grid& grid, double* max_imag) {
  if (spectrum.M != grid.M || spectrum.N != grid.N) {
    throw InvalidArgument("idft2: spectrum dimensions do not match grid");
  }
  std::vector<std::complex<double>> data = spectrum.coefficients;
  transform(data, grid.M, grid.N, FFTW_BACKWARD);
  const double scale = 1.0 / grid.size();
  Eigen::VectorXd out(grid.size());
  double worst = 0.0;
  for (int s = 0; s < grid.size(); ++s) {
    out[s] = data[s].real() * scale;
    worst = std::max(worst, std::abs(data[s].imag() * scale));
  }
  if (max_imag) *max_imag = worst;
  return Field(grid, std::move(out));
}

Field highpass_preadjust(const Field& field, double cutoff) {
  const FrequencyFilter filter(cutoff, field.grid);
  Spectrum sp = dft2(field);
  for (int q = 0; q < sp.N; ++q) {
    for (int p = 0; p < sp.M; ++p) {
      if (!filter.keeps(p, q)) sp.at(p, q) = 0.0;
    }
  }
  Field out = idft2(sp, field.grid);
  if (!field.mask.empty()) {
    out.mask = field.mask;
    for (int s = 0; s < out.grid.size(); ++s) {
      if (!out.mask[s]) out.values[s] = 0.0;
    }
  }
  return out;
}

Field filter_kernel(double cutoff, const Grid& grid) {
  const FrequencyFilter filter(cutoff, grid);
  Spectrum sp{grid.M, grid.N, std::vector<std::complex<double>>(static_cast<std::size_t>(grid.size()))};
  for (int q = 0; q < grid.N; ++q) {
    for (int p = 0; p < grid.M; ++p) sp.at(p, q) = filter.keeps(p, q) ? 1.0 : 0.0;
  }
  return idft2(sp, grid);
}

}  // namespace spconf
