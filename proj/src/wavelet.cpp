#include "spconf/wavelet.hpp"

#include <string>
#include <vector>

#include "spconf/errors.hpp"

namespace spconf {

namespace {

struct FilterPair {
  std::vector<double> low;
  std::vector<double> high;
};

FilterPair filters(int family) {
  auto h = daubechies_lowpass(family);
  FilterPair f{std::vector<double>(h.begin(), h.end()), std::vector<double>(h.size())};
  const auto L = h.size();
  for (std::size_t m = 0; m < L; ++m) {
    f.high[m] = ((m % 2) ? -1.0 : 1.0) * h[L - 1 - m];
  }
  return f;
}

// One periodized analysis step on a strided sequence of even length n.
void analyze(double* data, int n, int stride, const FilterPair& f, std::vector<double>& tmp) {
  tmp.assign(n, 0.0);
  const int half = n / 2;
  const int L = static_cast<int>(f.low.size());
  for (int k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (int m = 0; m < L; ++m) {
      const double s = data[static_cast<std::size_t>((2 * k + m) % n) * stride];
      a += f.low[m] * s;
      d += f.high[m] * s;
    }
    tmp[k] = a;
    tmp[half + k] = d;
  }
  for (int i = 0; i < n; ++i) data[static_cast<std::size_t>(i) * stride] = tmp[i];
}

// Transpose of analyze(): the periodized filter bank is orthogonal.
void synthesize(double* data, int n, int stride, const FilterPair& f, std::vector<double>& tmp) {
  tmp.assign(n, 0.0);
  const int half = n / 2;
  const int L = static_cast<int>(f.low.size());
  for (int k = 0; k < half; ++k) {
    const double a = data[static_cast<std::size_t>(k) * stride];
    const double d = data[static_cast<std::size_t>(half + k) * stride];
    for (int m = 0; m < L; ++m) tmp[(2 * k + m) % n] += f.low[m] * a + f.high[m] * d;
  }
  for (int i = 0; i < n; ++i) data[static_cast<std::size_t>(i) * stride] = tmp[i];
}

int dyadic_levels(const Grid& g) {
  if (g.M != g.N || !is_power_of_two(g.M)) {
    throw InvalidArgument("dwt2: field must be square with power-of-two side (got " +
                          std::to_string(g.M) + "x" + std::to_string(g.N) +
                          "); embed it with embed_dyadic first");
  }
  int J = 0;
  while ((1 << J) < g.M) ++J;
  return J;
}

}  // namespace

double WaveletDecomposition::detail(int level, Orientation o, int i, int j) const {
  if (level < 0 || level >= levels) throw InvalidArgument("detail: level out of range");
  const int w = 1 << level;
  if (i < 0 || i >= w || j < 0 || j >= w) throw InvalidArgument("detail: index out of range");
  switch (o) {
    case Orientation::horizontal: return at(w + i, j);
    case Orientation::vertical: return at(i, w + j);
    case Orientation::diagonal: return at(w + i, w + j);
  }
  return 0.0;
}

WaveletDecomposition dwt2(const Field& field, int family) {
  const int J = dyadic_levels(field.grid);
  const FilterPair f = filters(family);
  const int side = field.grid.M;
  WaveletDecomposition d{side, J, family, field.filled(0.0)};
  std::vector<double> tmp;
  double* base = d.coefficients.data();
  for (int n = side; n >= 2; n /= 2) {
    for (int r = 0; r < n; ++r) analyze(base + static_cast<std::size_t>(r) * side, n, 1, f, tmp);
    for (int c = 0; c < n; ++c) analyze(base + c, n, side, f, tmp);
  }
  return d;
}

Field idwt2(const WaveletDecomposition& decomp, const Grid& grid) {
  const int J = dyadic_levels(grid);
  if (J != decomp.levels || grid.M != decomp.side) {
    throw InvalidArgument("idwt2: decomposition does not match grid");
  }
  const FilterPair f = filters(decomp.family);
  Eigen::VectorXd values = decomp.coefficients;
  std::vector<double> tmp;
  double* base = values.data();
  const int side = decomp.side;
  for (int n = 2; n <= side; n *= 2) {
    for (int c = 0; c < n; ++c) synthesize(base + c, n, side, f, tmp);
    for (int r = 0; r < n; ++r) synthesize(base + static_cast<std::size_t>(r) * side, n, 1, f, tmp);
  }
  return Field(grid, std::move(values));
}

WaveletDecomposition threshold_levels(const WaveletDecomposition& decomp, int L) {
  if (L < 0 || L >= decomp.levels) {
    throw InvalidArgument("threshold_levels: L must be in [0, " + std::to_string(decomp.levels - 1) +
                          "] (got " + std::to_string(L) + ")");
  }
  WaveletDecomposition out = decomp;
  const int w = 2 << L;
  for (int r = 0; r < w; ++r)
    for (int c = 0; c < w; ++c) out.at(c, r) = 0.0;
  return out;
}

long thresholded_count(int L) { return 1L << (2 * (L + 1)); }

Field wavelet_preadjust(const Field& field, int L, int family) {
  Field out = idwt2(threshold_levels(dwt2(field, family), L), field.grid);
  if (!field.mask.empty()) {
    out.mask = field.mask;
    for (int s = 0; s < out.grid.size(); ++s) {
      if (!out.mask[s]) out.values[s] = 0.0;
    }
  }
  return out;
}

}  // namespace spconf
