#include "spconf/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include "spconf/errors.hpp"
#include "spconf/spectral.hpp"

namespace spconf {

namespace {

double tricube(double t) {
  if (t >= 1.0) return 0.0;
  const double a = 1.0 - t * t * t;
  return a * a * a;
}

// Sorted copy of (xs, ys) for window search.
struct SortedData {
  std::vector<double> x, y;
};

SortedData sort_pairs(std::span<const double> xs, std::span<const double> ys) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  SortedData d;
  d.x.reserve(xs.size());
  d.y.reserve(xs.size());
  for (auto i : order) {
    d.x.push_back(xs[i]);
    d.y.push_back(ys[i]);
  }
  return d;
}

double local_fit(const SortedData& d, std::size_t q, int degree, double x0) {
  const std::size_t n = d.x.size();
  // Grow the q-nearest window around the insertion point of x0.
  std::size_t hi = static_cast<std::size_t>(std::lower_bound(d.x.begin(), d.x.end(), x0) - d.x.begin());
  std::size_t lo = hi;  // window is [lo, hi)
  while (hi - lo < q) {
    if (lo == 0) {
      ++hi;
    } else if (hi == n) {
      --lo;
    } else if (x0 - d.x[lo - 1] <= d.x[hi] - x0) {
      --lo;
    } else {
      ++hi;
    }
  }
  const double h = std::max(x0 - d.x[lo], d.x[hi - 1] - x0);

  const int p = degree + 1;
  Eigen::Matrix3d XtWX = Eigen::Matrix3d::Zero();
  Eigen::Vector3d XtWy = Eigen::Vector3d::Zero();
  int support = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double dx = d.x[i] - x0;
    const double w = h > 0.0 ? tricube(std::abs(dx) / h) : 1.0;
    if (w <= 0.0) continue;
    ++support;
    const double basis[3] = {1.0, dx, dx * dx};
    for (int a = 0; a < p; ++a) {
      XtWy[a] += w * basis[a] * d.y[i];
      for (int b = 0; b < p; ++b) XtWX(a, b) += w * basis[a] * basis[b];
    }
  }
  if (support < p) {
    throw InvalidArgument("loess: fewer than " + std::to_string(p) +
                          " points with positive weight near x = " + std::to_string(x0));
  }
  if (h == 0.0) return XtWy[0] / XtWX(0, 0);
  const Eigen::MatrixXd A = XtWX.topLeftCorner(p, p);
  const Eigen::VectorXd b = XtWy.head(p);
  const Eigen::VectorXd coef = A.ldlt().solve(b);
  if (!coef.allFinite()) {
    throw InvalidArgument("loess: singular local design near x = " + std::to_string(x0));
  }
  return coef[0];
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

BandwidthResult smoother_bandwidth(const std::function<Eigen::VectorXd(Eigen::Index)>& column,
                                   const Eigen::MatrixX2d& locations, const LoessConfig& config,
                                   const SmootherBandwidthOptions& options) {
  const auto n = locations.rows();
  std::vector<Eigen::Index> cols(n);
  std::iota(cols.begin(), cols.end(), Eigen::Index{0});
  if (n > options.max_columns) {
    std::mt19937_64 rng(options.seed);
    for (int i = 0; i < options.subsample_columns; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
      std::swap(cols[i], cols[pick(rng)]);
    }
    cols.resize(options.subsample_columns);
    std::sort(cols.begin(), cols.end());
  }

  double dmax = 0.0;
  {
    // Domain diameter from the bounding box of the locations.
    const Eigen::Vector2d lo = locations.colwise().minCoeff();
    const Eigen::Vector2d hi = locations.colwise().maxCoeff();
    dmax = (hi - lo).norm();
  }
  BandwidthResult out;
  out.distances = linspace(0.0, dmax, config.eval_points);

  const auto m = static_cast<long>(cols.size());
  std::vector<std::vector<double>> fits(m);
  std::vector<std::string> errors(m);
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < m; ++c) {
    try {
      const Eigen::Index i = cols[c];
      const Eigen::VectorXd s = column(i);
      const Eigen::VectorXd d = (locations.rowwise() - locations.row(i)).rowwise().norm();
      fits[c] = loess_fit(std::span<const double>(d.data(), d.size()),
                          std::span<const double>(s.data(), s.size()), config, out.distances);
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw InvalidArgument("effective_bandwidth_smoother: " + e);
  }

  out.profile.resize(out.distances.size());
  std::vector<double> buf(m);
  for (std::size_t t = 0; t < out.distances.size(); ++t) {
    for (long c = 0; c < m; ++c) buf[c] = fits[c][t];
    std::sort(buf.begin(), buf.end());
    out.profile[t] = (m % 2) ? buf[m / 2] : 0.5 * (buf[m / 2 - 1] + buf[m / 2]);
  }
  out.k_hat = first_zero_crossing(out.distances, out.profile);
  return out;
}

// Axis profile of the periodic kernel out to half the domain, plus its first
// return to zero after the initial negative lobe.
std::optional<double> axis_crossing(const Field& kernel, bool along_u, std::vector<double>* dist,
                                    std::vector<double>* prof) {
  const Grid& g = kernel.grid;
  const int half = (along_u ? g.M : g.N) / 2;
  const double step = along_u ? g.spacing_u : g.spacing_v;
  std::vector<double> d(half + 1), k(half + 1);
  for (int c = 0; c <= half; ++c) {
    d[c] = c * step;
    k[c] = along_u ? kernel(c, 0) : kernel(0, c);
  }
  std::optional<double> crossing;
  if (k[1] < 0.0) {
    for (int c = 2; c <= half; ++c) {
      if (k[c] >= 0.0) {
        crossing = d[c - 1] + (0.0 - k[c - 1]) * (d[c] - d[c - 1]) / (k[c] - k[c - 1]);
        break;
      }
    }
  }
  if (dist) *dist = std::move(d);
  if (prof) *prof = std::move(k);
  return crossing;
}

}  // namespace

std::vector<double> loess_fit(std::span<const double> xs, std::span<const double> ys,
                              const LoessConfig& config, std::span<const double> eval_at) {
  if (xs.size() != ys.size()) throw InvalidArgument("loess: xs and ys differ in length");
  if (config.degree != 1 && config.degree != 2) throw InvalidArgument("loess: degree must be 1 or 2");
  if (!(config.span > 0.0 && config.span <= 1.0)) throw InvalidArgument("loess: span must be in (0, 1]");
  const std::size_t n = xs.size();
  const auto q = static_cast<std::size_t>(std::floor(config.span * static_cast<double>(n) + 1e-5));
  if (q < static_cast<std::size_t>(config.degree + 2)) {
    throw InvalidArgument("loess: span * n = " + std::to_string(q) + " is below degree + 2");
  }
  for (double x : xs) {
    if (!std::isfinite(x)) throw InvalidArgument("loess: non-finite x");
  }
  const SortedData d = sort_pairs(xs, ys);
  std::vector<double> out(eval_at.size());
  for (std::size_t i = 0; i < eval_at.size(); ++i) out[i] = local_fit(d, q, config.degree, eval_at[i]);
  return out;
}

std::optional<double> first_zero_crossing(std::span<const double> xs, std::span<const double> ys,
                                          std::size_t start) {
  bool seen_positive = false;
  for (std::size_t t = start; t < ys.size(); ++t) {
    if (ys[t] > 0.0) {
      seen_positive = true;
    } else if (seen_positive) {
      if (ys[t] == 0.0 || t == 0) return xs[t];
      return xs[t - 1] + (0.0 - ys[t - 1]) * (xs[t] - xs[t - 1]) / (ys[t] - ys[t - 1]);
    }
  }
  return std::nullopt;
}

BandwidthResult effective_bandwidth_smoother(const SmoothingMatrix& S, const Eigen::MatrixX2d& locations,
                                             const LoessConfig& config,
                                             const SmootherBandwidthOptions& options) {
  if (S.values.rows() != locations.rows() || S.values.cols() != locations.rows()) {
    throw InvalidArgument("effective_bandwidth_smoother: smoothing matrix does not match locations");
  }
  return smoother_bandwidth([&](Eigen::Index i) -> Eigen::VectorXd { return S.values.col(i); },
                            locations, config, options);
}

BandwidthResult effective_bandwidth_smoother(const BasisMatrix& basis, const Eigen::MatrixX2d& locations,
                                             const LoessConfig& config,
                                             const SmootherBandwidthOptions& options) {
  if (basis.rows() != locations.rows()) {
    throw InvalidArgument("effective_bandwidth_smoother: basis rows do not match locations");
  }
  const Eigen::MatrixXd& H = basis.values;
  return smoother_bandwidth(
      [&](Eigen::Index i) -> Eigen::VectorXd { return H * H.row(i).transpose(); }, locations, config,
      options);
}

BandwidthResult effective_bandwidth_filter(double cutoff, const Grid& grid) {
  if (!(cutoff >= 0.0)) throw InvalidArgument("effective_bandwidth_filter: cutoff must be >= 0");
  const Field kernel = filter_kernel(cutoff, grid);
  BandwidthResult out;
  const auto ku = axis_crossing(kernel, true, &out.distances, &out.profile);
  const auto kv = axis_crossing(kernel, false, nullptr, nullptr);
  if (ku && kv) {
    out.k_hat = std::min(*ku, *kv);
  } else if (ku) {
    out.k_hat = ku;
  } else {
    out.k_hat = kv;
  }
  return out;
}

BandwidthResult effective_bandwidth_wavelet(int L, double domain_width) {
  if (L < 0) throw InvalidArgument("effective_bandwidth_wavelet: L must be >= 0");
  BandwidthResult out;
  out.k_hat = domain_width * std::ldexp(1.0, -L);
  return out;
}

}  // namespace spconf
