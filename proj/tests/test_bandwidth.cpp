#include <cmath>

#include "doctest.h"
#include "spconf/bandwidth.hpp"
#include "spconf/errors.hpp"
#include "test_util.hpp"

using namespace spconf;

TEST_SUITE("bandwidth") {

TEST_CASE("loess reproduces lines and constants") {
  std::vector<double> xs, line, flat;
  for (int i = 0; i < 50; ++i) {
    const double x = std::sqrt(i + 0.3);
    xs.push_back(x);
    line.push_back(2.0 - 0.7 * x);
    flat.push_back(3.25);
  }
  const std::vector<double> at{0.5, 1.0, 3.3, 7.0};
  LoessConfig cfg;
  cfg.span = 0.3;
  auto fl = loess_fit(xs, line, cfg, at);
  auto ff = loess_fit(xs, flat, cfg, at);
  for (std::size_t i = 0; i < at.size(); ++i) {
    CHECK(std::abs(fl[i] - (2.0 - 0.7 * at[i])) < 1e-8);
    CHECK(std::abs(ff[i] - 3.25) < 1e-10);
  }
  cfg.degree = 2;
  std::vector<double> quad;
  for (double x : xs) quad.push_back(1.0 + x - 0.5 * x * x);
  auto fq = loess_fit(xs, quad, cfg, at);
  for (std::size_t i = 0; i < at.size(); ++i) CHECK(std::abs(fq[i] - (1.0 + at[i] - 0.5 * at[i] * at[i])) < 1e-8);
}

TEST_CASE("loess matches statsmodels lowess (frac 0.3, no robustness steps)") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 40; ++i) {
    const double x = i / 40.0;
    xs.push_back(x);
    ys.push_back(std::sin(6.0 * x) + 0.1 * std::cos(37.0 * x));
  }
  LoessConfig cfg;
  cfg.span = 0.3;
  const std::vector<double> at{xs[0], xs[10], xs[20], xs[40]};
  const double expected[] = {0.06506976281355259, 0.9427193404727304, 0.13088351368615597, -0.35262233127546705};
  auto fit = loess_fit(xs, ys, cfg, at);
  for (int i = 0; i < 4; ++i) CHECK(fit[i] == doctest::Approx(expected[i]).epsilon(1e-10));
}

TEST_CASE("loess argument errors") {
  std::vector<double> xs{0, 1, 2, 3}, ys{1, 2, 3, 4};
  LoessConfig cfg;
  cfg.span = 0.5;
  CHECK_THROWS_AS(loess_fit(xs, ys, cfg, xs), InvalidArgument);  // q = 2 < degree + 2
  cfg.span = 1.0;
  cfg.degree = 3;
  CHECK_THROWS_AS(loess_fit(xs, ys, cfg, xs), InvalidArgument);
  cfg.degree = 1;
  cfg.span = 0.0;
  CHECK_THROWS_AS(loess_fit(xs, ys, cfg, xs), InvalidArgument);
}

TEST_CASE("first zero crossing interpolates") {
  const std::vector<double> xs{0, 1, 2, 3, 4};
  const std::vector<double> ys{1, 0.5, -0.5, 0.2, -1};
  CHECK(*first_zero_crossing(xs, ys) == doctest::Approx(1.5));
  CHECK(*first_zero_crossing(xs, ys, 2) == doctest::Approx(3.0 + 0.2 / 1.2));
  const std::vector<double> pos{1, 1, 1, 1, 1};
  CHECK(!first_zero_crossing(xs, pos));
}

TEST_CASE("wavelet bandwidth is 2^-L") {
  CHECK(*effective_bandwidth_wavelet(0).k_hat == 1.0);
  CHECK(*effective_bandwidth_wavelet(3).k_hat == 0.125);
  CHECK(*effective_bandwidth_wavelet(9).k_hat == 1.0 / 512);
  CHECK(*effective_bandwidth_wavelet(2, 4.0).k_hat == 1.0);
  CHECK_THROWS_AS(effective_bandwidth_wavelet(-1), InvalidArgument);
}

TEST_CASE("Fourier bandwidth: low cutoffs never cross zero") {
  const Grid g = Grid::unit_square(512);
  CHECK(!effective_bandwidth_filter(1.0, g).defined());
  CHECK(!effective_bandwidth_filter(2.0, g).defined());
  CHECK(effective_bandwidth_filter(3.0, g).defined());
}

TEST_CASE("Fourier bandwidth is a physical scale") {
  for (double w : {5.0, 8.0, 12.0}) {
    const double coarse = *effective_bandwidth_filter(w, Grid::unit_square(256)).k_hat;
    const double fine = *effective_bandwidth_filter(w, Grid::unit_square(512)).k_hat;
    CHECK(std::abs(coarse - fine) < 0.05 * fine);
  }
}

TEST_CASE("Fourier bandwidth approaches the disk-sinc zero at high cutoffs") {
  const Grid g = Grid::unit_square(512);
  const double j11 = 3.8317059702075123;  // first zero of J1
  for (double w : {15.0, 22.4, 30.0}) {
    const double k = *effective_bandwidth_filter(w, g).k_hat;
    CHECK(std::abs(k - j11 / (2.0 * M_PI * w)) <= g.spacing_u);
  }
}

TEST_CASE("Fourier bandwidth log-log trend") {
  const Grid g = Grid::unit_square(512);
  std::vector<double> lw, lk;
  for (int w = 3; w <= 50; ++w) {
    auto r = effective_bandwidth_filter(w, g);
    REQUIRE(r.defined());
    lw.push_back(std::log(w));
    lk.push_back(std::log(*r.k_hat));
  }
  CHECK(testutil::spearman(lw, lk) < -0.95);
}

TEST_CASE("TPRS bandwidth decreases with df") {
  const Grid g = Grid::unit_square(32);
  const Eigen::MatrixX2d pts = g.coordinates();
  std::vector<double> ld, lk;
  for (int df : {10, 20, 40, 60, 85, 120, 160, 200}) {
    auto r = effective_bandwidth_smoother(tprs_basis(pts, df), pts);
    REQUIRE(r.defined());
    ld.push_back(std::log(df));
    lk.push_back(std::log(*r.k_hat));
  }
  CHECK(testutil::spearman(ld, lk) < -0.95);
}

TEST_CASE("smoother routes agree and positive smoothers are undefined") {
  const Eigen::MatrixX2d pts = testutil::uniform_points(300, 3);
  const BasisMatrix H = tprs_basis(pts, 12);
  const auto a = effective_bandwidth_smoother(H, pts);
  const auto b = effective_bandwidth_smoother(smoothing_matrix(H), pts);
  REQUIRE(a.defined());
  CHECK(*a.k_hat == doctest::Approx(*b.k_hat).epsilon(1e-10));
  const SmoothingMatrix avg{Eigen::MatrixXd::Constant(300, 300, 1.0 / 300)};
  CHECK(!effective_bandwidth_smoother(avg, pts).defined());
}

}
