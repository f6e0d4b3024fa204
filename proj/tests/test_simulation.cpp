#include <omp.h>

#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "spconf/errors.hpp"
#include "spconf/inference.hpp"
#include "spconf/simulation.hpp"
#include "spconf/spectral.hpp"
#include "spconf/tprs.hpp"
#include "test_util.hpp"

using namespace spconf;

namespace {

double energy(const Eigen::VectorXd& v) { return v.squaredNorm(); }

SimulationScenario small_scenario() {
  SimulationScenario s;
  s.grid_side = 32;
  s.n = 150;
  s.replications = 4;
  s.seed = 11;
  s.battery.tprs_dfs = {3, 5, 8, 12, 16};
  s.battery.fourier_cutoffs = {1, 2, 3, 4, 6};
  return s;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("exponential correlation") {
  CHECK(exponential_correlation(0.0, 0.3) == 1.0);
  CHECK(exponential_correlation(0.3, 0.3) == doctest::Approx(std::exp(-3.0)));
  CHECK(exponential_correlation(0.1, 0.2, 1.0) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("gp draws are standardized and seed dependent") {
  const Grid g = Grid::unit_square(48);
  auto a = gp_exponential(g, 0.2, 1);
  auto b = gp_exponential(g, 0.2, 2);
  auto a2 = gp_exponential(g, 0.2, 1);
  CHECK(a.values.mean() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((a.values.array() - a.values.mean()).square().mean() == doctest::Approx(1.0));
  CHECK(a.values == a2.values);
  CHECK((a.values - b.values).norm() > 1.0);
}

TEST_CASE("gp empirical variogram matches the covariance") {
  const Grid g = Grid::unit_square(128);
  const double range = 0.4;
  GpOptions opts;
  opts.standardize = false;
  const std::vector<int> lags{6, 13, 26};  // about 0.05, 0.1, 0.2
  std::vector<double> gamma(lags.size(), 0.0);
  std::vector<double> count(lags.size(), 0.0);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto f = gp_exponential(g, range, seed, opts);
    for (std::size_t k = 0; k < lags.size(); ++k) {
      const int h = lags[k];
      for (int r = 0; r < g.N; ++r) {
        for (int c = 0; c + h < g.M; ++c) {
          const double d1 = f(c + h, r) - f(c, r);
          const double d2 = f(r, c + h) - f(r, c);
          gamma[k] += 0.5 * (d1 * d1 + d2 * d2);
          count[k] += 2.0;
        }
      }
    }
  }
  for (std::size_t k = 0; k < lags.size(); ++k) {
    const double d = lags[k] * g.spacing_u;
    CAPTURE(d);
    CHECK(std::abs(gamma[k] / count[k] - (1.0 - exponential_correlation(d, range))) < 0.05);
  }
}

TEST_CASE("confounder surfaces have their intended resolution") {
  const Grid g = Grid::unit_square(128);
  for (auto kind : kAllConfounders) {
    auto f = confounder_surface(kind, g);
    CAPTURE(confounder_name(kind));
    CHECK(f.values.mean() == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(f.values.squaredNorm() / g.size() == doctest::Approx(1.0));
    CHECK(parse_confounder(confounder_name(kind)) == kind);
  }
  // f3 is built from frequencies below 7 only.
  auto f3 = confounder_surface(ConfounderKind::f3, g);
  CHECK(highpass_preadjust(f3, 7.0).values.cwiseAbs().maxCoeff() < 1e-6);
  // f1 lies in the span of its generating basis.
  auto f1 = confounder_surface(ConfounderKind::f1, g);
  auto H = confounder_tprs_basis(ConfounderKind::f1, g);
  CHECK(project_decompose(f1.values, H).x2.cwiseAbs().maxCoeff() < 1e-6);
  // f6 carries substantial energy above frequency 7.
  auto f6 = confounder_surface(ConfounderKind::f6, g);
  CHECK(energy(highpass_preadjust(f6, 7.0).values) > 0.3 * energy(f6.values));
  // f4 reaches higher frequencies than f3.
  auto f4 = confounder_surface(ConfounderKind::f4, g);
  CHECK(energy(highpass_preadjust(f4, 7.0).values) > 0.3 * energy(f4.values));
  CHECK_THROWS_AS(parse_confounder("f7"), InvalidArgument);
}

TEST_CASE("theta calibration") {
  const Grid g = Grid::unit_square(32);
  auto f = confounder_surface(ConfounderKind::f3, g);
  auto gs = gp_exponential(g, 0.05, 99);
  CHECK(population_bias(gs, f, 0.0) == doctest::Approx(Eigen::VectorXd(gs.values).dot(f.values) / gs.values.squaredNorm()));
  for (double target : {0.0, 0.1, 0.2, 0.5}) {
    const double theta = calibrate_theta(gs, f, target);
    CHECK(std::abs(population_bias(gs, f, theta) - target) <= 1e-8);
  }
  // Exactly orthogonal g: no mixing needed for zero bias.
  Eigen::VectorXd go = gs.values - f.values * (f.values.dot(gs.values) / f.values.squaredNorm());
  Field gorth(g, go);
  CHECK(std::abs(calibrate_theta(gorth, f, 0.0)) < 1e-8);
  CHECK_THROWS_AS(calibrate_theta(gs, f, 1.5), InvalidArgument);
}

TEST_CASE("calibrated bias shows up in a large unadjusted fit") {
  SimulationScenario s;
  s.grid_side = 128;
  s.confounder = ConfounderKind::f5;
  auto surf = prepare_surfaces(s);
  auto cells = sample_locations(s.grid(), 100000, SamplingScheme::uniform_with_replacement, 5);
  Cohort c;
  c.location = cells;
  c.x = surf.x.gather(cells);
  c.y = c.x + surf.f.gather(cells);
  c.z.resize(c.n(), 0);
  CHECK(std::abs(fit_unadjusted(c).estimate.beta_hat - 1.2) < 0.01);
}

TEST_CASE("scenario validation") {
  SimulationScenario s = small_scenario();
  s.sigma = 0.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = small_scenario();
  s.n = 2;
  CHECK_THROWS_AS(run_scenario(s), InvalidArgument);
  CHECK(SimulationScenario::paper_scale().grid_side == 512);
  CHECK(SimulationScenario::paper_scale().replications == 1000);
}

TEST_CASE("runs are deterministic and thread independent") {
  const auto s = small_scenario();
  omp_set_num_threads(1);
  auto a = run_scenario(s);
  omp_set_num_threads(3);
  auto b = run_scenario(s);
  omp_set_num_threads(1);
  std::ostringstream ra, rb, sa, sb;
  write_records_csv(ra, a);
  write_records_csv(rb, b);
  write_summary_csv(sa, {a});
  write_summary_csv(sb, {b});
  CHECK(ra.str() == rb.str());
  CHECK(sa.str() == sb.str());
  CHECK(ra.str().substr(0, ra.str().find('\n')) == "rep,estimator,selector,tuning,beta,se,ci_lo,ci_hi,no_knee");

  REQUIRE(a.find("unadjusted", "fixed") != nullptr);
  REQUIRE(a.find("tprs-outcome", "fixed", 8.0) != nullptr);
  REQUIRE(a.find("fourier", "mse") != nullptr);
  REQUIRE(a.find("wavelet", "knee") != nullptr);
  REQUIRE(a.find("tprs-preadjust", "bic-ne") != nullptr);
  CHECK(a.find("fourier", "aic-ne") == nullptr);  // filtered paths have no no-exposure fits
  CHECK(a.find("unadjusted", "fixed")->reps == 4);
}

TEST_CASE("multiple betas share the replication draws") {
  auto s = small_scenario();
  s.battery.wavelet = false;
  s.battery.fourier = false;
  auto both = run_scenario_betas(s, {1.0, 0.0});
  s.beta = 0.0;
  auto zero = run_scenario(s);
  std::ostringstream x, y;
  write_records_csv(x, both[1]);
  write_records_csv(y, zero);
  CHECK(x.str() == y.str());
  CHECK(both[0].theta == zero.theta);
}

TEST_CASE("summary statistics") {
  std::vector<ReplicationRecord> recs;
  const double betas[] = {0.9, 1.3, 1.1, 0.5};
  for (int r = 0; r < 4; ++r) recs.push_back({r, "fourier", "fixed", 2.0, betas[r], 0.2, false});
  for (int r = 0; r < 4; ++r) recs.push_back({r, "fourier", "knee", 2.0 + r, betas[r], 0.2, false});
  auto rows = summarize(recs, 1.0);
  REQUIRE(rows.size() == 2);
  const auto& row = rows[0];
  CHECK(row.mean == doctest::Approx(0.95));
  CHECK(row.bias == doctest::Approx(-0.05));
  CHECK(row.mse == doctest::Approx(row.bias * row.bias + row.sd * row.sd));
  CHECK(row.mse == doctest::Approx((0.01 + 0.09 + 0.01 + 0.25) / 4.0));
  CHECK(row.coverage == doctest::Approx(0.75));  // half-width 0.392 misses only 0.5
  CHECK(row.reject_rate == doctest::Approx(1.0));
  CHECK(std::isnan(rows[1].tuning));
  CHECK(rows[1].mean_tuning == doctest::Approx(3.5));
}

TEST_CASE("replication failures name the replication") {
  auto s = small_scenario();
  s.n = 10;
  s.battery.fourier = false;
  s.battery.wavelet = false;
  s.battery.tprs_dfs = {3, 10};  // df = n puts the exposure in the span
  try {
    run_scenario(s);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("replication ", 0) == 0);
  }
}

}  // TEST_SUITE("simulation")
