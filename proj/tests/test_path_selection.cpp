#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "spconf/errors.hpp"
#include "spconf/inference.hpp"
#include "spconf/path.hpp"
#include "spconf/selection.hpp"
#include "spconf/tprs.hpp"
#include "test_util.hpp"

using namespace spconf;

namespace {

struct Fixture {
  Cohort cohort;
  BasisMatrix basis;
};

Fixture make_fixture(int n, int cols, int p, bool weighted, std::uint64_t seed) {
  Fixture fx;
  auto pts = testutil::uniform_points(n, seed);
  fx.basis = tprs_basis(pts, cols + 3);
  fx.basis.values = fx.basis.values.leftCols(cols).eval();
  Cohort& c = fx.cohort;
  c.location.resize(n);
  for (int i = 0; i < n; ++i) c.location[i] = i;
  const Eigen::VectorXd smooth = fx.basis.values.leftCols(4) * Eigen::Vector4d(1.0, -0.5, 0.3, 0.2);
  c.x = smooth + testutil::normals(n, seed + 1);
  c.z.resize(n, p);
  for (int j = 0; j < p; ++j) c.z.col(j) = testutil::normals(n, seed + 10 + j);
  c.y = 0.7 * c.x + 2.0 * smooth + testutil::normals(n, seed + 2);
  if (p > 0) c.y += c.z.rowwise().sum();
  if (weighted) {
    Eigen::VectorXd w(n);
    std::mt19937_64 rng(seed + 3);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int i = 0; i < n; ++i) w[i] = u(rng);
    c.weights = w;
  }
  return fx;
}

PathEntry entry(double tuning, double beta, double se) {
  PathEntry e;
  e.tuning = tuning;
  e.estimate = Estimate::make(beta, se, tuning);
  e.full = FitSummary{0.0, 100, 3};
  return e;
}

AdjustmentPath beta_path(const std::vector<double>& betas) {
  std::vector<PathEntry> es;
  for (std::size_t i = 0; i < betas.size(); ++i) es.push_back(entry(static_cast<double>(i + 1), betas[i], 0.1));
  return AdjustmentPath(es);
}

AdjustmentPath ic_path(const std::vector<double>& loglik, const std::vector<int>& params, bool with_ne) {
  std::vector<PathEntry> es;
  for (std::size_t i = 0; i < loglik.size(); ++i) {
    PathEntry e = entry(static_cast<double>(i + 3), 1.0, 0.1);
    e.full = FitSummary{loglik[i], 500, params[i]};
    if (with_ne) e.no_exposure = FitSummary{loglik[i] - 1.0, 500, params[i] - 1};
    es.push_back(e);
  }
  return AdjustmentPath(es);
}

}  // namespace

TEST_SUITE("path") {

TEST_CASE("outcome path matches direct regressions") {
  for (bool weighted : {false, true}) {
    for (int p : {0, 2}) {
      CAPTURE(weighted);
      CAPTURE(p);
      auto fx = make_fixture(300, 25, p, weighted, 41);
      const std::vector<int> dfs{0, 3, 7, 12, 25};
      auto path = outcome_adjusted_path(fx.cohort, fx.basis, dfs);
      REQUIRE(path.size() == dfs.size());
      for (std::size_t i = 0; i < dfs.size(); ++i) {
        auto direct = fit_outcome_adjusted(fx.cohort, fx.basis.leading(dfs[i]));
        CHECK(path[i].estimate.beta_hat == doctest::Approx(direct.estimate.beta_hat).epsilon(1e-9));
        CHECK(path[i].estimate.se == doctest::Approx(direct.estimate.se).epsilon(1e-8));
        CHECK(path[i].full.log_lik == doctest::Approx(direct.fit.summary.log_lik).epsilon(1e-9));
        CHECK(path[i].full.n_params == direct.fit.summary.n_params);

        // No-exposure model: y on [1, z, H_m].
        const int m = dfs[i];
        Eigen::MatrixXd X(fx.cohort.n(), 1 + p + m);
        X.col(0).setOnes();
        if (p > 0) X.middleCols(1, p) = fx.cohort.z;
        if (m > 0) X.rightCols(m) = fx.basis.values.leftCols(m);
        auto ne = fit_ols(fx.cohort.y, X, fx.cohort.weights, RankPolicy::drop);
        REQUIRE(path[i].no_exposure.has_value());
        CHECK(path[i].no_exposure->log_lik == doctest::Approx(ne.summary.log_lik).epsilon(1e-9));
        CHECK(path[i].no_exposure->n_params == ne.summary.n_params);
      }
    }
  }
}

TEST_CASE("pre-adjusted path matches direct projection") {
  for (bool weighted : {false, true}) {
    CAPTURE(weighted);
    auto fx = make_fixture(250, 20, 1, weighted, 77);
    const std::vector<int> dfs{2, 5, 11, 20};
    auto path = preadjusted_path(fx.cohort, fx.basis, dfs, fx.cohort.weights);
    for (std::size_t i = 0; i < dfs.size(); ++i) {
      const auto lead = fx.basis.leading(dfs[i]);
      auto parts = weighted ? project_decompose(fx.cohort.x, lead, *fx.cohort.weights)
                            : project_decompose(fx.cohort.x, lead);
      auto direct = fit_preadjusted(fx.cohort, parts.x1, parts.x2, fx.cohort.weights, dfs[i]);
      CHECK(path[i].estimate.beta_hat == doctest::Approx(direct.estimate.beta_hat).epsilon(1e-8));
      CHECK(path[i].estimate.se == doctest::Approx(direct.estimate.se).epsilon(1e-7));
      CHECK(path[i].full.log_lik == doctest::Approx(direct.fit.summary.log_lik).epsilon(1e-9));
      CHECK(path[i].full.n_params == direct.fit.summary.n_params);
      CHECK(path[i].estimate.tuning == dfs[i]);
    }
  }
}

TEST_CASE("paths reject bad tuning grids") {
  auto fx = make_fixture(60, 8, 0, false, 5);
  const std::vector<int> unsorted{3, 2};
  const std::vector<int> too_wide{3, 9};
  CHECK_THROWS_AS(outcome_adjusted_path(fx.cohort, fx.basis, unsorted), InvalidArgument);
  CHECK_THROWS_AS(outcome_adjusted_path(fx.cohort, fx.basis, too_wide), InvalidArgument);
  CHECK_THROWS_AS(preadjusted_path(fx.cohort, fx.basis, too_wide), InvalidArgument);
  std::vector<PathEntry> es{entry(2, 1, 1), entry(2, 1, 1)};
  CHECK_THROWS_AS(AdjustmentPath{es}, InvalidArgument);
}

TEST_CASE("exposure in the span fails on the path") {
  auto fx = make_fixture(80, 10, 0, false, 9);
  fx.cohort.x = fx.basis.values.col(1) + 2.0 * fx.basis.values.col(4);
  const std::vector<int> dfs{3, 6};
  CHECK_THROWS_AS(outcome_adjusted_path(fx.cohort, fx.basis, dfs), RankDeficientError);
}

TEST_CASE("filtered path uses the supplied split") {
  auto fx = make_fixture(120, 6, 0, false, 13);
  const std::vector<double> tunings{1.0, 2.0};
  std::vector<Eigen::VectorXd> x2s;
  std::vector<int> removed{3, 6};
  for (int m : removed) x2s.push_back(project_decompose(fx.cohort.x, fx.basis.leading(m)).x2);
  auto path = filtered_path(fx.cohort, tunings, x2s, removed, std::nullopt, "fourier");
  CHECK(path.basis() == "fourier");
  CHECK_FALSE(path[0].no_exposure.has_value());
  auto pre = preadjusted_path(fx.cohort, fx.basis, std::vector<int>{3, 6});
  CHECK(path[1].estimate.beta_hat == doctest::Approx(pre[1].estimate.beta_hat).epsilon(1e-9));
  const std::vector<int> short_removed{3};
  CHECK_THROWS_AS(filtered_path(fx.cohort, tunings, x2s, short_removed), InvalidArgument);
}

}  // TEST_SUITE("path")

TEST_SUITE("selection") {

TEST_CASE("knee rule on a worked sequence") {
  auto path = beta_path({2.0, 1.2, 1.05, 1.04, 1.06});
  auto out = select_knee(path);
  CHECK(out.chosen_tuning == 3.0);
  CHECK_FALSE(out.no_knee);
  REQUIRE(out.criterion.size() == 5);
  CHECK(out.criterion[0] == doctest::Approx(-0.8));
  CHECK(out.criterion[3] == doctest::Approx(0.02));
  CHECK(std::isnan(out.criterion[4]));
}

TEST_CASE("knee rule without curvature falls back to the largest m") {
  auto out = select_knee(beta_path({1.0, 1.5, 2.0, 2.5, 3.0, 3.5}));
  CHECK(out.no_knee);
  CHECK(out.chosen_tuning == 6.0);
  CHECK_THROWS_AS(select_knee(beta_path({1.0, 2.0, 3.0})), InvalidArgument);
}

TEST_CASE("knee rule ignores a constant shift") {
  const std::vector<double> b{3.0, 2.1, 1.7, 1.6, 1.62, 1.5, 1.49};
  std::vector<double> shifted = b;
  for (auto& v : shifted) v += 10.0;
  CHECK(select_knee(beta_path(b)).chosen_index == select_knee(beta_path(shifted)).chosen_index);
}

TEST_CASE("mse rule worked example") {
  std::vector<PathEntry> es{entry(1, 1.5, 0.1), entry(2, 1.1, 0.2), entry(3, 1.0, 0.3)};
  auto out = select_mse(AdjustmentPath(es));
  CHECK(out.chosen_tuning == 2.0);
  CHECK(out.criterion[0] == doctest::Approx(0.26));
  CHECK(out.criterion[1] == doctest::Approx(0.05));
  CHECK(out.criterion[2] == doctest::Approx(0.09));
  CHECK(out.estimate.beta_hat == 1.1);
}

TEST_CASE("mse rule details") {
  std::vector<PathEntry> flat{entry(1, 1.0, 0.1), entry(2, 1.0, 0.2), entry(3, 1.0, 0.3)};
  CHECK(select_mse(AdjustmentPath(flat)).chosen_tuning == 1.0);
  std::vector<PathEntry> tie{entry(1, 1.2, 0.0), entry(2, 0.8, 0.0), entry(3, 1.0, 0.3)};
  // Both ends of the tie are 0.04 away; the smaller m wins.
  CHECK(select_mse(AdjustmentPath(tie), 3.0).chosen_tuning == 1.0);
  std::vector<PathEntry> single{entry(4, 0.5, 0.2)};
  auto one = select_mse(AdjustmentPath(single));
  CHECK(one.chosen_tuning == 4.0);
  CHECK(one.criterion[0] == doctest::Approx(0.04));
  CHECK_THROWS_AS(select_mse(AdjustmentPath(flat), 7.0), InvalidArgument);
  auto mid = select_mse(AdjustmentPath(flat), 2.0);
  CHECK(mid.criterion[1] == doctest::Approx(0.04));
}

TEST_CASE("information criteria") {
  // Increasing criterion: smallest m.
  auto inc = ic_path({-100, -101, -102}, {3, 4, 5}, true);
  CHECK(select_ic(inc, Criterion::aic, false).chosen_tuning == 3.0);
  CHECK(select_ic(inc, Criterion::bic, true).chosen_tuning == 3.0);
  // Equal AIC at two entries: smaller m.
  auto tie = ic_path({-100, -95, -98, -94}, {3, 5, 4, 6}, false);
  auto out = select_ic(tie, Criterion::aic, false);
  CHECK(out.criterion[1] == doctest::Approx(out.criterion[3]));
  CHECK(out.chosen_index == 1);
  CHECK(out.criterion[0] == doctest::Approx(2.0 * 4 + 200.0));
  CHECK(select_ic(tie, Criterion::bic, false).criterion[0] == doctest::Approx(4 * std::log(500.0) + 200.0));
  CHECK_THROWS_AS(select_ic(tie, Criterion::aic, true), InvalidArgument);
  CHECK_THROWS_AS(select(tie, Rule::bic_ne), InvalidArgument);
}

TEST_CASE("rule choice is invariant to affine rescaling of log likelihoods") {
  auto fx = make_fixture(200, 30, 0, false, 101);
  std::vector<int> dfs;
  for (int m = 3; m <= 30; m += 3) dfs.push_back(m);
  auto path = outcome_adjusted_path(fx.cohort, fx.basis, dfs);
  auto a = select_ic(path, Criterion::aic, false);
  // Shifting every log likelihood leaves the argmin alone.
  std::vector<PathEntry> es = path.entries();
  for (auto& e : es) e.full.log_lik = e.full.log_lik + 123.0;
  CHECK(select_ic(AdjustmentPath(es), Criterion::aic, false).chosen_index == a.chosen_index);
  for (Rule r : {Rule::aic, Rule::bic, Rule::aic_ne, Rule::bic_ne, Rule::mse, Rule::knee}) {
    auto o = select(path, r);
    CHECK(o.rule == rule_name(r));
    CHECK(path.find(o.chosen_tuning).has_value());
  }
}

TEST_CASE("rule names") {
  for (Rule r : {Rule::aic, Rule::bic, Rule::aic_ne, Rule::bic_ne, Rule::mse, Rule::knee}) {
    CHECK(parse_rule(rule_name(r)) == r);
  }
  CHECK(rule_name(Rule::aic_ne) == "aic-ne");
  CHECK(rule_needs_no_exposure(Rule::bic_ne));
  CHECK_FALSE(rule_needs_no_exposure(Rule::knee));
  CHECK_THROWS_AS(parse_rule("cv"), InvalidArgument);
}

}  // TEST_SUITE("selection")
