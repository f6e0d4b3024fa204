#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "spconf/errors.hpp"
#include "spconf/io.hpp"
#include "test_util.hpp"

using namespace spconf;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

Field sample_field() {
  Grid g = Grid::unit_square(5, 4);
  Eigen::VectorXd v(g.size());
  for (int s = 0; s < g.size(); ++s) v[s] = std::sin(0.37 * s) / 3.0;
  std::vector<std::uint8_t> mask(g.size(), 1);
  mask[3] = 0;
  mask[17] = 0;
  return Field(g, v, mask);
}

void check_same_field(const Field& a, const Field& b) {
  REQUIRE(a.grid.M == b.grid.M);
  REQUIRE(a.grid.N == b.grid.N);
  CHECK(a.grid.spacing_u == doctest::Approx(b.grid.spacing_u));
  CHECK(a.grid.origin_v == doctest::Approx(b.grid.origin_v).epsilon(1e-12));
  for (int s = 0; s < a.grid.size(); ++s) {
    CHECK(a.valid(s) == b.valid(s));
    if (a.valid(s)) CHECK(a.values[s] == b.values[s]);
  }
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(std::nan("")) == "NA");
  CHECK(format_number(2.0) == "2");
}

TEST_CASE("cohort csv") {
  Grid g = Grid::unit_square(10);
  std::istringstream in(
      "id,u,v,x,y,z2,z1,weight\n"
      "a,0.05,0.05,1.5,2.0,7,3,1\n"
      "b,0.96,0.51,-1,0.25,8,4,2.5\n");
  auto t = read_cohort_csv(in, g);
  REQUIRE(t.cohort.n() == 2);
  CHECK(t.ids[1] == "b");
  CHECK(t.cohort.location[0] == g.index(0, 0));
  CHECK(t.cohort.location[1] == g.index(9, 5));
  CHECK(t.coordinates(1, 0) == 0.96);
  REQUIRE(t.cohort.p() == 2);
  CHECK(t.cohort.z(0, 0) == 3.0);  // z1 first regardless of column order
  CHECK(t.cohort.z(1, 1) == 8.0);
  REQUIRE(t.cohort.weights.has_value());
  CHECK((*t.cohort.weights)[1] == 2.5);
  CHECK(t.cohort.y[1] == 0.25);
}

TEST_CASE("cohort csv errors name the problem") {
  Grid g = Grid::unit_square(4);
  auto message = [&](const std::string& text) {
    std::istringstream in(text);
    try {
      read_cohort_csv(in, g);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("id,u,v,y\n1,0,0,1\n") == "line 1: cohort: missing required column 'x'");
  CHECK(message("id,u,v,x,y\n1,0,0,1,2\n2,0,0,abc,2\n").find("line 3") == 0);
  CHECK(message("id,u,v,x,y\n1,0,0,1\n").find("expected 5 fields") != std::string::npos);
  CHECK(message("id,u,v,x,y,weight\n1,0,0,1,2,0\n").find("weight must be positive") != std::string::npos);
  CHECK(message("id,u,v,x,y,z2\n1,0,0,1,2,3\n").find("z1") != std::string::npos);
  CHECK(message("id,u,v,x,y\n").find("no subjects") != std::string::npos);
}

TEST_CASE("field csv round trip keeps the mask") {
  const Field f = sample_field();
  std::stringstream buf;
  write_field_csv(buf, f);
  CHECK(first_line(buf.str()) == "u,v,value");
  auto back = read_field_csv(buf);
  check_same_field(f, back);
}

TEST_CASE("field csv infers the grid from the coordinates") {
  std::istringstream in("u,v,value\n1.5,10,1\n0.5,10,2\n0.5,12,3\n1.5,12,4\n");
  auto f = read_field_csv(in);
  CHECK(f.grid.M == 2);
  CHECK(f.grid.N == 2);
  CHECK(f.grid.spacing_v == doctest::Approx(2.0));
  CHECK(f(1, 1) == 4.0);
  CHECK(f(0, 0) == 2.0);
  std::istringstream irregular("u,v,value\n0,0,1\n1,0,1\n2.5,0,1\n0,1,1\n");
  CHECK_THROWS_AS(read_field_csv(irregular), InputError);
}

TEST_CASE("binary field round trip and header") {
  const Field f = sample_field();
  std::stringstream buf;
  write_field_binary(buf, f);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 8 + 8 * 20);
  CHECK(static_cast<unsigned char>(bytes[0]) == 5);
  CHECK(static_cast<unsigned char>(bytes[4]) == 4);
  auto back = read_field_binary(buf);
  check_same_field(f, back);

  std::stringstream extra(bytes + "x");
  CHECK_THROWS_AS(read_field_binary(extra), InputError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_field_binary(truncated), InputError);
  std::stringstream mismatch(bytes);
  CHECK_THROWS_AS(read_field_binary(mismatch, Grid::unit_square(4)), InputError);
}

TEST_CASE("output table headers") {
  std::vector<PathEntry> es(2);
  es[0].tuning = 3;
  es[0].estimate = Estimate::make(1.0, 0.5, 3, 0.25);
  es[0].full = FitSummary{-10.0, 50, 4};
  es[1].tuning = 5;
  es[1].estimate = Estimate::make(0.5, 0.25, 5);
  es[1].full = FitSummary{-9.0, 50, 6};
  es[1].no_exposure = FitSummary{-9.5, 50, 5};
  AdjustmentPath path(es, "tprs-outcome");

  std::ostringstream est;
  write_estimates_csv(est, path);
  CHECK(est.str() ==
        "basis,m,k_hat,beta,se,ci_lo,ci_hi\n"
        "tprs-outcome,3,0.25,1,0.5,0.020000000000000018,1.98\n"
        "tprs-outcome,5,undefined,0.5,0.25,0.010000000000000009,0.98999999999999999\n");

  std::ostringstream full;
  write_path_csv(full, path);
  CHECK(first_line(full.str()) ==
        "basis,m,k_hat,beta,se,ci_lo,ci_hi,log_lik,n_params,aic,bic,log_lik_ne,n_params_ne,aic_ne,bic_ne");
  CHECK(full.str().find(",NA,NA,NA,NA\n") != std::string::npos);

  SelectionOutcome o;
  o.rule = "knee";
  o.chosen_tuning = 5;
  o.estimate = es[1].estimate;
  o.no_knee = true;
  std::ostringstream sel;
  write_selection_csv(sel, {o}, {std::nullopt});
  CHECK(sel.str() == "rule,m,k_hat,beta,se,ci_lo,ci_hi,no_knee\nknee,5,undefined,0.5,0.25,0.010000000000000009,0.98999999999999999,1\n");

  std::ostringstream bw;
  write_bandwidth_csv(bw, {1.0, 2.0}, {std::nullopt, 0.125});
  CHECK(bw.str() == "tuning,k_hat\n1,undefined\n2,0.125\n");
}

}  // TEST_SUITE("io")
