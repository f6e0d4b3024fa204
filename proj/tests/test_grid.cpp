#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "spconf/errors.hpp"
#include "spconf/grid.hpp"

using namespace spconf;

TEST_SUITE("grid") {

TEST_CASE("row-major indexing and cell centers") {
  Grid g = Grid::unit_square(4, 3);
  CHECK(g.size() == 12);
  CHECK(g.index(1, 2) == 9);
  CHECK(g.col(9) == 1);
  CHECK(g.row(9) == 2);
  CHECK(g.u(9) == doctest::Approx(0.375));
  CHECK(g.v(9) == doctest::Approx(5.0 / 6.0));
  CHECK(g.nearest(0.375, 0.83) == 9);
  CHECK(g.nearest(-5.0, 9.0) == g.index(0, 2));
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(Grid(1, 4, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Grid(4, 4, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("field standardization uses valid cells only") {
  Grid g = Grid::unit_square(3, 2);
  Eigen::VectorXd v(6);
  v << 1, 2, 3, 4, 5, 100;
  Field f(g, v, {1, 1, 1, 1, 1, 0});
  Field s = f.standardized();
  double mean = 0, var = 0;
  for (int i = 0; i < 5; ++i) mean += s.values[i];
  mean /= 5;
  for (int i = 0; i < 5; ++i) var += (s.values[i] - mean) * (s.values[i] - mean);
  var /= 5;
  CHECK(std::abs(mean) < 1e-14);
  CHECK(var == doctest::Approx(1.0));
  CHECK(s.values[5] == 100.0);
  CHECK(f.valid_count() == 5);
}

TEST_CASE("dedupe then expand is the identity") {
  std::vector<int> locs{5, 2, 5, 7, 2, 2, 9};
  auto m = dedupe_locations(locs);
  CHECK(m.unique_locations == std::vector<int>{5, 2, 7, 9});
  CHECK(m.counts == std::vector<int>{2, 3, 1, 1});
  Eigen::VectorXd per_unique(4);
  per_unique << 5, 2, 7, 9;
  Eigen::VectorXd back = m.expand(per_unique);
  for (std::size_t i = 0; i < locs.size(); ++i) CHECK(back[static_cast<Eigen::Index>(i)] == locs[i]);
  Eigen::VectorXd w = m.inverse_count_weights();
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(1.0 / 3.0));
  CHECK(w[3] == 1.0);
}

TEST_CASE("embed_dyadic then crop is the identity") {
  Grid g(5, 3, 0.2, 0.5, 1.0, -1.0);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(15, -3, 4);
  std::vector<std::uint8_t> mask(15, 1);
  mask[4] = 0;
  Field f(g, v, mask);
  Field e = embed_dyadic(f);
  CHECK(e.grid.M == 8);
  CHECK(e.grid.N == 8);
  CHECK(e.grid.origin_u == 1.0);
  CHECK(e.grid.spacing_v == 0.5);
  CHECK(!e.valid(e.grid.index(6, 1)));
  CHECK(!e.valid(e.grid.index(0, 5)));
  Field c = crop(e, g);
  CHECK(c.grid == g);
  CHECK(c.mask == mask);
  for (int s = 0; s < 15; ++s) CHECK(c.values[s] == v[s]);
  CHECK(is_power_of_two(64));
  CHECK(!is_power_of_two(48));
}

TEST_CASE("sampling without replacement draws distinct cells reproducibly") {
  Grid g = Grid::unit_square(20);
  auto a = sample_locations(g, 150, SamplingScheme::uniform_without_replacement, 42ull);
  auto b = sample_locations(g, 150, SamplingScheme::uniform_without_replacement, 42ull);
  CHECK(a == b);
  CHECK(std::set<int>(a.begin(), a.end()).size() == 150);
  CHECK(std::all_of(a.begin(), a.end(), [&](int s) { return g.contains(s); }));
  CHECK_THROWS_AS(sample_locations(g, 401, SamplingScheme::uniform_without_replacement, 1ull), InvalidArgument);
}

TEST_CASE("sampling with replacement is uniform within binomial bounds") {
  Grid g = Grid::unit_square(10);
  const int n = 100000;
  auto s = sample_locations(g, n, SamplingScheme::uniform_with_replacement, 7ull);
  std::vector<int> counts(100, 0);
  for (int c : s) ++counts[c];
  const double mean = n / 100.0;
  const double sd = std::sqrt(n * 0.01 * 0.99);
  for (int c : counts) CHECK(std::abs(c - mean) < 4.0 * sd);
}

TEST_CASE("cohort validation") {
  Grid g = Grid::unit_square(4);
  Cohort c;
  c.location = {0, 3, 15};
  c.x = Eigen::VectorXd::Ones(3);
  c.y = Eigen::VectorXd::Ones(3);
  c.z.resize(3, 0);
  CHECK_NOTHROW(c.validate(g));
  c.location[2] = 16;
  CHECK_THROWS_AS(c.validate(g), InvalidArgument);
  c.location[2] = 1;
  c.weights = Eigen::VectorXd::Constant(3, -1.0);
  CHECK_THROWS_AS(c.validate(g), InvalidArgument);
}

}
