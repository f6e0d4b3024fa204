#include "spconf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "spconf/errors.hpp"

namespace spconf {

Grid::Grid(int m, int n, double du, double dv, double u0, double v0)
    : M(m), N(n), spacing_u(du), spacing_v(dv), origin_u(u0), origin_v(v0) {
  if (M < 2 || N < 2) {
    throw InvalidArgument("grid: M and N must be at least 2 (got " + std::to_string(M) + "x" +
                          std::to_string(N) + ")");
  }
  if (!(spacing_u > 0.0) || !(spacing_v > 0.0)) {
    throw InvalidArgument("grid: spacing must be positive");
  }
}

Grid Grid::unit_square(int m, int n) { return Grid(m, n, 1.0 / m, 1.0 / n); }

int Grid::nearest(double u, double v) const {
  auto c = static_cast<long>(std::floor((u - origin_u) / spacing_u));
  auto r = static_cast<long>(std::floor((v - origin_v) / spacing_v));
  c = std::clamp<long>(c, 0, M - 1);
  r = std::clamp<long>(r, 0, N - 1);
  return index(static_cast<int>(c), static_cast<int>(r));
}

Eigen::MatrixX2d Grid::coordinates(std::span<const int> cells) const {
  Eigen::MatrixX2d xy(cells.size(), 2);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    xy(i, 0) = u(cells[i]);
    xy(i, 1) = v(cells[i]);
  }
  return xy;
}

Eigen::MatrixX2d Grid::coordinates() const {
  std::vector<int> all(size());
  std::iota(all.begin(), all.end(), 0);
  return coordinates(all);
}

Field::Field(Grid g, Eigen::VectorXd v, std::vector<std::uint8_t> m)
    : grid(std::move(g)), values(std::move(v)), mask(std::move(m)) {
  if (values.size() != grid.size()) {
    throw InvalidArgument("field: expected " + std::to_string(grid.size()) + " values, got " +
                          std::to_string(values.size()));
  }
  if (!mask.empty() && static_cast<int>(mask.size()) != grid.size()) {
    throw InvalidArgument("field: mask size does not match grid");
  }
  for (int s = 0; s < grid.size(); ++s) {
    if (valid(s) && !std::isfinite(values[s])) {
      throw InvalidArgument("field: non-finite value at cell " + std::to_string(s));
    }
  }
}

int Field::valid_count() const {
  if (mask.empty()) return grid.size();
  return static_cast<int>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

Eigen::VectorXd Field::filled(double fill) const {
  Eigen::VectorXd out = values;
  if (!mask.empty()) {
    for (int s = 0; s < grid.size(); ++s) {
      if (!mask[s]) out[s] = fill;
    }
  }
  return out;
}

Field Field::standardized() const {
  const int n = valid_count();
  if (n < 2) throw InvalidArgument("standardize: need at least two valid cells");
  double mean = 0.0;
  for (int s = 0; s < grid.size(); ++s) {
    if (valid(s)) mean += values[s];
  }
  mean /= n;
  double var = 0.0;
  for (int s = 0; s < grid.size(); ++s) {
    if (valid(s)) var += (values[s] - mean) * (values[s] - mean);
  }
  var /= n;
  if (!(var > 0.0)) throw InvalidArgument("standardize: field is constant");
  const double sd = std::sqrt(var);
  Field out = *this;
  for (int s = 0; s < grid.size(); ++s) {
    if (valid(s)) out.values[s] = (values[s] - mean) / sd;
  }
  return out;
}

Eigen::VectorXd Field::gather(std::span<const int> cells) const {
  Eigen::VectorXd out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) out[i] = values[cells[i]];
  return out;
}

void Cohort::validate(const Grid& grid) const {
  const auto n = location.size();
  if (n == 0) throw InvalidArgument("cohort: no subjects");
  if (static_cast<std::size_t>(y.size()) != n || static_cast<std::size_t>(x.size()) != n) {
    throw InvalidArgument("cohort: x and y must have one entry per subject");
  }
  if (z.size() > 0 && static_cast<std::size_t>(z.rows()) != n) {
    throw InvalidArgument("cohort: z must have one row per subject");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!grid.contains(location[i])) {
      throw InvalidArgument("cohort: subject " + std::to_string(i) + " has location " +
                            std::to_string(location[i]) + " outside the grid");
    }
  }
  if (weights) {
    if (static_cast<std::size_t>(weights->size()) != n) {
      throw InvalidArgument("cohort: weights must have one entry per subject");
    }
    if (!((weights->array() > 0.0).all())) throw InvalidArgument("cohort: weights must be positive");
  }
}

Eigen::VectorXd LocationMultiplicity::inverse_count_weights() const {
  Eigen::VectorXd w(subject_to_unique.size());
  for (std::size_t i = 0; i < subject_to_unique.size(); ++i) {
    w[i] = 1.0 / counts[subject_to_unique[i]];
  }
  return w;
}

Eigen::VectorXd LocationMultiplicity::expand(const Eigen::VectorXd& per_unique) const {
  if (per_unique.size() != static_cast<Eigen::Index>(unique_locations.size())) {
    throw InvalidArgument("expand: vector length must equal number of unique locations");
  }
  Eigen::VectorXd out(subject_to_unique.size());
  for (std::size_t i = 0; i < subject_to_unique.size(); ++i) out[i] = per_unique[subject_to_unique[i]];
  return out;
}

LocationMultiplicity dedupe_locations(std::span<const int> locations) {
  LocationMultiplicity lm;
  lm.subject_to_unique.reserve(locations.size());
  std::unordered_map<int, int> slot;
  slot.reserve(locations.size());
  for (int s : locations) {
    auto [it, inserted] = slot.try_emplace(s, static_cast<int>(lm.unique_locations.size()));
    if (inserted) {
      lm.unique_locations.push_back(s);
      lm.counts.push_back(0);
    }
    ++lm.counts[it->second];
    lm.subject_to_unique.push_back(it->second);
  }
  return lm;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Field embed_dyadic(const Field& field, double fill) {
  const Grid& g = field.grid;
  int side = 1;
  while (side < std::max(g.M, g.N)) side *= 2;
  if (side == g.M && side == g.N) return field;
  Grid big(side, side, g.spacing_u, g.spacing_v, g.origin_u, g.origin_v);
  Eigen::VectorXd values = Eigen::VectorXd::Constant(big.size(), fill);
  std::vector<std::uint8_t> mask(big.size(), 0);
  for (int r = 0; r < g.N; ++r) {
    for (int c = 0; c < g.M; ++c) {
      const int s = g.index(c, r);
      values[big.index(c, r)] = field.values[s];
      mask[big.index(c, r)] = field.valid(s) ? 1 : 0;
    }
  }
  return Field(big, std::move(values), std::move(mask));
}

Field crop(const Field& embedded, const Grid& original) {
  if (embedded.grid.M < original.M || embedded.grid.N < original.N) {
    throw InvalidArgument("crop: target grid larger than source");
  }
  Eigen::VectorXd values(original.size());
  std::vector<std::uint8_t> mask(original.size(), 1);
  bool any_masked = false;
  for (int r = 0; r < original.N; ++r) {
    for (int c = 0; c < original.M; ++c) {
      const int src = embedded.grid.index(c, r);
      values[original.index(c, r)] = embedded.values[src];
      if (!embedded.valid(src)) {
        mask[original.index(c, r)] = 0;
        any_masked = true;
      }
    }
  }
  if (!any_masked) mask.clear();
  return Field(original, std::move(values), std::move(mask));
}

std::vector<int> sample_locations(const Grid& grid, int n, SamplingScheme scheme,
                                  std::mt19937_64& rng) {
  const int S = grid.size();
  if (n < 0) throw InvalidArgument("sample_locations: n must be non-negative");
  std::vector<int> out;
  out.reserve(n);
  if (scheme == SamplingScheme::uniform_with_replacement) {
    std::uniform_int_distribution<int> pick(0, S - 1);
    for (int i = 0; i < n; ++i) out.push_back(pick(rng));
    return out;
  }
  if (n > S) {
    throw InvalidArgument("sample_locations: cannot draw " + std::to_string(n) +
                          " cells without replacement from a grid of " + std::to_string(S));
  }
  // Partial Fisher-Yates.
  std::vector<int> pool(S);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<int> pick(i, S - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out.push_back(pool[i]);
  }
  return out;
}

std::vector<int> sample_locations(const Grid& grid, int n, SamplingScheme scheme,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_locations(grid, n, scheme, rng);
}

}  // namespace spconf
