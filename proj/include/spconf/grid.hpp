#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spconf {

/// Rectangular lattice of M columns (u direction) by N rows (v direction).
/// Cells are indexed row-major from the origin: s = row * M + col, row 0 at
/// the smallest v. Coordinates refer to cell centers.
struct Grid {
  int M = 0;
  int N = 0;
  double spacing_u = 1.0;
  double spacing_v = 1.0;
  double origin_u = 0.0;
  double origin_v = 0.0;

  Grid() = default;
  Grid(int m, int n, double du, double dv, double u0 = 0.0, double v0 = 0.0);

  /// M x N grid covering [0,1) x [0,1).
  static Grid unit_square(int m, int n);
  static Grid unit_square(int side) { return unit_square(side, side); }

  int size() const { return M * N; }
  int col(int s) const { return s % M; }
  int row(int s) const { return s / M; }
  int index(int col, int row) const { return row * M + col; }
  bool contains(int s) const { return s >= 0 && s < size(); }

  double u(int s) const { return origin_u + (col(s) + 0.5) * spacing_u; }
  double v(int s) const { return origin_v + (row(s) + 0.5) * spacing_v; }
  double width() const { return M * spacing_u; }
  double height() const { return N * spacing_v; }

  /// Index of the cell whose center is closest to (u, v); coordinates outside
  /// the grid are clamped to the border cells.
  int nearest(double u, double v) const;

  /// n x 2 matrix of cell-center coordinates for the given cells.
  Eigen::MatrixX2d coordinates(std::span<const int> cells) const;
  Eigen::MatrixX2d coordinates() const;

  bool operator==(const Grid&) const = default;
};

/// A real surface on a grid. An empty mask means every cell is valid.
struct Field {
  Grid grid;
  Eigen::VectorXd values;
  std::vector<std::uint8_t> mask;

  Field() = default;
  Field(Grid g, Eigen::VectorXd v, std::vector<std::uint8_t> m = {});
  static Field zeros(const Grid& g) { return Field(g, Eigen::VectorXd::Zero(g.size())); }

  bool valid(int s) const { return mask.empty() || mask[s] != 0; }
  int valid_count() const;

  double& operator()(int col, int row) { return values[grid.index(col, row)]; }
  double operator()(int col, int row) const { return values[grid.index(col, row)]; }

  /// Values with masked-out cells replaced by `fill`.
  Eigen::VectorXd filled(double fill = 0.0) const;

  /// Rescale to mean 0 and variance 1 (population variance) over the valid
  /// cells. Masked-out cells are left untouched.
  Field standardized() const;

  /// Values at the given cells.
  Eigen::VectorXd gather(std::span<const int> cells) const;
};

/// Subjects of a cohort study. `z` has one column per measured covariate
/// (possibly zero columns).
struct Cohort {
  std::vector<int> location;
  Eigen::VectorXd y;
  Eigen::VectorXd x;
  Eigen::MatrixXd z;
  std::optional<Eigen::VectorXd> weights;

  int n() const { return static_cast<int>(location.size()); }
  int p() const { return static_cast<int>(z.cols()); }

  /// Throws InvalidArgument when sizes disagree, a location is not a cell of
  /// `grid`, or a weight is not positive.
  void validate(const Grid& grid) const;
};

struct LocationMultiplicity {
  std::vector<int> unique_locations;  // first-occurrence order
  std::vector<int> counts;
  std::vector<int> subject_to_unique;

  /// Per-subject 1 / n_s weights.
  Eigen::VectorXd inverse_count_weights() const;
  /// Re-expand a per-unique-location vector to a per-subject vector.
  Eigen::VectorXd expand(const Eigen::VectorXd& per_unique) const;
};

LocationMultiplicity dedupe_locations(std::span<const int> locations);
inline LocationMultiplicity dedupe_locations(const Cohort& cohort) {
  return dedupe_locations(cohort.location);
}

/// Embed a field into the smallest square grid with power-of-two side that
/// holds it. The original occupies the lower-left block (same origin and
/// spacing); added cells hold `fill` and are masked out.
Field embed_dyadic(const Field& field, double fill = 0.0);

/// Inverse of embed_dyadic: the lower-left block of `embedded` restricted to
/// `original` (mask restored from the block).
Field crop(const Field& embedded, const Grid& original);

bool is_power_of_two(int n);

enum class SamplingScheme { uniform_without_replacement, uniform_with_replacement };

std::vector<int> sample_locations(const Grid& grid, int n, SamplingScheme scheme,
                                  std::mt19937_64& rng);
std::vector<int> sample_locations(const Grid& grid, int n, SamplingScheme scheme,
                                  std::uint64_t seed);

}  // namespace spconf
