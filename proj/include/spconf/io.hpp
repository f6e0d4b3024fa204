#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spconf/grid.hpp"
#include "spconf/path.hpp"
#include "spconf/selection.hpp"

namespace spconf {

/// Shortest round-tripping decimal form ("%.17g"); "NA" for NaN.
std::string format_number(double v);

struct CohortTable {
  std::vector<std::string> ids;
  Eigen::MatrixX2d coordinates;  // as read, before snapping
  Cohort cohort;                 // locations snapped to the nearest cell center
};

/// Cohort CSV with header `id,u,v,x,y[,z1..zp][,weight]`. Columns are
/// matched by name; z columns must be z1..zp without gaps. Throws InputError
/// (with the 1-based line number) on malformed rows or missing columns.
CohortTable read_cohort_csv(std::istream& in, const Grid& grid);
CohortTable read_cohort_csv(const std::string& path, const Grid& grid);

/// Field CSV `u,v,value`. The grid is inferred from the distinct u and v
/// coordinates (cell centers, regular spacing); cells without a row or with
/// a non-finite value are masked out.
Field read_field_csv(std::istream& in);
Field read_field_csv(const std::string& path);
void write_field_csv(std::ostream& out, const Field& field);
void write_field_csv(const std::string& path, const Field& field);

/// Binary field: M and N as little-endian int32, then M*N little-endian
/// doubles in row-major order. The grid is the unit-spacing lattice scaled
/// to the unit square unless `grid` is given. Non-finite values are masked.
Field read_field_binary(std::istream& in, const std::optional<Grid>& grid = std::nullopt);
Field read_field_binary(const std::string& path, const std::optional<Grid>& grid = std::nullopt);
void write_field_binary(std::ostream& out, const Field& field);
void write_field_binary(const std::string& path, const Field& field);

/// Reads either format, chosen by extension (.csv is text, anything else
/// binary).
Field read_field(const std::string& path, const std::optional<Grid>& grid = std::nullopt);

/// `basis,m,k_hat,beta,se,ci_lo,ci_hi`, one row per path entry.
/// `k_hats` (if non-empty) holds one optional bandwidth per entry.
void write_estimates_csv(std::ostream& out, const AdjustmentPath& path,
                         const std::vector<std::optional<double>>& k_hats = {});

/// Estimates plus the fit criteria used by the selection rules.
void write_path_csv(std::ostream& out, const AdjustmentPath& path,
                    const std::vector<std::optional<double>>& k_hats = {});

/// `rule,m,k_hat,beta,se,ci_lo,ci_hi,no_knee`.
void write_selection_csv(std::ostream& out, const std::vector<SelectionOutcome>& outcomes,
                         const std::vector<std::optional<double>>& k_hats);

/// `tuning,k_hat` with "undefined" where no bandwidth exists.
void write_bandwidth_csv(std::ostream& out, const std::vector<double>& tunings,
                         const std::vector<std::optional<double>>& k_hats);

}  // namespace spconf
