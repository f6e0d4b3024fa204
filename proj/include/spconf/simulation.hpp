#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spconf/grid.hpp"
#include "spconf/selection.hpp"
#include "spconf/tprs.hpp"

namespace spconf {

enum class ConfounderKind { f1, f2, f3, f4, f5, f6 };

std::string confounder_name(ConfounderKind kind);
ConfounderKind parse_confounder(const std::string& name);
inline constexpr ConfounderKind kAllConfounders[] = {ConfounderKind::f1, ConfounderKind::f2, ConfounderKind::f3,
                                                     ConfounderKind::f4, ConfounderKind::f5, ConfounderKind::f6};

struct GpOptions {
  /// Correlation exp(-range_factor * d / range). 3 makes `range` the
  /// distance at which the correlation drops to about 0.05; 1 gives the
  /// plain exp(-d / range).
  double range_factor = 3.0;
  bool standardize = true;
};

double exponential_correlation(double d, double range, double range_factor = 3.0);

/// One realization of a stationary Gaussian process with exponential
/// covariance on the grid, by circulant embedding on a torus padded 2x, 3x
/// or 4x. Negative embedding eigenvalues left at 4x padding are clipped to 0
/// and reported through `warnings`.
Field gp_exponential(const Grid& grid, double range, std::uint64_t seed, const GpOptions& options = {},
                     std::vector<std::string>* warnings = nullptr);

/// Default seed for the fixed surfaces (f1..f6 and g).
inline constexpr std::uint64_t kSurfaceSeed = 20200917ull;

/// Orthonormal basis used to build f1 (df 10) or f2 (df 50): a thin-plate
/// eigenbasis fitted on a 24 x 24 knot lattice and evaluated at every grid
/// cell. Throws InvalidArgument for the other kinds.
BasisMatrix confounder_tprs_basis(ConfounderKind kind, const Grid& grid);

/// Standardized confounder surface:
///   f1, f2: N(0,1) combination of confounder_tprs_basis columns;
///   f3, f4: N(0,1)-weighted cos/sin terms over integer (p, q) in a half
///           plane with 0 < p^2 + q^2 <= 40 (f3) or 500 (f4);
///   f5, f6: gp_exponential with range 0.5 or 0.15.
Field confounder_surface(ConfounderKind kind, const Grid& grid, std::uint64_t seed = kSurfaceSeed);

/// Population unadjusted bias <x, f> / <x, x> over the valid cells, with
/// x = standardize(theta f + g).
double population_bias(const Field& g, const Field& f, double theta);

/// theta with population_bias(g, f, theta) = target (to 1e-8), by bracketed
/// root finding. Throws InvalidArgument when the target lies outside the
/// attainable range.
double calibrate_theta(const Field& g, const Field& f, double target_bias);

/// Optional measured covariate: a standardized GP surface z that loads on
/// the exposure (before standardization) and on the outcome.
struct CovariateSpec {
  double range = 0.3;
  double exposure_loading = 0.5;
  double outcome_effect = 1.0;
};

/// Candidate grids and selection rules run in every replication.
struct EstimatorBattery {
  bool tprs_outcome = true;
  bool tprs_preadjust = true;
  bool fourier = true;
  bool wavelet = true;
  std::vector<int> tprs_dfs;          // empty = default grid
  std::vector<double> fourier_cutoffs;  // empty = 1..30
  std::vector<int> wavelet_levels;    // empty = 0..J-2
  std::vector<Rule> rules{Rule::aic, Rule::bic, Rule::aic_ne, Rule::bic_ne, Rule::mse, Rule::knee};
  int wavelet_family = 4;

  static std::vector<int> default_tprs_dfs();
};

struct SimulationScenario {
  int grid_side = 128;
  ConfounderKind confounder = ConfounderKind::f1;
  double g_range = 0.05;
  double beta = 1.0;
  double target_bias = 0.2;
  double sigma = 4.0;
  int n = 2000;
  int replications = 200;
  std::uint64_t seed = 1;
  std::uint64_t surface_seed = kSurfaceSeed;
  SamplingScheme sampling = SamplingScheme::uniform_without_replacement;
  GpOptions gp;
  std::optional<CovariateSpec> covariate;
  EstimatorBattery battery;

  /// 512 x 512 grid and 1000 replications.
  static SimulationScenario paper_scale();
  Grid grid() const { return Grid::unit_square(grid_side); }
  /// Throws InvalidArgument on inconsistent settings.
  void validate() const;
};

/// The fixed surfaces shared by all replications of a scenario.
struct ScenarioSurfaces {
  Field f;
  Field g;
  Field x;  // standardize(theta f + g [+ loading z])
  std::optional<Field> z;
  double theta = 0.0;
};

ScenarioSurfaces prepare_surfaces(const SimulationScenario& scenario);

/// One estimate from one replication. `selector` is "fixed" for a fixed
/// tuning value or the name of a selection rule.
struct ReplicationRecord {
  int rep = 0;
  std::string estimator;  // unadjusted, tprs-outcome, tprs-preadjust, fourier, wavelet
  std::string selector;
  double tuning = 0.0;
  double beta_hat = 0.0;
  double se = 0.0;
  bool no_knee = false;
};

struct SummaryRow {
  std::string estimator;
  std::string selector;
  double tuning = 0.0;  // NaN for selection rules
  int reps = 0;
  double mean = 0.0;
  double bias = 0.0;
  double sd = 0.0;  // population SD over replications, so mse = bias^2 + sd^2
  double mean_se = 0.0;
  double mse = 0.0;
  double coverage = 0.0;     // share of 95% intervals containing beta
  double reject_rate = 0.0;  // share of 95% intervals excluding 0
  double mean_tuning = 0.0;  // average chosen tuning for selection rules
};

struct ReplicationSummary {
  SimulationScenario scenario;
  double theta = 0.0;
  std::vector<ReplicationRecord> records;  // ordered by rep, then estimator
  std::vector<SummaryRow> rows;            // in first-appearance order
  std::vector<std::string> warnings;

  const SummaryRow* find(const std::string& estimator, const std::string& selector,
                         std::optional<double> tuning = std::nullopt) const;
};

std::vector<SummaryRow> summarize(const std::vector<ReplicationRecord>& records, double beta);

/// Runs every replication. Replication r draws locations and noise from a
/// stream seeded by (seed, r), so results do not depend on thread count.
ReplicationSummary run_scenario(const SimulationScenario& scenario);

/// Same replications for several values of beta (shared locations, noise
/// and bases); element i equals run_scenario with beta = betas[i].
std::vector<ReplicationSummary> run_scenario_betas(const SimulationScenario& scenario,
                                                   const std::vector<double>& betas);

void write_records_csv(std::ostream& out, const ReplicationSummary& summary);
/// Long-format summary: scenario columns followed by the SummaryRow fields.
void write_summary_csv(std::ostream& out, const std::vector<ReplicationSummary>& summaries);
/// Wide table of one statistic: one row per scenario (confounder, g_range,
/// beta), one column per estimator/selector/tuning.
void write_wide_csv(std::ostream& out, const std::vector<ReplicationSummary>& summaries,
                    const std::string& statistic);

}  // namespace spconf
