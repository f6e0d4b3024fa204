#include "spconf/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <map>
#include <numbers>
#include <ostream>
#include <random>

#include <boost/math/tools/roots.hpp>

#include "spconf/errors.hpp"
#include "spconf/io.hpp"
#include "spconf/linalg.hpp"
#include "spconf/path.hpp"
#include "spconf/spectral.hpp"
#include "spconf/wavelet.hpp"

namespace spconf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Eigen::VectorXd standard_normals(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = z(rng);
  return v;
}

Field sinusoid_surface(const Grid& grid, int max_sq, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  const int bound = static_cast<int>(std::floor(std::sqrt(static_cast<double>(max_sq))));
  Eigen::VectorXd values = Eigen::VectorXd::Zero(grid.size());
  Eigen::VectorXd us(grid.size()), vs(grid.size());
  for (int s = 0; s < grid.size(); ++s) {
    us[s] = (grid.u(s) - grid.origin_u) / grid.width();
    vs[s] = (grid.v(s) - grid.origin_v) / grid.height();
  }
  for (int p = 0; p <= bound; ++p) {
    for (int q = -bound; q <= bound; ++q) {
      if (p == 0 && q <= 0) continue;
      if (p * p + q * q > max_sq) continue;
      const double a = z(rng);
      const double b = z(rng);
      const Eigen::ArrayXd phase = 2.0 * std::numbers::pi * (p * us.array() + q * vs.array());
      values.array() += a * phase.cos() + b * phase.sin();
    }
  }
  return Field(grid, values);
}

std::uint64_t kind_salt(ConfounderKind kind) { return 0xf0ull + static_cast<std::uint64_t>(kind); }

struct BatteryGrids {
  std::vector<int> dfs;
  std::vector<double> cutoffs;
  std::vector<int> levels;
};

BatteryGrids resolve_grids(const SimulationScenario& s) {
  BatteryGrids g;
  const auto& b = s.battery;
  g.dfs = b.tprs_dfs.empty() ? EstimatorBattery::default_tprs_dfs() : b.tprs_dfs;
  if (b.fourier_cutoffs.empty()) {
    for (int w = 1; w <= 30; ++w) g.cutoffs.push_back(w);
  } else {
    g.cutoffs = b.fourier_cutoffs;
  }
  if (b.wavelet_levels.empty()) {
    int side = 1, J = 0;
    while (side < s.grid_side) side <<= 1, ++J;
    for (int L = 0; L <= J - 2; ++L) g.levels.push_back(L);
  } else {
    g.levels = b.wavelet_levels;
  }
  return g;
}

// Exposure complements x2 on the full grid, one per tuning value.
struct FilteredSurfaces {
  std::vector<Eigen::VectorXd> fourier_x2;
  std::vector<int> fourier_removed;
  std::vector<Eigen::VectorXd> wavelet_x2;
  std::vector<int> wavelet_removed;
};

FilteredSurfaces filter_surfaces(const SimulationScenario& s, const BatteryGrids& grids, const Field& x) {
  FilteredSurfaces out;
  if (s.battery.fourier) {
    for (double w : grids.cutoffs) {
      out.fourier_x2.push_back(highpass_preadjust(x, w).values);
      out.fourier_removed.push_back(FrequencyFilter(w, x.grid).removed_count());
    }
  }
  if (s.battery.wavelet) {
    const Field embedded = embed_dyadic(x);
    for (int L : grids.levels) {
      const Field x2 = crop(wavelet_preadjust(embedded, L, s.battery.wavelet_family), x.grid);
      out.wavelet_x2.push_back(x2.values);
      out.wavelet_removed.push_back(static_cast<int>(thresholded_count(L)));
    }
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& values, const std::vector<int>& cells) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) out[static_cast<Eigen::Index>(i)] = values[cells[i]];
  return out;
}

void record_path(std::vector<ReplicationRecord>& out, int rep, const std::string& estimator,
                 const AdjustmentPath& path, const std::vector<Rule>& rules) {
  for (const auto& e : path.entries()) {
    out.push_back({rep, estimator, "fixed", e.tuning, e.estimate.beta_hat, e.estimate.se, false});
  }
  for (Rule r : rules) {
    if (rule_needs_no_exposure(r) && (path.empty() || !path[0].no_exposure)) continue;
    if (r == Rule::knee && path.size() < 4) continue;
    if (path.empty()) continue;
    const SelectionOutcome o = select(path, r);
    out.push_back({rep, estimator, o.rule, o.chosen_tuning, o.estimate.beta_hat, o.estimate.se, o.no_knee});
  }
}

std::string key_of(const std::string& estimator, const std::string& selector, double tuning) {
  return estimator + '\x1f' + selector + '\x1f' + (selector == "fixed" ? format_number(tuning) : "");
}

}  // namespace

std::string confounder_name(ConfounderKind kind) { return "f" + std::to_string(static_cast<int>(kind) + 1); }

ConfounderKind parse_confounder(const std::string& name) {
  for (ConfounderKind k : kAllConfounders) {
    if (confounder_name(k) == name) return k;
  }
  throw InvalidArgument("unknown confounder surface '" + name + "' (expected f1..f6)");
}

double exponential_correlation(double d, double range, double range_factor) {
  return std::exp(-range_factor * d / range);
}

Field gp_exponential(const Grid& grid, double range, std::uint64_t seed, const GpOptions& options,
                     std::vector<std::string>* warnings) {
  if (!(range > 0.0)) throw InvalidArgument("gp_exponential: range must be positive");
  if (!(options.range_factor > 0.0)) throw InvalidArgument("gp_exponential: range factor must be positive");
  std::vector<std::complex<double>> lambda;
  int PM = 0, PN = 0;
  for (int pad = 2; pad <= 4; ++pad) {
    PM = pad * grid.M;
    PN = pad * grid.N;
    lambda.assign(static_cast<std::size_t>(PM) * PN, 0.0);
    for (int j = 0; j < PN; ++j) {
      const double dv = std::min(j, PN - j) * grid.spacing_v;
      for (int i = 0; i < PM; ++i) {
        const double du = std::min(i, PM - i) * grid.spacing_u;
        lambda[static_cast<std::size_t>(j) * PM + i] =
            exponential_correlation(std::hypot(du, dv), range, options.range_factor);
      }
    }
    fft2_inplace(lambda, PM, PN);
    double lo = 0.0, hi = 0.0;
    for (const auto& l : lambda) lo = std::min(lo, l.real()), hi = std::max(hi, l.real());
    if (lo >= -1e-10 * hi) break;
    if (pad == 4) {
      int clipped = 0;
      for (auto& l : lambda) {
        if (l.real() < 0.0) l = 0.0, ++clipped;
      }
      if (warnings) {
        warnings->push_back("gp_exponential: clipped " + std::to_string(clipped) +
                            " negative circulant eigenvalues (most negative " + format_number(lo) + ")");
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  const double scale = 1.0 / (static_cast<double>(PM) * PN);
  std::vector<std::complex<double>> w(lambda.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double a = z(rng);
    const double b = z(rng);
    w[k] = std::sqrt(std::max(0.0, lambda[k].real()) * scale) * std::complex<double>(a, b);
  }
  fft2_inplace(w, PM, PN);
  Eigen::VectorXd values(grid.size());
  for (int r = 0; r < grid.N; ++r) {
    for (int c = 0; c < grid.M; ++c) values[grid.index(c, r)] = w[static_cast<std::size_t>(r) * PM + c].real();
  }
  Field f(grid, values);
  return options.standardize ? f.standardized() : f;
}

namespace {

// Knots on a 24 x 24 lattice, jittered by up to a quarter cell with a fixed
// seed so that no pair of thin-plate eigenvalues is exactly tied.
Eigen::MatrixX2d confounder_knots(const Grid& grid) {
  constexpr int lattice = 24;
  std::mt19937_64 rng(0x6b6e6f7473ull);
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  Eigen::MatrixX2d knots(lattice * lattice, 2);
  for (int j = 0; j < lattice; ++j) {
    for (int i = 0; i < lattice; ++i) {
      knots(j * lattice + i, 0) = grid.origin_u + (i + 0.5 + jitter(rng)) * grid.width() / lattice;
      knots(j * lattice + i, 1) = grid.origin_v + (j + 0.5 + jitter(rng)) * grid.height() / lattice;
    }
  }
  return knots;
}

int confounder_df(ConfounderKind kind) {
  if (kind == ConfounderKind::f1) return 10;
  if (kind == ConfounderKind::f2) return 50;
  throw InvalidArgument("confounder_tprs_basis: only f1 and f2 are thin-plate surfaces");
}

}  // namespace

BasisMatrix confounder_tprs_basis(ConfounderKind kind, const Grid& grid) {
  const int df = confounder_df(kind);
  return tprs_basis_at(ThinPlateSpline::build(confounder_knots(grid), df), grid.coordinates());
}

Field confounder_surface(ConfounderKind kind, const Grid& grid, std::uint64_t seed) {
  const std::uint64_t s = mix_seed(seed, kind_salt(kind));
  switch (kind) {
    case ConfounderKind::f1:
    case ConfounderKind::f2: {
      // Coefficients are white noise on the knots projected onto the basis,
      // which does not depend on the signs the eigensolver picks.
      const Eigen::MatrixX2d knots = confounder_knots(grid);
      const ThinPlateSpline spline = ThinPlateSpline::build(knots, confounder_df(kind));
      const BasisMatrix at_knots = tprs_basis_at(spline, knots);
      const BasisMatrix H = tprs_basis_at(spline, grid.coordinates());
      std::mt19937_64 rng(s);
      const Eigen::VectorXd w = standard_normals(knots.rows(), rng);
      return Field(grid, H.values * (at_knots.values.transpose() * w)).standardized();
    }
    case ConfounderKind::f3: return sinusoid_surface(grid, 40, s).standardized();
    case ConfounderKind::f4: return sinusoid_surface(grid, 500, s).standardized();
    case ConfounderKind::f5: return gp_exponential(grid, 0.5, s);
    case ConfounderKind::f6: return gp_exponential(grid, 0.15, s);
  }
  throw InvalidArgument("confounder_surface: unknown kind");
}

double population_bias(const Field& g, const Field& f, double theta) {
  if (!(g.grid == f.grid)) throw InvalidArgument("population_bias: surfaces on different grids");
  Eigen::VectorXd mix = theta * f.values + g.values;
  std::vector<std::uint8_t> mask = f.mask.empty() ? g.mask : f.mask;
  const Field x = Field(f.grid, mix, mask).standardized();
  double xf = 0.0, xx = 0.0;
  for (int s = 0; s < f.grid.size(); ++s) {
    if (!x.valid(s) || !g.valid(s)) continue;
    xf += x.values[s] * f.values[s];
    xx += x.values[s] * x.values[s];
  }
  return xf / xx;
}

double calibrate_theta(const Field& g, const Field& f, double target_bias) {
  auto gap = [&](double theta) { return population_bias(g, f, theta) - target_bias; };
  double lo = -1.0, hi = 1.0;
  double glo = gap(lo), ghi = gap(hi);
  for (int i = 0; i < 60 && !(glo <= 0.0 && ghi >= 0.0); ++i) {
    if (glo > 0.0) lo *= 2.0, glo = gap(lo);
    if (ghi < 0.0) hi *= 2.0, ghi = gap(hi);
  }
  if (!(glo <= 0.0 && ghi >= 0.0)) {
    throw InvalidArgument("calibrate_theta: target bias " + format_number(target_bias) +
                          " is outside the attainable range [" + format_number(glo + target_bias) + ", " +
                          format_number(ghi + target_bias) + "]");
  }
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  boost::uintmax_t iters = 200;
  const auto bracket = boost::math::tools::toms748_solve(gap, lo, hi, glo, ghi,
                                                         boost::math::tools::eps_tolerance<double>(50), iters);
  const double theta = 0.5 * (bracket.first + bracket.second);
  if (std::abs(gap(theta)) > 1e-8) {
    throw Error("calibrate_theta: root finding did not reach 1e-8 (residual " + format_number(gap(theta)) + ")");
  }
  return theta;
}

std::vector<int> EstimatorBattery::default_tprs_dfs() {
  std::vector<int> d;
  for (int m = 3; m <= 20; ++m) d.push_back(m);
  for (int m = 25; m <= 100; m += 5) d.push_back(m);
  for (int m = 110; m <= 500; m += 10) d.push_back(m);
  return d;
}

SimulationScenario SimulationScenario::paper_scale() {
  SimulationScenario s;
  s.grid_side = 512;
  s.replications = 1000;
  return s;
}

void SimulationScenario::validate() const {
  if (grid_side < 2) throw InvalidArgument("scenario: grid side must be at least 2");
  if (!(target_bias >= 0.0)) throw InvalidArgument("scenario: target bias must be >= 0");
  if (!(sigma > 0.0)) throw InvalidArgument("scenario: sigma must be positive");
  if (!(g_range > 0.0)) throw InvalidArgument("scenario: g range must be positive");
  if (n < 4) throw InvalidArgument("scenario: n must be at least 4");
  if (replications < 1) throw InvalidArgument("scenario: replications must be at least 1");
  if (sampling == SamplingScheme::uniform_without_replacement && n > grid_side * grid_side) {
    throw InvalidArgument("scenario: n exceeds the number of grid cells for sampling without replacement");
  }
  const BatteryGrids g = resolve_grids(*this);
  auto increasing = [](const auto& v) { return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end(); };
  if (battery.tprs_outcome || battery.tprs_preadjust) {
    if (!increasing(g.dfs) || g.dfs.front() < 1) throw InvalidArgument("scenario: TPRS df grid must be increasing and >= 1");
    if (g.dfs.back() > n) throw InvalidArgument("scenario: TPRS df exceeds n");
    if (g.dfs.front() < 3) throw InvalidArgument("scenario: TPRS df grid must start at 3 or more");
  }
  if (battery.fourier && (!increasing(g.cutoffs) || g.cutoffs.front() < 0.0)) {
    throw InvalidArgument("scenario: Fourier cutoff grid must be increasing and >= 0");
  }
  if (battery.wavelet) {
    int side = 1, J = 0;
    while (side < grid_side) side <<= 1, ++J;
    if (!increasing(g.levels) || g.levels.front() < 0 || g.levels.back() > J - 2) {
      throw InvalidArgument("scenario: wavelet levels must be increasing within 0.." + std::to_string(J - 2));
    }
  }
}

ScenarioSurfaces prepare_surfaces(const SimulationScenario& scenario) {
  const Grid grid = scenario.grid();
  ScenarioSurfaces out;
  out.f = confounder_surface(scenario.confounder, grid, scenario.surface_seed);
  out.g = gp_exponential(grid, scenario.g_range, mix_seed(scenario.surface_seed, 0x9ull), scenario.gp);
  Field g_eff = out.g;
  if (scenario.covariate) {
    out.z = gp_exponential(grid, scenario.covariate->range, mix_seed(scenario.surface_seed, 0x2ull), scenario.gp);
    g_eff = Field(grid, out.g.values + scenario.covariate->exposure_loading * out.z->values).standardized();
  }
  out.theta = calibrate_theta(g_eff, out.f, scenario.target_bias);
  out.x = Field(grid, out.theta * out.f.values + g_eff.values).standardized();
  return out;
}

const SummaryRow* ReplicationSummary::find(const std::string& estimator, const std::string& selector,
                                           std::optional<double> tuning) const {
  for (const auto& r : rows) {
    if (r.estimator != estimator || r.selector != selector) continue;
    if (tuning && !(r.tuning == *tuning)) continue;
    return &r;
  }
  return nullptr;
}

std::vector<SummaryRow> summarize(const std::vector<ReplicationRecord>& records, double beta) {
  std::vector<SummaryRow> rows;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    const std::string key = key_of(r.estimator, r.selector, r.tuning);
    auto [it, fresh] = index.emplace(key, rows.size());
    if (fresh) {
      SummaryRow row;
      row.estimator = r.estimator;
      row.selector = r.selector;
      row.tuning = r.selector == "fixed" ? r.tuning : kNaN;
      rows.push_back(row);
    }
    SummaryRow& row = rows[it->second];
    ++row.reps;
    row.mean += r.beta_hat;
    row.mse += (r.beta_hat - beta) * (r.beta_hat - beta);
    row.mean_se += r.se;
    const double lo = r.beta_hat - kCiMultiplier * r.se;
    const double hi = r.beta_hat + kCiMultiplier * r.se;
    row.coverage += (lo <= beta && beta <= hi) ? 1.0 : 0.0;
    row.reject_rate += (lo > 0.0 || hi < 0.0) ? 1.0 : 0.0;
    row.mean_tuning += r.tuning;
  }
  for (auto& row : rows) {
    const double R = row.reps;
    row.mean /= R;
    row.mse /= R;
    row.mean_se /= R;
    row.coverage /= R;
    row.reject_rate /= R;
    row.mean_tuning /= R;
    row.bias = row.mean - beta;
  }
  std::vector<double> ss(rows.size(), 0.0);
  for (const auto& r : records) {
    const std::size_t i = index.at(key_of(r.estimator, r.selector, r.tuning));
    ss[i] += (r.beta_hat - rows[i].mean) * (r.beta_hat - rows[i].mean);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].sd = std::sqrt(ss[i] / rows[i].reps);
  return rows;
}

std::vector<ReplicationSummary> run_scenario_betas(const SimulationScenario& scenario,
                                                   const std::vector<double>& betas) {
  scenario.validate();
  if (betas.empty()) throw InvalidArgument("run_scenario_betas: no beta values");
  const Grid grid = scenario.grid();
  const BatteryGrids grids = resolve_grids(scenario);
  const ScenarioSurfaces surf = prepare_surfaces(scenario);
  const FilteredSurfaces filtered = filter_surfaces(scenario, grids, surf.x);
  const auto& bat = scenario.battery;
  const bool tprs = bat.tprs_outcome || bat.tprs_preadjust;
  const int reps = scenario.replications;
  const std::size_t nb = betas.size();

  std::vector<std::vector<std::vector<ReplicationRecord>>> per_rep(reps,
                                                                   std::vector<std::vector<ReplicationRecord>>(nb));
  std::vector<std::exception_ptr> errors(reps);

#pragma omp parallel for schedule(dynamic, 1)
  for (int rep = 0; rep < reps; ++rep) {
    try {
      std::mt19937_64 rng(mix_seed(scenario.seed, 0x100000000ull + static_cast<std::uint64_t>(rep)));
      const std::vector<int> cells = sample_locations(grid, scenario.n, scenario.sampling, rng);
      const Eigen::VectorXd eps = scenario.sigma * standard_normals(scenario.n, rng);
      Cohort base;
      base.location = cells;
      base.x = gather(surf.x.values, cells);
      const Eigen::VectorXd f = gather(surf.f.values, cells);
      Eigen::VectorXd extra = f + eps;
      base.z.resize(scenario.n, 0);
      if (surf.z) {
        base.z = gather(surf.z->values, cells);
        extra += scenario.covariate->outcome_effect * base.z.col(0);
      }
      std::optional<BasisMatrix> basis;
      if (tprs) basis = tprs_basis(grid.coordinates(cells), grids.dfs.back());
      std::vector<Eigen::VectorXd> fourier_x2, wavelet_x2;
      for (const auto& v : filtered.fourier_x2) fourier_x2.push_back(gather(v, cells));
      for (const auto& v : filtered.wavelet_x2) wavelet_x2.push_back(gather(v, cells));

      for (std::size_t b = 0; b < nb; ++b) {
        Cohort c = base;
        c.y = betas[b] * c.x + extra;
        auto& out = per_rep[rep][b];
        const Estimate un = fit_unadjusted(c).estimate;
        out.push_back({rep, "unadjusted", "fixed", 0.0, un.beta_hat, un.se, false});
        if (bat.tprs_outcome) record_path(out, rep, "tprs-outcome", outcome_adjusted_path(c, *basis, grids.dfs), bat.rules);
        if (bat.tprs_preadjust) {
          record_path(out, rep, "tprs-preadjust", preadjusted_path(c, *basis, grids.dfs), bat.rules);
        }
        if (bat.fourier) {
          record_path(out, rep, "fourier",
                      filtered_path(c, grids.cutoffs, fourier_x2, filtered.fourier_removed, std::nullopt, "fourier"),
                      bat.rules);
        }
        if (bat.wavelet) {
          std::vector<double> levels(grids.levels.begin(), grids.levels.end());
          record_path(out, rep, "wavelet",
                      filtered_path(c, levels, wavelet_x2, filtered.wavelet_removed, std::nullopt, "wavelet"),
                      bat.rules);
        }
      }
    } catch (...) {
      errors[rep] = std::current_exception();
    }
  }
  for (int rep = 0; rep < reps; ++rep) {
    if (!errors[rep]) continue;
    try {
      std::rethrow_exception(errors[rep]);
    } catch (const std::exception& e) {
      throw Error("replication " + std::to_string(rep) + ": " + e.what());
    }
  }

  std::vector<ReplicationSummary> out(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    ReplicationSummary& s = out[b];
    s.scenario = scenario;
    s.scenario.beta = betas[b];
    s.theta = surf.theta;
    for (int rep = 0; rep < reps; ++rep) {
      auto& recs = per_rep[rep][b];
      s.records.insert(s.records.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    s.rows = summarize(s.records, betas[b]);
  }
  return out;
}

ReplicationSummary run_scenario(const SimulationScenario& scenario) {
  return std::move(run_scenario_betas(scenario, {scenario.beta}).front());
}

void write_records_csv(std::ostream& out, const ReplicationSummary& summary) {
  out << "rep,estimator,selector,tuning,beta,se,ci_lo,ci_hi,no_knee\n";
  for (const auto& r : summary.records) {
    out << r.rep << ',' << r.estimator << ',' << r.selector << ',' << format_number(r.tuning) << ','
        << format_number(r.beta_hat) << ',' << format_number(r.se) << ','
        << format_number(r.beta_hat - kCiMultiplier * r.se) << ',' << format_number(r.beta_hat + kCiMultiplier * r.se)
        << ',' << (r.no_knee ? 1 : 0) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<ReplicationSummary>& summaries) {
  out << "confounder,g_range,beta,theta,estimator,selector,tuning,reps,mean,bias,sd,mean_se,mse,coverage,"
         "reject_rate,mean_tuning\n";
  for (const auto& s : summaries) {
    for (const auto& r : s.rows) {
      out << confounder_name(s.scenario.confounder) << ',' << format_number(s.scenario.g_range) << ','
          << format_number(s.scenario.beta) << ',' << format_number(s.theta) << ',' << r.estimator << ','
          << r.selector << ',' << format_number(r.tuning) << ',' << r.reps << ',' << format_number(r.mean) << ','
          << format_number(r.bias) << ',' << format_number(r.sd) << ',' << format_number(r.mean_se) << ','
          << format_number(r.mse) << ',' << format_number(r.coverage) << ',' << format_number(r.reject_rate) << ','
          << format_number(r.mean_tuning) << '\n';
    }
  }
}

void write_wide_csv(std::ostream& out, const std::vector<ReplicationSummary>& summaries,
                    const std::string& statistic) {
  auto value = [&](const SummaryRow& r) {
    if (statistic == "mean") return r.mean;
    if (statistic == "bias") return r.bias;
    if (statistic == "sd") return r.sd;
    if (statistic == "mean_se") return r.mean_se;
    if (statistic == "mse") return r.mse;
    if (statistic == "coverage") return r.coverage;
    if (statistic == "reject_rate") return r.reject_rate;
    throw InvalidArgument("write_wide_csv: unknown statistic '" + statistic + "'");
  };
  std::vector<std::string> columns;
  std::map<std::string, std::size_t> col_index;
  auto label = [](const SummaryRow& r) {
    return r.selector == "fixed" ? r.estimator + ":" + format_number(r.tuning) : r.estimator + ":" + r.selector;
  };
  for (const auto& s : summaries) {
    for (const auto& r : s.rows) {
      if (col_index.emplace(label(r), columns.size()).second) columns.push_back(label(r));
    }
  }
  out << "confounder,g_range,beta";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (const auto& s : summaries) {
    std::vector<std::string> cells(columns.size(), "NA");
    for (const auto& r : s.rows) cells[col_index.at(label(r))] = format_number(value(r));
    out << confounder_name(s.scenario.confounder) << ',' << format_number(s.scenario.g_range) << ','
        << format_number(s.scenario.beta);
    for (const auto& c : cells) out << ',' << c;
    out << '\n';
  }
}

}  // namespace spconf
