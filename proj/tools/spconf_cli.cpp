// spconf: command-line front end for spatial confounding adjustment,
// effective bandwidths and simulation studies.

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spconf/bandwidth.hpp"
#include "spconf/errors.hpp"
#include "spconf/grid.hpp"
#include "spconf/io.hpp"
#include "spconf/path.hpp"
#include "spconf/selection.hpp"
#include "spconf/simulation.hpp"
#include "spconf/spectral.hpp"
#include "spconf/tprs.hpp"
#include "spconf/wavelet.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace spconf;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitRank = 3;

// "3:20,25:100:5,150" -> 3..20, 25..100 by 5, 150.
std::vector<double> parse_grid_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream items(text);
  std::string item;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) {
      throw InvalidArgument(flag + ": cannot parse '" + s + "'");
    }
    return v;
  };
  while (std::getline(items, item, ',')) {
    if (item.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream ps(item);
    std::string p;
    while (std::getline(ps, p, ':')) parts.push_back(p);
    if (parts.size() == 1) {
      out.push_back(number(parts[0]));
    } else if (parts.size() == 2 || parts.size() == 3) {
      const double lo = number(parts[0]), hi = number(parts[1]);
      const double step = parts.size() == 3 ? number(parts[2]) : 1.0;
      if (!(step > 0.0) || hi < lo) throw InvalidArgument(flag + ": bad range '" + item + "'");
      const long count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
      for (long k = 0; k <= count; ++k) out.push_back(lo + static_cast<double>(k) * step);
    } else {
      throw InvalidArgument(flag + ": bad range '" + item + "'");
    }
  }
  if (out.empty()) throw InvalidArgument(flag + ": empty grid");
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (!(out[i] > out[i - 1])) throw InvalidArgument(flag + ": values must be strictly increasing");
  }
  return out;
}

std::vector<int> parse_int_grid(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (double v : parse_grid_list(text, flag)) {
    if (v != std::round(v)) throw InvalidArgument(flag + ": expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::pair<int, int> parse_grid_dims(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw InvalidArgument("--grid: expected MxN, got '" + text + "'");
  int m = 0, n = 0;
  try {
    std::size_t a = 0, b = 0;
    m = std::stoi(text.substr(0, x), &a);
    n = std::stoi(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidArgument("--grid: expected MxN, got '" + text + "'");
  }
  if (m < 2 || n < 2) throw InvalidArgument("--grid: dimensions must be at least 2");
  return {m, n};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

template <class Fn>
void write_csv(const fs::path& path, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  write_text(path, s.str());
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  int threads = 0;
};

void apply_threads(const Common& c) {
  if (c.threads > 0) omp_set_num_threads(c.threads);
}

void write_sidecar(const Common& c, const std::string& command, json config) {
  json doc;
  doc["command"] = command;
  doc["seed"] = c.seed;
  doc["threads"] = c.threads > 0 ? c.threads : omp_get_max_threads();
  doc["config"] = std::move(config);
  write_text(fs::path(c.out) / "config.json", doc.dump(2) + "\n");
}

// ---------------------------------------------------------------- adjust

struct AdjustOptions {
  std::string cohort;
  std::string exposure;
  std::string grid;
  std::string basis = "tprs";
  std::string method = "outcome";
  std::string df_grid;
  std::string cutoff_grid;
  std::string level_grid;
  std::string rule;
  std::optional<double> m_prime;
  std::string weights = "none";
  bool no_bandwidth = false;
};

struct AdjustResult {
  AdjustmentPath path;
  std::vector<std::optional<double>> k_hats;
  int n = 0;
};

Grid cohort_grid(const AdjustOptions& o, const std::optional<Field>& exposure) {
  if (exposure) return exposure->grid;
  if (!o.grid.empty()) {
    const auto [m, n] = parse_grid_dims(o.grid);
    return Grid::unit_square(m, n);
  }
  return Grid::unit_square(512);
}

AdjustResult run_adjust(const AdjustOptions& o, const Common& c) {
  if (o.basis != "tprs" && o.basis != "fourier" && o.basis != "wavelet") {
    throw InvalidArgument("--basis must be tprs, fourier or wavelet");
  }
  if (o.weights != "none" && o.weights != "inverse-count") {
    throw InvalidArgument("--weights must be none or inverse-count");
  }
  if (o.method != "outcome" && o.method != "preadjust") throw InvalidArgument("--method must be outcome or preadjust");
  if (o.basis != "tprs" && !o.df_grid.empty()) throw InvalidArgument("--df-grid applies to the tprs basis only");
  if (o.basis != "fourier" && !o.cutoff_grid.empty()) throw InvalidArgument("--cutoff-grid applies to the fourier basis only");
  if (o.basis != "wavelet" && !o.level_grid.empty()) throw InvalidArgument("--level-grid applies to the wavelet basis only");
  if (o.basis != "tprs" && o.method != "outcome") throw InvalidArgument("--method applies to the tprs basis only");
  if (o.basis != "tprs" && o.exposure.empty()) throw InvalidArgument("--exposure is required for the " + o.basis + " basis");

  std::optional<Field> exposure;
  if (!o.exposure.empty()) {
    std::optional<Grid> g;
    if (!o.grid.empty()) {
      const auto [m, n] = parse_grid_dims(o.grid);
      g = Grid::unit_square(m, n);
    }
    exposure = read_field(o.exposure, g);
  }
  const Grid grid = cohort_grid(o, exposure);
  CohortTable table = read_cohort_csv(o.cohort, grid);
  Cohort& cohort = table.cohort;
  if (o.weights == "inverse-count") {
    const Eigen::VectorXd w = dedupe_locations(cohort).inverse_count_weights();
    cohort.weights = cohort.weights ? cohort.weights->cwiseProduct(w).eval() : w;
  }

  AdjustResult out;
  out.n = cohort.n();
  SmootherBandwidthOptions bw;
  bw.seed = c.seed;
  if (o.basis == "tprs") {
    std::vector<int> dfs = o.df_grid.empty() ? EstimatorBattery::default_tprs_dfs() : parse_int_grid(o.df_grid, "--df-grid");
    if (o.df_grid.empty()) {
      const int cap = static_cast<int>(dedupe_locations(cohort).unique_locations.size()) - 2;
      std::erase_if(dfs, [&](int m) { return m > cap; });
    }
    if (dfs.empty()) throw InvalidArgument("--df-grid: no usable df values for this cohort");
    if (dfs.front() < 3) throw InvalidArgument("--df-grid: TPRS df must be at least 3");
    TprsOptions topt;
    topt.knot_seed = c.seed;
    const BasisMatrix basis = tprs_basis(table.coordinates, dfs.back(), topt);
    out.path = o.method == "outcome" ? outcome_adjusted_path(cohort, basis, dfs)
                                     : preadjusted_path(cohort, basis, dfs, cohort.weights);
    for (int m : dfs) {
      out.k_hats.push_back(o.no_bandwidth ? std::nullopt
                                          : effective_bandwidth_smoother(basis.leading(m), table.coordinates, {}, bw).k_hat);
    }
  } else if (o.basis == "fourier") {
    std::vector<double> cutoffs;
    if (o.cutoff_grid.empty()) {
      for (int w = 1; w <= 30; ++w) cutoffs.push_back(w);
    } else {
      cutoffs = parse_grid_list(o.cutoff_grid, "--cutoff-grid");
    }
    std::vector<Eigen::VectorXd> x2s;
    std::vector<int> removed;
    for (double w : cutoffs) {
      x2s.push_back(highpass_preadjust(*exposure, w).gather(cohort.location));
      removed.push_back(FrequencyFilter(w, grid).removed_count());
      out.k_hats.push_back(o.no_bandwidth ? std::nullopt : effective_bandwidth_filter(w, grid).k_hat);
    }
    out.path = filtered_path(cohort, cutoffs, x2s, removed, cohort.weights, "fourier");
  } else {
    const Field embedded = embed_dyadic(*exposure);
    int J = 0;
    while ((1 << J) < embedded.grid.M) ++J;
    std::vector<int> levels;
    if (o.level_grid.empty()) {
      for (int L = 0; L <= J - 2; ++L) levels.push_back(L);
    } else {
      levels = parse_int_grid(o.level_grid, "--level-grid");
    }
    std::vector<Eigen::VectorXd> x2s;
    std::vector<int> removed;
    std::vector<double> tunings;
    for (int L : levels) {
      if (L < 0 || L >= J) throw InvalidArgument("--level-grid: levels must lie in 0.." + std::to_string(J - 1));
      x2s.push_back(crop(wavelet_preadjust(embedded, L), grid).gather(cohort.location));
      removed.push_back(static_cast<int>(thresholded_count(L)));
      tunings.push_back(L);
      out.k_hats.push_back(effective_bandwidth_wavelet(L, embedded.grid.width()).k_hat);
    }
    out.path = filtered_path(cohort, tunings, x2s, removed, cohort.weights, "wavelet");
  }
  return out;
}

json adjust_config(const AdjustOptions& o) {
  json j;
  j["cohort"] = o.cohort;
  j["exposure"] = o.exposure;
  j["grid"] = o.grid;
  j["basis"] = o.basis;
  j["method"] = o.method;
  j["df_grid"] = o.df_grid;
  j["cutoff_grid"] = o.cutoff_grid;
  j["level_grid"] = o.level_grid;
  j["rule"] = o.rule;
  j["m_prime"] = o.m_prime ? json(*o.m_prime) : json(nullptr);
  j["weights"] = o.weights;
  j["bandwidth"] = !o.no_bandwidth;
  return j;
}

std::vector<Rule> requested_rules(const std::string& text, const AdjustmentPath& path) {
  std::vector<Rule> rules;
  if (text == "all") {
    for (Rule r : {Rule::aic, Rule::bic, Rule::aic_ne, Rule::bic_ne, Rule::mse, Rule::knee}) {
      if (rule_needs_no_exposure(r) && (path.empty() || !path[0].no_exposure)) continue;
      if (r == Rule::knee && path.size() < 4) continue;
      rules.push_back(r);
    }
    return rules;
  }
  for (const auto& name : split(text, ',')) rules.push_back(parse_rule(name));
  return rules;
}

void report_selection(const fs::path& dir, const AdjustResult& res, const std::vector<Rule>& rules,
                      std::optional<double> m_prime, bool criterion_table) {
  std::vector<SelectionOutcome> outcomes;
  std::vector<std::optional<double>> k_hats;
  for (Rule r : rules) {
    outcomes.push_back(select(res.path, r, m_prime));
    k_hats.push_back(res.k_hats.at(outcomes.back().chosen_index));
  }
  write_csv(dir / "selection.csv", [&](std::ostream& s) { write_selection_csv(s, outcomes, k_hats); });
  if (criterion_table) {
    write_csv(dir / "criteria.csv", [&](std::ostream& s) {
      s << "m";
      for (const auto& o : outcomes) s << ',' << o.rule;
      s << '\n';
      for (std::size_t i = 0; i < res.path.size(); ++i) {
        s << format_number(res.path[i].tuning);
        for (const auto& o : outcomes) s << ',' << format_number(o.criterion[i]);
        s << '\n';
      }
    });
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    std::cout << o.rule << ": m = " << format_number(o.chosen_tuning)
              << ", k_hat = " << (k_hats[i] ? format_number(*k_hats[i]) : "undefined")
              << ", beta = " << format_number(o.estimate.beta_hat) << " (95% CI " << format_number(o.estimate.ci_lo)
              << ", " << format_number(o.estimate.ci_hi) << ")" << (o.no_knee ? " [no knee]" : "") << '\n';
  }
}

int cmd_adjust(const AdjustOptions& o, const Common& c, bool select_mode) {
  apply_threads(c);
  fs::create_directories(c.out);
  const AdjustResult res = run_adjust(o, c);
  const fs::path dir(c.out);
  write_csv(dir / "estimates.csv", [&](std::ostream& s) { write_estimates_csv(s, res.path, res.k_hats); });
  write_csv(dir / "path.csv", [&](std::ostream& s) { write_path_csv(s, res.path, res.k_hats); });
  const std::string rule = select_mode && o.rule.empty() ? "all" : o.rule;
  if (!rule.empty()) report_selection(dir, res, requested_rules(rule, res.path), o.m_prime, select_mode);
  json cfg = adjust_config(o);
  cfg["rule"] = rule;
  cfg["subjects"] = res.n;
  write_sidecar(c, select_mode ? "select" : "adjust", cfg);
  if (rule.empty()) {
    for (std::size_t i = 0; i < res.path.size(); ++i) {
      const auto& e = res.path[i].estimate;
      std::cout << res.path.basis() << " m = " << format_number(res.path[i].tuning)
                << ": beta = " << format_number(e.beta_hat) << ", se = " << format_number(e.se) << '\n';
    }
  }
  return 0;
}

// ------------------------------------------------------------- bandwidth

struct BandwidthOptions {
  std::string basis = "fourier";
  std::string grid = "128x128";
  std::string df_grid;
  std::string cutoff_grid;
  std::string level_grid;
};

int cmd_bandwidth(const BandwidthOptions& o, const Common& c) {
  apply_threads(c);
  const auto [M, N] = parse_grid_dims(o.grid);
  const Grid grid = Grid::unit_square(M, N);
  std::vector<double> tunings;
  std::vector<std::optional<double>> k_hats;
  if (o.basis == "tprs") {
    const std::vector<int> dfs =
        o.df_grid.empty() ? std::vector<int>{10, 20, 40, 60, 85, 100, 150, 200} : parse_int_grid(o.df_grid, "--df-grid");
    if (dfs.front() < 3) throw InvalidArgument("--df-grid: TPRS df must be at least 3");
    const Eigen::MatrixX2d coords = grid.coordinates();
    TprsOptions topt;
    topt.knot_seed = c.seed;
    const BasisMatrix basis = tprs_basis(coords, dfs.back(), topt);
    SmootherBandwidthOptions bw;
    bw.seed = c.seed;
    for (int m : dfs) {
      tunings.push_back(m);
      k_hats.push_back(effective_bandwidth_smoother(basis.leading(m), coords, {}, bw).k_hat);
    }
  } else if (o.basis == "fourier") {
    const std::vector<double> cutoffs =
        o.cutoff_grid.empty() ? parse_grid_list("1:30", "--cutoff-grid") : parse_grid_list(o.cutoff_grid, "--cutoff-grid");
    for (double w : cutoffs) {
      if (w < 0) throw InvalidArgument("--cutoff-grid: cutoffs must be >= 0");
      tunings.push_back(w);
      k_hats.push_back(effective_bandwidth_filter(w, grid).k_hat);
    }
  } else if (o.basis == "wavelet") {
    int J = 0;
    while ((1 << J) < std::max(M, N)) ++J;
    const double width = (1 << J) * grid.spacing_u;
    std::vector<int> levels;
    if (o.level_grid.empty()) {
      for (int L = 0; L < J; ++L) levels.push_back(L);
    } else {
      levels = parse_int_grid(o.level_grid, "--level-grid");
    }
    for (int L : levels) {
      tunings.push_back(L);
      k_hats.push_back(effective_bandwidth_wavelet(L, width).k_hat);
    }
  } else {
    throw InvalidArgument("--basis must be tprs, fourier or wavelet");
  }
  fs::create_directories(c.out);
  write_csv(fs::path(c.out) / "bandwidth.csv", [&](std::ostream& s) { write_bandwidth_csv(s, tunings, k_hats); });
  for (std::size_t i = 0; i < tunings.size(); ++i) {
    std::cout << o.basis << ' ' << format_number(tunings[i]) << ": k_hat = "
              << (k_hats[i] ? format_number(*k_hats[i]) : "undefined") << '\n';
  }
  json cfg;
  cfg["basis"] = o.basis;
  cfg["grid"] = o.grid;
  cfg["df_grid"] = o.df_grid;
  cfg["cutoff_grid"] = o.cutoff_grid;
  cfg["level_grid"] = o.level_grid;
  write_sidecar(c, "bandwidth", cfg);
  return 0;
}

// -------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string config;
  std::string confounder;
  std::string g_range;
  std::string beta;
  std::optional<int> reps;
  std::optional<int> n;
  std::string grid;
  bool paper_scale = false;
  std::string estimators;
  std::string df_grid;
  std::string cutoff_grid;
  std::string level_grid;
  std::string rules;
};

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw InputError(where + ": unknown key '" + k + "'");
    }
  }
}

struct SimulationPlan {
  SimulationScenario base;
  std::vector<ConfounderKind> confounders{ConfounderKind::f1};
  std::vector<double> g_ranges{0.05};
  std::vector<double> betas{1.0};
};

void set_estimators(EstimatorBattery& b, const std::vector<std::string>& names) {
  b.tprs_outcome = b.tprs_preadjust = b.fourier = b.wavelet = false;
  for (const auto& e : names) {
    if (e == "tprs-outcome") b.tprs_outcome = true;
    else if (e == "tprs-preadjust") b.tprs_preadjust = true;
    else if (e == "fourier") b.fourier = true;
    else if (e == "wavelet") b.wavelet = true;
    else throw InvalidArgument("unknown estimator '" + e + "' (expected tprs-outcome, tprs-preadjust, fourier, wavelet)");
  }
}

std::vector<ConfounderKind> parse_confounders(const std::string& text) {
  if (text == "all") return {std::begin(kAllConfounders), std::end(kAllConfounders)};
  std::vector<ConfounderKind> out;
  for (const auto& s : split(text, ',')) out.push_back(parse_confounder(s));
  if (out.empty()) throw InvalidArgument("--confounder: empty list");
  return out;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& s : split(text, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || used == 0) throw InvalidArgument(flag + ": cannot parse '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument(flag + ": empty list");
  return out;
}

SimulationPlan read_plan_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  SimulationPlan plan;
  SimulationScenario& s = plan.base;
  try {
    check_keys(j, {"grid_side", "confounder", "g_range", "beta", "target_bias", "sigma", "n", "replications", "seed",
                   "sampling", "range_factor", "estimators", "tprs_dfs", "fourier_cutoffs", "wavelet_levels",
                   "rules", "wavelet_family", "covariate", "paper_scale"},
               path);
    if (get_or(j, "paper_scale", false)) s = SimulationScenario::paper_scale();
    s.grid_side = get_or(j, "grid_side", s.grid_side);
    if (j.contains("confounder")) {
      const auto& c = j.at("confounder");
      plan.confounders = c.is_array() ? std::vector<ConfounderKind>{} : parse_confounders(c.get<std::string>());
      if (c.is_array()) {
        for (const auto& k : c) plan.confounders.push_back(parse_confounder(k.get<std::string>()));
      }
    }
    auto number_list = [&](const char* key, std::vector<double> fallback) {
      if (!j.contains(key)) return fallback;
      const auto& v = j.at(key);
      if (v.is_array()) return v.get<std::vector<double>>();
      return std::vector<double>{v.get<double>()};
    };
    plan.g_ranges = number_list("g_range", plan.g_ranges);
    plan.betas = number_list("beta", plan.betas);
    s.target_bias = get_or(j, "target_bias", s.target_bias);
    s.sigma = get_or(j, "sigma", s.sigma);
    s.n = get_or(j, "n", s.n);
    s.replications = get_or(j, "replications", s.replications);
    s.seed = get_or(j, "seed", s.seed);
    if (j.contains("sampling")) {
      const auto v = j.at("sampling").get<std::string>();
      if (v == "without-replacement") s.sampling = SamplingScheme::uniform_without_replacement;
      else if (v == "with-replacement") s.sampling = SamplingScheme::uniform_with_replacement;
      else throw InputError(path + ": sampling must be without-replacement or with-replacement");
    }
    s.gp.range_factor = get_or(j, "range_factor", s.gp.range_factor);
    if (j.contains("estimators")) set_estimators(s.battery, j.at("estimators").get<std::vector<std::string>>());
    s.battery.tprs_dfs = get_or(j, "tprs_dfs", s.battery.tprs_dfs);
    s.battery.fourier_cutoffs = get_or(j, "fourier_cutoffs", s.battery.fourier_cutoffs);
    s.battery.wavelet_levels = get_or(j, "wavelet_levels", s.battery.wavelet_levels);
    s.battery.wavelet_family = get_or(j, "wavelet_family", s.battery.wavelet_family);
    if (j.contains("rules")) {
      s.battery.rules.clear();
      for (const auto& r : j.at("rules")) s.battery.rules.push_back(parse_rule(r.get<std::string>()));
    }
    if (j.contains("covariate")) {
      const auto& cj = j.at("covariate");
      check_keys(cj, {"range", "exposure_loading", "outcome_effect"}, path + ": covariate");
      CovariateSpec cov;
      cov.range = get_or(cj, "range", cov.range);
      cov.exposure_loading = get_or(cj, "exposure_loading", cov.exposure_loading);
      cov.outcome_effect = get_or(cj, "outcome_effect", cov.outcome_effect);
      s.covariate = cov;
    }
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return plan;
}

json scenario_json(const SimulationPlan& plan) {
  const auto& s = plan.base;
  json j;
  j["grid_side"] = s.grid_side;
  json conf = json::array();
  for (auto k : plan.confounders) conf.push_back(confounder_name(k));
  j["confounder"] = conf;
  j["g_range"] = plan.g_ranges;
  j["beta"] = plan.betas;
  j["target_bias"] = s.target_bias;
  j["sigma"] = s.sigma;
  j["n"] = s.n;
  j["replications"] = s.replications;
  j["seed"] = s.seed;
  j["surface_seed"] = s.surface_seed;
  j["sampling"] = s.sampling == SamplingScheme::uniform_without_replacement ? "without-replacement" : "with-replacement";
  j["range_factor"] = s.gp.range_factor;
  json est = json::array();
  if (s.battery.tprs_outcome) est.push_back("tprs-outcome");
  if (s.battery.tprs_preadjust) est.push_back("tprs-preadjust");
  if (s.battery.fourier) est.push_back("fourier");
  if (s.battery.wavelet) est.push_back("wavelet");
  j["estimators"] = est;
  j["tprs_dfs"] = s.battery.tprs_dfs.empty() ? EstimatorBattery::default_tprs_dfs() : s.battery.tprs_dfs;
  j["fourier_cutoffs"] = s.battery.fourier_cutoffs;
  j["wavelet_levels"] = s.battery.wavelet_levels;
  j["wavelet_family"] = s.battery.wavelet_family;
  json rules = json::array();
  for (Rule r : s.battery.rules) rules.push_back(rule_name(r));
  j["rules"] = rules;
  if (s.covariate) {
    j["covariate"] = {{"range", s.covariate->range},
                      {"exposure_loading", s.covariate->exposure_loading},
                      {"outcome_effect", s.covariate->outcome_effect}};
  }
  return j;
}

int cmd_simulate(const SimulateOptions& o, const Common& c, bool seed_given) {
  apply_threads(c);
  SimulationPlan plan = o.config.empty() ? SimulationPlan{} : read_plan_config(o.config);
  SimulationScenario& s = plan.base;
  if (o.paper_scale) {
    s.grid_side = 512;
    s.replications = 1000;
  }
  if (seed_given || o.config.empty()) s.seed = c.seed;
  if (!o.confounder.empty()) plan.confounders = parse_confounders(o.confounder);
  if (!o.g_range.empty()) plan.g_ranges = parse_number_list(o.g_range, "--g-range");
  if (!o.beta.empty()) plan.betas = parse_number_list(o.beta, "--beta");
  if (o.reps) s.replications = *o.reps;
  if (o.n) s.n = *o.n;
  if (!o.grid.empty()) {
    const auto [m, n] = parse_grid_dims(o.grid);
    if (m != n) throw InvalidArgument("--grid: simulations use a square grid");
    s.grid_side = m;
  }
  if (!o.estimators.empty()) set_estimators(s.battery, split(o.estimators, ','));
  if (!o.df_grid.empty()) s.battery.tprs_dfs = parse_int_grid(o.df_grid, "--df-grid");
  if (!o.cutoff_grid.empty()) s.battery.fourier_cutoffs = parse_grid_list(o.cutoff_grid, "--cutoff-grid");
  if (!o.level_grid.empty()) s.battery.wavelet_levels = parse_int_grid(o.level_grid, "--level-grid");
  if (!o.rules.empty()) {
    s.battery.rules.clear();
    if (o.rules != "none") {
      for (const auto& r : split(o.rules, ',')) s.battery.rules.push_back(parse_rule(r));
    }
  }
  s.validate();

  fs::create_directories(c.out);
  const fs::path dir(c.out);
  std::vector<ReplicationSummary> all;
  for (ConfounderKind kind : plan.confounders) {
    for (double g_range : plan.g_ranges) {
      SimulationScenario sc = s;
      sc.confounder = kind;
      sc.g_range = g_range;
      std::cerr << "simulating " << confounder_name(kind) << ", g range " << format_number(g_range) << ", "
                << sc.replications << " replications\n";
      auto summaries = run_scenario_betas(sc, plan.betas);
      for (auto& r : summaries) {
        const std::string stem = "records-" + confounder_name(kind) + "-g" + format_number(g_range) + "-beta" +
                                 format_number(r.scenario.beta) + ".csv";
        write_csv(dir / stem, [&](std::ostream& out) { write_records_csv(out, r); });
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
        all.push_back(std::move(r));
      }
    }
  }
  write_csv(dir / "summary.csv", [&](std::ostream& out) { write_summary_csv(out, all); });
  for (const char* stat : {"bias", "mse", "coverage", "reject_rate"}) {
    write_csv(dir / (std::string("summary-") + stat + ".csv"),
              [&](std::ostream& out) { write_wide_csv(out, all, stat); });
  }
  for (const auto& r : all) {
    if (const auto* row = r.find("unadjusted", "fixed")) {
      std::cout << confounder_name(r.scenario.confounder) << " g=" << format_number(r.scenario.g_range)
                << " beta=" << format_number(r.scenario.beta) << " theta=" << format_number(r.theta)
                << ": unadjusted mean " << format_number(row->mean) << ", coverage " << format_number(row->coverage)
                << '\n';
    }
  }
  json cfg = scenario_json(plan);
  json thetas = json::array();
  for (const auto& r : all) {
    thetas.push_back({{"confounder", confounder_name(r.scenario.confounder)},
                      {"g_range", r.scenario.g_range},
                      {"beta", r.scenario.beta},
                      {"theta", number_or_null(r.theta)}});
  }
  cfg["theta"] = thetas;
  write_sidecar(c, "simulate", cfg);
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
}

void add_adjust_options(CLI::App* sub, AdjustOptions& o) {
  sub->add_option("--cohort", o.cohort, "Cohort CSV (id,u,v,x,y[,z1..zp][,weight])")->required();
  sub->add_option("--exposure", o.exposure, "Exposure field (.csv or binary); required for fourier and wavelet");
  sub->add_option("--grid", o.grid, "Grid MxN on the unit square when no exposure field is given");
  sub->add_option("--basis", o.basis, "tprs, fourier or wavelet")->capture_default_str();
  sub->add_option("--method", o.method, "TPRS adjustment: outcome or preadjust")->capture_default_str();
  sub->add_option("--df-grid", o.df_grid, "TPRS df values, e.g. 3:20,25:100:5");
  sub->add_option("--cutoff-grid", o.cutoff_grid, "Fourier cutoffs, e.g. 1:30");
  sub->add_option("--level-grid", o.level_grid, "Wavelet levels, e.g. 0:6");
  sub->add_option("--m-prime", o.m_prime, "Reference tuning value for the mse rule (default: largest)");
  sub->add_option("--weights", o.weights, "none or inverse-count")->capture_default_str();
  sub->add_flag("--no-bandwidth", o.no_bandwidth, "Skip the effective bandwidth column for tprs and fourier");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial confounding adjustment, effective bandwidths and simulations"};
  app.require_subcommand(1);

  Common common;
  AdjustOptions adjust;
  AdjustOptions selection;
  BandwidthOptions bandwidth;
  SimulateOptions simulate;

  auto* adj = app.add_subcommand("adjust", "Estimate the exposure effect along an adjustment path");
  add_adjust_options(adj, adjust);
  adj->add_option("--rule", adjust.rule, "Selection rule(s): aic,bic,aic-ne,bic-ne,mse,knee or all");
  add_common(adj, common);

  auto* sel = app.add_subcommand("select", "Choose the amount of adjustment and report the criterion table");
  add_adjust_options(sel, selection);
  sel->add_option("--rule", selection.rule, "Selection rule(s): aic,bic,aic-ne,bic-ne,mse,knee or all (default)");
  add_common(sel, common);

  auto* bw = app.add_subcommand("bandwidth", "Effective bandwidth table for one basis");
  bw->add_option("--basis", bandwidth.basis, "tprs, fourier or wavelet")->capture_default_str();
  bw->add_option("--grid", bandwidth.grid, "Grid MxN on the unit square")->capture_default_str();
  bw->add_option("--df-grid", bandwidth.df_grid, "TPRS df values");
  bw->add_option("--cutoff-grid", bandwidth.cutoff_grid, "Fourier cutoffs");
  bw->add_option("--level-grid", bandwidth.level_grid, "Wavelet levels");
  add_common(bw, common);

  auto* sim = app.add_subcommand("simulate", "Run a simulation study");
  sim->add_option("--config", simulate.config, "Scenario JSON file");
  sim->add_option("--confounder", simulate.confounder, "f1..f6, comma separated, or all");
  sim->add_option("--g-range", simulate.g_range, "Range(s) of the exposure noise process, comma separated");
  sim->add_option("--beta", simulate.beta, "True effect(s), comma separated");
  sim->add_option("--reps", simulate.reps, "Replications")->check(CLI::PositiveNumber);
  sim->add_option("--n", simulate.n, "Subjects per replication")->check(CLI::PositiveNumber);
  sim->add_option("--grid", simulate.grid, "Square grid MxM");
  sim->add_flag("--paper-scale", simulate.paper_scale, "512x512 grid and 1000 replications");
  sim->add_option("--estimators", simulate.estimators, "tprs-outcome,tprs-preadjust,fourier,wavelet");
  sim->add_option("--df-grid", simulate.df_grid, "TPRS df values");
  sim->add_option("--cutoff-grid", simulate.cutoff_grid, "Fourier cutoffs");
  sim->add_option("--level-grid", simulate.level_grid, "Wavelet levels");
  sim->add_option("--rule", simulate.rules, "Selection rules to evaluate, comma separated, or none");
  add_common(sim, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*adj) return cmd_adjust(adjust, common, false);
    if (*sel) return cmd_adjust(selection, common, true);
    if (*bw) return cmd_bandwidth(bandwidth, common);
    if (*sim) return cmd_simulate(simulate, common, sim->count("--seed") > 0);
  } catch (const RankDeficientError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRank;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
