#include "spconf/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "spconf/errors.hpp"

namespace spconf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& column, std::size_t line) {
  if (s.empty()) throw InputError("empty value in column '" + column + "'", line);
  if (s == "NA" || s == "nan" || s == "NaN") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw InputError("cannot parse '" + s + "' in column '" + column + "'", line);
  return v;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw InputError("cannot open '" + path + "'");
  return f;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw Error("cannot write '" + path + "'");
  return f;
}

bool next_content_line(std::istream& in, std::string& line, std::size_t& number) {
  while (std::getline(in, line)) {
    ++number;
    if (!trim(line).empty()) return true;
  }
  return false;
}

// Distinct sorted coordinates and their common spacing.
struct Axis {
  std::vector<double> values;
  double spacing = 1.0;
};

Axis infer_axis(std::vector<double> coords, const char* name) {
  std::sort(coords.begin(), coords.end());
  Axis axis;
  for (double c : coords) {
    if (axis.values.empty() || c - axis.values.back() > 1e-9 * std::max(1.0, std::abs(c))) axis.values.push_back(c);
  }
  if (axis.values.size() < 2) throw InputError(std::string("field: need at least two distinct ") + name + " values");
  double step = axis.values[1] - axis.values[0];
  for (std::size_t i = 2; i < axis.values.size(); ++i) step = std::min(step, axis.values[i] - axis.values[i - 1]);
  for (std::size_t i = 1; i < axis.values.size(); ++i) {
    const double k = (axis.values[i] - axis.values[0]) / step;
    if (std::abs(k - std::round(k)) > 1e-6) {
      throw InputError(std::string("field: ") + name + " coordinates are not on a regular lattice");
    }
  }
  axis.spacing = step;
  return axis;
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw InputError("binary field: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64_le(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw InputError("binary field: truncated data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : "undefined"; }

std::optional<double> k_hat_at(const std::vector<std::optional<double>>& k_hats, std::size_t i,
                               const Estimate& e) {
  if (!k_hats.empty()) return k_hats.at(i);
  return e.k_hat;
}

void write_estimate_cols(std::ostream& out, const Estimate& e) {
  out << format_number(e.beta_hat) << ',' << format_number(e.se) << ',' << format_number(e.ci_lo) << ','
      << format_number(e.ci_hi);
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CohortTable read_cohort_csv(std::istream& in, const Grid& grid) {
  std::string line;
  std::size_t number = 0;
  if (!next_content_line(in, line, number)) throw InputError("cohort: empty file");
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col.emplace(header[i], i).second) throw InputError("cohort: duplicate column '" + header[i] + "'", number);
  }
  for (const char* required : {"id", "u", "v", "x", "y"}) {
    if (!col.count(required)) throw InputError(std::string("cohort: missing required column '") + required + "'", number);
  }
  std::vector<std::size_t> zcols;
  for (int k = 1;; ++k) {
    auto it = col.find("z" + std::to_string(k));
    if (it == col.end()) break;
    zcols.push_back(it->second);
  }
  for (const auto& [name, idx] : col) {
    if (name.size() > 1 && name[0] == 'z' && std::all_of(name.begin() + 1, name.end(), ::isdigit)) {
      const int k = std::stoi(name.substr(1));
      if (k < 1 || k > static_cast<int>(zcols.size())) {
        throw InputError("cohort: covariate column '" + name + "' without z1..z" + std::to_string(k - 1), number);
      }
    }
  }
  const bool has_weight = col.count("weight") > 0;
  const std::size_t wcol = has_weight ? col["weight"] : 0;

  std::vector<std::string> ids;
  std::vector<double> us, vs, xs, ys, ws;
  std::vector<std::vector<double>> zs(zcols.size());
  while (next_content_line(in, line, number)) {
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw InputError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()),
                       number);
    }
    auto num = [&](std::size_t i) {
      const double v = parse_double(cells[i], header[i], number);
      if (!std::isfinite(v)) throw InputError("non-finite value in column '" + header[i] + "'", number);
      return v;
    };
    ids.push_back(cells[col["id"]]);
    us.push_back(num(col["u"]));
    vs.push_back(num(col["v"]));
    xs.push_back(num(col["x"]));
    ys.push_back(num(col["y"]));
    for (std::size_t k = 0; k < zcols.size(); ++k) zs[k].push_back(num(zcols[k]));
    if (has_weight) {
      const double w = num(wcol);
      if (!(w > 0.0)) throw InputError("weight must be positive", number);
      ws.push_back(w);
    }
  }
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (n == 0) throw InputError("cohort: no subjects");

  CohortTable t;
  t.ids = std::move(ids);
  t.coordinates.resize(n, 2);
  t.cohort.location.resize(n);
  t.cohort.x = Eigen::Map<Eigen::VectorXd>(xs.data(), n);
  t.cohort.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  t.cohort.z.resize(n, static_cast<Eigen::Index>(zcols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    t.coordinates(i, 0) = us[i];
    t.coordinates(i, 1) = vs[i];
    t.cohort.location[i] = grid.nearest(us[i], vs[i]);
    for (std::size_t k = 0; k < zcols.size(); ++k) t.cohort.z(i, static_cast<Eigen::Index>(k)) = zs[k][i];
  }
  if (has_weight) t.cohort.weights = Eigen::Map<Eigen::VectorXd>(ws.data(), n);
  return t;
}

CohortTable read_cohort_csv(const std::string& path, const Grid& grid) {
  auto f = open_in(path);
  return read_cohort_csv(f, grid);
}

Field read_field_csv(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  if (!next_content_line(in, line, number)) throw InputError("field: empty file");
  const auto header = split_csv(line);
  if (header.size() != 3 || header[0] != "u" || header[1] != "v" || header[2] != "value") {
    throw InputError("field: header must be 'u,v,value'", number);
  }
  struct Row {
    double u, v, value;
    std::size_t line;
  };
  std::vector<Row> rows;
  while (next_content_line(in, line, number)) {
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw InputError("expected 3 fields, found " + std::to_string(cells.size()), number);
    Row r{parse_double(cells[0], "u", number), parse_double(cells[1], "v", number),
          parse_double(cells[2], "value", number), number};
    if (!std::isfinite(r.u) || !std::isfinite(r.v)) throw InputError("non-finite coordinate", number);
    rows.push_back(r);
  }
  if (rows.empty()) throw InputError("field: no rows");
  std::vector<double> us, vs;
  for (const auto& r : rows) {
    us.push_back(r.u);
    vs.push_back(r.v);
  }
  const Axis au = infer_axis(us, "u");
  const Axis av = infer_axis(vs, "v");
  const int M = static_cast<int>(std::lround((au.values.back() - au.values.front()) / au.spacing)) + 1;
  const int N = static_cast<int>(std::lround((av.values.back() - av.values.front()) / av.spacing)) + 1;
  Grid g(M, N, au.spacing, av.spacing, au.values.front() - 0.5 * au.spacing, av.values.front() - 0.5 * av.spacing);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(g.size());
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.size()), 0);
  for (const auto& r : rows) {
    const int s = g.nearest(r.u, r.v);
    if (mask[s]) throw InputError("field: duplicate cell", r.line);
    if (std::isfinite(r.value)) {
      values[s] = r.value;
      mask[s] = 1;
    }
  }
  if (std::all_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) mask.clear();
  return Field(g, std::move(values), std::move(mask));
}

Field read_field_csv(const std::string& path) {
  auto f = open_in(path);
  return read_field_csv(f);
}

void write_field_csv(std::ostream& out, const Field& field) {
  out << "u,v,value\n";
  const Grid& g = field.grid;
  for (int s = 0; s < g.size(); ++s) {
    out << format_number(g.u(s)) << ',' << format_number(g.v(s)) << ','
        << (field.valid(s) ? format_number(field.values[s]) : "NA") << '\n';
  }
}

void write_field_csv(const std::string& path, const Field& field) {
  auto f = open_out(path);
  write_field_csv(f, field);
}

Field read_field_binary(std::istream& in, const std::optional<Grid>& grid) {
  const auto M = static_cast<std::int32_t>(get_u32_le(in));
  const auto N = static_cast<std::int32_t>(get_u32_le(in));
  if (M < 2 || N < 2) throw InputError("binary field: dimensions must be at least 2x2");
  Grid g = grid ? *grid : Grid::unit_square(M, N);
  if (g.M != M || g.N != N) throw InputError("binary field: header dimensions do not match the grid");
  Eigen::VectorXd values(g.size());
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.size()), 1);
  bool any_masked = false;
  for (int s = 0; s < g.size(); ++s) {
    const double v = get_f64_le(in);
    if (std::isfinite(v)) {
      values[s] = v;
    } else {
      values[s] = 0.0;
      mask[s] = 0;
      any_masked = true;
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw InputError("binary field: trailing bytes after data");
  if (!any_masked) mask.clear();
  return Field(g, std::move(values), std::move(mask));
}

Field read_field_binary(const std::string& path, const std::optional<Grid>& grid) {
  auto f = open_in(path, std::ios::in | std::ios::binary);
  return read_field_binary(f, grid);
}

void write_field_binary(std::ostream& out, const Field& field) {
  put_u32_le(out, static_cast<std::uint32_t>(field.grid.M));
  put_u32_le(out, static_cast<std::uint32_t>(field.grid.N));
  for (int s = 0; s < field.grid.size(); ++s) put_f64_le(out, field.valid(s) ? field.values[s] : std::nan(""));
}

void write_field_binary(const std::string& path, const Field& field) {
  auto f = open_out(path, std::ios::out | std::ios::binary);
  write_field_binary(f, field);
}

Field read_field(const std::string& path, const std::optional<Grid>& grid) {
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  if (!csv) return read_field_binary(path, grid);
  Field f = read_field_csv(path);
  if (grid && !(f.grid.M == grid->M && f.grid.N == grid->N)) {
    throw InputError("field: CSV grid " + std::to_string(f.grid.M) + "x" + std::to_string(f.grid.N) +
                     " does not match the requested grid");
  }
  return f;
}

void write_estimates_csv(std::ostream& out, const AdjustmentPath& path,
                         const std::vector<std::optional<double>>& k_hats) {
  out << "basis,m,k_hat,beta,se,ci_lo,ci_hi\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& e = path[i];
    out << path.basis() << ',' << format_number(e.tuning) << ',' << opt_number(k_hat_at(k_hats, i, e.estimate))
        << ',';
    write_estimate_cols(out, e.estimate);
    out << '\n';
  }
}

void write_path_csv(std::ostream& out, const AdjustmentPath& path,
                    const std::vector<std::optional<double>>& k_hats) {
  out << "basis,m,k_hat,beta,se,ci_lo,ci_hi,log_lik,n_params,aic,bic,log_lik_ne,n_params_ne,aic_ne,bic_ne\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& e = path[i];
    out << path.basis() << ',' << format_number(e.tuning) << ',' << opt_number(k_hat_at(k_hats, i, e.estimate))
        << ',';
    write_estimate_cols(out, e.estimate);
    out << ',' << format_number(e.full.log_lik) << ',' << e.full.n_params << ',' << format_number(e.full.aic())
        << ',' << format_number(e.full.bic());
    if (e.no_exposure) {
      out << ',' << format_number(e.no_exposure->log_lik) << ',' << e.no_exposure->n_params << ','
          << format_number(e.no_exposure->aic()) << ',' << format_number(e.no_exposure->bic());
    } else {
      out << ",NA,NA,NA,NA";
    }
    out << '\n';
  }
}

void write_selection_csv(std::ostream& out, const std::vector<SelectionOutcome>& outcomes,
                         const std::vector<std::optional<double>>& k_hats) {
  out << "rule,m,k_hat,beta,se,ci_lo,ci_hi,no_knee\n";
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    out << o.rule << ',' << format_number(o.chosen_tuning) << ','
        << opt_number(k_hats.empty() ? o.estimate.k_hat : k_hats.at(i)) << ',';
    write_estimate_cols(out, o.estimate);
    out << ',' << (o.no_knee ? 1 : 0) << '\n';
  }
}

void write_bandwidth_csv(std::ostream& out, const std::vector<double>& tunings,
                         const std::vector<std::optional<double>>& k_hats) {
  if (tunings.size() != k_hats.size()) throw InvalidArgument("bandwidth table: length mismatch");
  out << "tuning,k_hat\n";
  for (std::size_t i = 0; i < tunings.size(); ++i) {
    out << format_number(tunings[i]) << ',' << opt_number(k_hats[i]) << '\n';
  }
}

}  // namespace spconf
