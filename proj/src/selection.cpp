#include "spconf/selection.hpp"

#include <cmath>
#include <limits>

#include "spconf/errors.hpp"

namespace spconf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SelectionOutcome argmin_outcome(const AdjustmentPath& path, std::vector<double> values, std::string rule) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  SelectionOutcome out;
  out.rule = std::move(rule);
  out.chosen_index = best;
  out.chosen_tuning = path[best].tuning;
  out.estimate = path[best].estimate;
  out.criterion = std::move(values);
  return out;
}

void require_nonempty(const AdjustmentPath& path, const char* who) {
  if (path.empty()) throw InvalidArgument(std::string(who) + ": empty adjustment path");
}

}  // namespace

std::string rule_name(Rule rule) {
  switch (rule) {
    case Rule::aic: return "aic";
    case Rule::bic: return "bic";
    case Rule::aic_ne: return "aic-ne";
    case Rule::bic_ne: return "bic-ne";
    case Rule::mse: return "mse";
    case Rule::knee: return "knee";
  }
  return "?";
}

Rule parse_rule(const std::string& name) {
  for (Rule r : {Rule::aic, Rule::bic, Rule::aic_ne, Rule::bic_ne, Rule::mse, Rule::knee}) {
    if (rule_name(r) == name) return r;
  }
  throw InvalidArgument("unknown selection rule '" + name + "' (expected aic, bic, aic-ne, bic-ne, mse, knee)");
}

bool rule_needs_no_exposure(Rule rule) { return rule == Rule::aic_ne || rule == Rule::bic_ne; }

SelectionOutcome select_ic(const AdjustmentPath& path, Criterion criterion, bool use_no_exposure) {
  require_nonempty(path, "select_ic");
  std::vector<double> values;
  values.reserve(path.size());
  for (const auto& e : path.entries()) {
    const FitSummary* s = &e.full;
    if (use_no_exposure) {
      if (!e.no_exposure) {
        throw InvalidArgument("select_ic: no-exposure fit missing at tuning " + std::to_string(e.tuning));
      }
      s = &*e.no_exposure;
    }
    values.push_back(criterion == Criterion::aic ? s->aic() : s->bic());
  }
  std::string rule = criterion == Criterion::aic ? "aic" : "bic";
  if (use_no_exposure) rule += "-ne";
  return argmin_outcome(path, std::move(values), std::move(rule));
}

SelectionOutcome select_mse(const AdjustmentPath& path, std::optional<double> m_prime) {
  require_nonempty(path, "select_mse");
  std::size_t ref = path.size() - 1;
  if (m_prime) {
    auto found = path.find(*m_prime);
    if (!found) throw InvalidArgument("select_mse: m' = " + std::to_string(*m_prime) + " is not on the path");
    ref = *found;
  }
  const double beta_ref = path[ref].estimate.beta_hat;
  std::vector<double> values;
  values.reserve(path.size());
  for (const auto& e : path.entries()) {
    const double bias = e.estimate.beta_hat - beta_ref;
    values.push_back(bias * bias + e.estimate.se * e.estimate.se);
  }
  return argmin_outcome(path, std::move(values), "mse");
}

SelectionOutcome select_knee(const AdjustmentPath& path) {
  const std::size_t len = path.size();
  if (len < 4) throw InvalidArgument("select_knee: need at least 4 path entries (got " + std::to_string(len) + ")");
  std::vector<double> d1(len - 1), d2(len - 2);
  for (std::size_t i = 0; i + 1 < len; ++i) d1[i] = path[i + 1].estimate.beta_hat - path[i].estimate.beta_hat;
  for (std::size_t i = 0; i + 1 < d1.size(); ++i) d2[i] = d1[i + 1] - d1[i];
  std::size_t peak = 0;
  for (std::size_t i = 1; i < d2.size(); ++i) {
    if (d2[i] > d2[peak]) peak = i;
  }

  SelectionOutcome out;
  out.rule = "knee";
  out.criterion.assign(len, kNaN);
  for (std::size_t i = 0; i < d1.size(); ++i) out.criterion[i] = d1[i];

  std::optional<std::size_t> chosen;
  for (std::size_t i = peak + 1; i + 1 < d1.size(); ++i) {
    if (std::abs(d1[i]) < std::abs(d1[i + 1])) {
      chosen = i;
      break;
    }
  }
  if (!chosen) {
    chosen = len - 1;
    out.no_knee = true;
  }
  out.chosen_index = *chosen;
  out.chosen_tuning = path[*chosen].tuning;
  out.estimate = path[*chosen].estimate;
  return out;
}

SelectionOutcome select(const AdjustmentPath& path, Rule rule, std::optional<double> m_prime) {
  switch (rule) {
    case Rule::aic: return select_ic(path, Criterion::aic, false);
    case Rule::bic: return select_ic(path, Criterion::bic, false);
    case Rule::aic_ne: return select_ic(path, Criterion::aic, true);
    case Rule::bic_ne: return select_ic(path, Criterion::bic, true);
    case Rule::mse: return select_mse(path, m_prime);
    case Rule::knee: return select_knee(path);
  }
  throw InvalidArgument("select: unknown rule");
}

}  // namespace spconf
