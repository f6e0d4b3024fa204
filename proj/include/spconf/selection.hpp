#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spconf/path.hpp"

namespace spconf {

enum class Criterion { aic, bic };
enum class Rule { aic, bic, aic_ne, bic_ne, mse, knee };

std::string rule_name(Rule rule);
/// Accepts "aic", "bic", "aic-ne", "bic-ne", "mse", "knee".
Rule parse_rule(const std::string& name);
bool rule_needs_no_exposure(Rule rule);

struct SelectionOutcome {
  std::string rule;
  std::size_t chosen_index = 0;
  double chosen_tuning = 0.0;
  Estimate estimate;
  std::vector<double> criterion;  // one value per path entry (NaN where undefined)
  bool no_knee = false;
};

/// argmin of AIC or BIC over the path, from the full models or (NE variant)
/// from the no-exposure models. Ties go to the smaller tuning value.
SelectionOutcome select_ic(const AdjustmentPath& path, Criterion criterion, bool use_no_exposure);

/// argmin over m of (beta(m) - beta(m'))^2 + se(m)^2, with m' defaulting to
/// the largest tuning value. Ties go to the smaller tuning value.
SelectionOutcome select_mse(const AdjustmentPath& path, std::optional<double> m_prime = std::nullopt);

/// First m past the largest second difference of beta(m) at which |D1|
/// stops decreasing, with differences taken over consecutive path entries.
/// Falls back to the largest m (no_knee = true) when there is no such m.
SelectionOutcome select_knee(const AdjustmentPath& path);

SelectionOutcome select(const AdjustmentPath& path, Rule rule, std::optional<double> m_prime = std::nullopt);

}  // namespace spconf
