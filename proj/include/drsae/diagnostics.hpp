#pragma once

#include <string>
#include <vector>

#include "drsae/data_model.hpp"
#include "drsae/nuisance.hpp"

namespace drsae {

/// Regression of Y on (1, area indicators 2..J, X[, Z]) and its column names.
struct DiagnosticDesign {
  Matrix design;
  Vector response;
  std::vector<std::string> columns;
};

DiagnosticDesign diagnostic_design(const SurveyDataset& data, bool include_z);

struct AreaCoefficient {
  int area = 0;  // 2..J; area 1 is the reference
  double coef = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool significant = false;  // the 95% interval excludes zero
};

struct DiagnosticReport {
  bool include_z = false;
  std::vector<AreaCoefficient> areas;
  double share_significant = 0.0;

  std::string variant() const { return include_z ? "with_z" : "without_z"; }
};

/// OLS with HC1 sandwich standard errors. Throws InputError when
/// n <= number of columns and SingularDesignError naming the collinear
/// columns when the design is rank deficient.
DiagnosticReport area_ignorability_check(const SurveyDataset& data, bool include_z);

/// `area,variant,coef,se,ci_lo,ci_hi,significant`
void write_diagnostics_csv(const std::vector<DiagnosticReport>& reports, const std::string& path);

}  // namespace drsae
