#include "drsae/diagnostics.hpp"

#include <cmath>
#include <fstream>

#include "drsae/csv.hpp"
#include "drsae/error.hpp"

namespace drsae {

namespace {

constexpr double kZ95 = 1.96;

}  // namespace

DiagnosticDesign diagnostic_design(const SurveyDataset& data, bool include_z) {
  const int J = data.j_count();
  const std::size_t dz = include_z ? data.dim_z() : 0;
  const auto p = static_cast<Eigen::Index>(1 + (J - 1) + data.dim_x() + dz);
  const auto n = static_cast<Eigen::Index>(data.n());
  DiagnosticDesign d;
  d.design = Matrix::Zero(n, p);
  d.response.resize(n);
  d.columns.push_back("intercept");
  for (int j = 2; j <= J; ++j) d.columns.push_back("area_" + std::to_string(j));
  for (std::size_t k = 0; k < data.dim_x(); ++k) d.columns.push_back("x_" + std::to_string(k + 1));
  for (std::size_t k = 0; k < dz; ++k) d.columns.push_back("z_" + std::to_string(k + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = data[static_cast<std::size_t>(i)];
    d.response(i) = r.y;
    d.design(i, 0) = 1.0;
    if (r.area >= 2) d.design(i, r.area - 1) = 1.0;
    Eigen::Index c = J;
    for (double v : r.x) d.design(i, c++) = v;
    for (std::size_t k = 0; k < dz; ++k) d.design(i, c++) = r.z[k];
  }
  return d;
}

DiagnosticReport area_ignorability_check(const SurveyDataset& data, bool include_z) {
  auto d = diagnostic_design(data, include_z);
  const auto n = d.design.rows();
  const auto p = d.design.cols();
  if (n <= p) {
    throw InputError("diagnose: " + std::to_string(n) + " records for " + std::to_string(p) +
                     " regression columns; need more records than columns");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(d.design);
  if (qr.rank() < p) {
    // Columns the pivoting pushed past the rank are the redundant ones.
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      if (!names.empty()) names += ", ";
      names += d.columns[static_cast<std::size_t>(perm(k))];
    }
    throw SingularDesignError("diagnose: collinear design; redundant columns: " + names);
  }
  const Vector beta = qr.solve(d.response);
  const Vector resid = d.response - d.design * beta;
  const Matrix bread = (d.design.transpose() * d.design).inverse();
  const Matrix meat = d.design.transpose() * resid.array().square().matrix().asDiagonal() * d.design;
  const Matrix cov = bread * meat * bread * (static_cast<double>(n) / static_cast<double>(n - p));

  DiagnosticReport rep;
  rep.include_z = include_z;
  std::size_t sig = 0;
  for (int j = 2; j <= data.j_count(); ++j) {
    const Eigen::Index c = j - 1;
    AreaCoefficient a;
    a.area = j;
    a.coef = beta(c);
    a.se = std::sqrt(cov(c, c));
    a.ci_lo = a.coef - kZ95 * a.se;
    a.ci_hi = a.coef + kZ95 * a.se;
    a.significant = a.ci_lo > 0.0 || a.ci_hi < 0.0;
    sig += a.significant;
    rep.areas.push_back(a);
  }
  if (!rep.areas.empty()) rep.share_significant = static_cast<double>(sig) / static_cast<double>(rep.areas.size());
  return rep;
}

void write_diagnostics_csv(const std::vector<DiagnosticReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  csv::write_row(out, {"area", "variant", "coef", "se", "ci_lo", "ci_hi", "significant"});
  for (const auto& r : reports) {
    for (const auto& a : r.areas) {
      csv::write_row(out, {std::to_string(a.area), r.variant(), csv::format(a.coef), csv::format(a.se),
                           csv::format(a.ci_lo), csv::format(a.ci_hi), a.significant ? "1" : "0"});
    }
  }
}

}  // namespace drsae
