#include "drsae/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <optional>

#include "drsae/csv.hpp"
#include "drsae/error.hpp"

namespace drsae {

const char* to_string(Method m) {
  switch (m) {
    case Method::HT: return "ht";
    case Method::Hajek: return "hajek";
    case Method::Direct: return "direct";
  }
  return "unknown";
}

double AreaEstimate::se() const { return var_hat >= 0.0 ? std::sqrt(var_hat) : std::numeric_limits<double>::quiet_NaN(); }

ScoreRow score_row(const ScoreInputs& in) {
  ScoreRow r;
  const double resid = in.t == 1 ? (in.y - in.m1) / in.e : -(in.y - in.m0) / (1.0 - in.e);
  r.phi2 = in.m1 - in.m0;
  r.phi1 = resid + r.phi2;
  const double denom = in.pi_s * in.p_area;
  r.w1 = in.pi_a / denom;
  r.w2 = ((in.in_area ? 1.0 : 0.0) - in.pi_a) / denom;
  r.phi = r.w1 * r.phi1 + r.w2 * r.phi2;
  return r;
}

std::vector<ScoreRow> score_rows(const SurveyDataset& data, const NuisanceSet& nuis,
                                 const AuxiliaryProbabilities& aux, int area_j) {
  if (area_j < 1 || area_j > aux.j_count()) throw InputError("score_rows: area out of range");
  std::vector<ScoreRow> rows(data.n());
  const double p = aux.p(area_j);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto& rec = data[i];
    const auto ii = static_cast<Eigen::Index>(i);
    ScoreInputs in{rec.y,        rec.t, nuis.m1(ii), nuis.m0(ii), nuis.e(ii), nuis.pi_a_of(i, area_j),
                   aux.pi_s(i, area_j), p,         rec.area == area_j};
    auto r = score_row(in);
    r.unit = i;
    r.area = area_j;
    auto check = [&](double v, const char* what) {
      if (!std::isfinite(v)) {
        throw NumericError("score_rows: non-finite " + std::string(what) + " for record " + std::to_string(i + 1) +
                           " (area " + std::to_string(area_j) + ")");
      }
    };
    check(r.phi1, "phi1");
    check(r.phi2, "phi2");
    check(r.w1, "w1");
    check(r.w2, "w2");
    check(r.phi, "phi");
    rows[i] = r;
  }
  return rows;
}

AreaEstimate ht_estimate(std::span<const ScoreRow> rows, double n) {
  if (rows.empty()) throw InputError("ht_estimate: no score rows");
  AreaEstimate est;
  est.method = Method::HT;
  est.area = rows.front().area;
  double sum = 0.0, wsum = 0.0;
  for (const auto& r : rows) {
    if (r.trimmed) {
      ++est.n_trimmed;
      continue;
    }
    ++est.n_used;
    sum += r.phi;
    wsum += r.w1;
  }
  if (est.n_used == 0) throw InputError("ht_estimate: every row was trimmed");
  const double divisor = n - static_cast<double>(est.n_trimmed);
  est.tau_hat = sum / divisor;
  est.mean_w1 = wsum / static_cast<double>(est.n_used);
  est.var_hat = variance_ht(rows, divisor, est.tau_hat);
  return est;
}

AreaEstimate hajek_estimate(std::span<const ScoreRow> rows) {
  if (rows.empty()) throw InputError("hajek_estimate: no score rows");
  AreaEstimate est;
  est.method = Method::Hajek;
  est.area = rows.front().area;
  double sum = 0.0, wsum = 0.0;
  for (const auto& r : rows) {
    if (r.trimmed) {
      ++est.n_trimmed;
      continue;
    }
    ++est.n_used;
    sum += r.phi;
    wsum += r.w1;
  }
  if (!(wsum > 0.0)) throw NumericError("hajek_estimate: sum of w1 is not positive");
  est.tau_hat = sum / wsum;
  const auto n = static_cast<double>(est.n_used);
  est.mean_w1 = wsum / n;
  est.var_hat = variance_hajek(rows, n, est.tau_hat, est.mean_w1);
  return est;
}

double variance_ht(std::span<const ScoreRow> rows, double n, double tau_hat) {
  double ss = 0.0;
  double used = 0.0;
  for (const auto& r : rows) {
    if (r.trimmed) continue;
    const double d = r.phi - tau_hat;
    ss += d * d;
    used += 1.0;
  }
  // Units outside the stored rows carry phi = 0.
  ss += std::max(0.0, n - used) * tau_hat * tau_hat;
  return ss / (n * n);
}

double variance_hajek(std::span<const ScoreRow> rows, double n, double tau_hat, double mean_w1) {
  if (!(mean_w1 > 0.0)) throw NumericError("variance_hajek: mean w1 is not positive");
  double ss = 0.0;
  for (const auto& r : rows) {
    if (r.trimmed) continue;
    const double d = r.phi - tau_hat * r.w1;
    ss += d * d;
  }
  return ss / (n * n * mean_w1 * mean_w1);
}

std::vector<ScoreRow> trim_scores(std::vector<ScoreRow> rows, double threshold) {
  if (!(threshold > 0.0)) throw InputError("trim_scores: threshold must be positive");
  for (auto& r : rows) r.trimmed = std::fabs(r.phi) > threshold;
  return rows;
}

// ---------------------------------------------------------------------------
// Direct (within-area) estimator

namespace {

struct ArmFits {
  LinearModel m1;
  LinearModel m0;
  LogitModel e;
};

ArmFits fit_arms(const Matrix& X, const Vector& y, const Vector& t, const std::vector<Eigen::Index>& rows,
                 const FitOptions& opts) {
  std::vector<Eigen::Index> treated, control;
  for (auto r : rows) (t(r) == 1.0 ? treated : control).push_back(r);
  if (treated.empty() || control.empty()) throw InputError("direct: training rows contain a single arm");
  auto sub = [&](const std::vector<Eigen::Index>& idx) {
    Matrix m(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
    return m;
  };
  auto vals = [](const Vector& v, const std::vector<Eigen::Index>& idx) {
    Vector o(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) o(static_cast<Eigen::Index>(k)) = v(idx[k]);
    return o;
  };
  ArmFits f;
  f.m1 = ols_fit(sub(treated), vals(y, treated), true);
  f.m0 = ols_fit(sub(control), vals(y, control), true);
  f.e = logistic_fit(sub(rows), vals(t, rows), opts);
  return f;
}

}  // namespace

AreaPredictions fit_area_nuisances(const SurveyDataset& data, int area_j, const FoldAssignment& folds, double clip,
                                   const FitOptions& opts) {
  if (folds.fold_of.size() != data.n()) throw InputError("direct: fold assignment size mismatch");
  AreaPredictions preds;
  preds.units = data.area_indices(area_j);
  std::size_t treated = 0;
  for (auto i : preds.units) treated += static_cast<std::size_t>(data[i].t);
  const std::size_t control = preds.units.size() - treated;
  if (treated == 0 || control == 0) {
    throw InfeasibleError("direct estimator infeasible for area " + std::to_string(area_j) + ": " +
                          (treated == 0 ? "no treated" : "no control") + " units");
  }
  const Matrix X = design_matrix(data, preds.units);
  const auto n = X.rows();
  Vector y(n), t(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    y(r) = data[preds.units[static_cast<std::size_t>(r)]].y;
    t(r) = data[preds.units[static_cast<std::size_t>(r)]].t;
  }
  preds.m1.assign(static_cast<std::size_t>(n), 0.0);
  preds.m0.assign(static_cast<std::size_t>(n), 0.0);
  preds.e.assign(static_cast<std::size_t>(n), 0.5);

  auto store = [&](const ArmFits& f, const std::vector<Eigen::Index>& eval_rows) {
    for (auto r : eval_rows) {
      auto row = X.row(r);
      preds.m1[static_cast<std::size_t>(r)] = row.dot(f.m1.coef);
      preds.m0[static_cast<std::size_t>(r)] = row.dot(f.m0.coef);
      const double eta = row.dot(f.e.coef);
      preds.e[static_cast<std::size_t>(r)] = std::clamp(1.0 / (1.0 + std::exp(-eta)), clip, 1.0 - clip);
    }
  };

  // Area units keep their global fold; each is predicted from the area
  // units outside its fold. A complement missing an arm falls back to the
  // fit on all area units.
  std::optional<ArmFits> pooled;
  auto pooled_fit = [&]() -> const ArmFits& {
    if (!pooled) {
      std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
      for (Eigen::Index r = 0; r < n; ++r) all[static_cast<std::size_t>(r)] = r;
      pooled = fit_arms(X, y, t, all, opts);
    }
    return *pooled;
  };
  for (int k = 1; k <= folds.k; ++k) {
    std::vector<Eigen::Index> eval_rows, train;
    for (Eigen::Index r = 0; r < n; ++r) {
      (folds.fold_of[preds.units[static_cast<std::size_t>(r)]] == k ? eval_rows : train).push_back(r);
    }
    if (eval_rows.empty()) continue;
    std::size_t tr_treated = 0;
    for (auto r : train) tr_treated += t(r) == 1.0;
    if (tr_treated == 0 || tr_treated == train.size()) {
      store(pooled_fit(), eval_rows);
    } else {
      store(fit_arms(X, y, t, train, opts), eval_rows);
    }
  }
  return preds;
}

AreaEstimate direct_from_predictions(const SurveyDataset& data, const AuxiliaryProbabilities& aux, int area_j,
                                     const AreaPredictions& preds) {
  AreaEstimate est;
  est.method = Method::Direct;
  est.area = area_j;
  const double p = aux.p(area_j);
  double num = 0.0, den = 0.0;
  std::vector<double> v(preds.units.size()), phi1(preds.units.size());
  for (std::size_t r = 0; r < preds.units.size(); ++r) {
    const auto i = preds.units[r];
    ScoreInputs in{data[i].y, data[i].t, preds.m1[r], preds.m0[r], preds.e[r], 1.0, aux.pi_s(i, area_j), p, true};
    auto s = score_row(in);
    v[r] = s.w1;
    phi1[r] = s.phi1;
    num += v[r] * phi1[r];
    den += v[r];
  }
  if (!(den > 0.0)) throw NumericError("direct estimator: weights sum to zero");
  est.tau_hat = num / den;
  double ss = 0.0;
  for (std::size_t r = 0; r < v.size(); ++r) {
    const double d = v[r] * phi1[r] - est.tau_hat * v[r];
    ss += d * d;
  }
  est.var_hat = ss / (den * den);
  est.n_used = preds.units.size();
  est.mean_w1 = den / static_cast<double>(preds.units.size());
  return est;
}

AreaEstimate direct_estimate(const SurveyDataset& data, const AuxiliaryProbabilities& aux, int area_j,
                             const FoldAssignment& folds, double clip, const FitOptions& opts) {
  return direct_from_predictions(data, aux, area_j, fit_area_nuisances(data, area_j, folds, clip, opts));
}

// ---------------------------------------------------------------------------

namespace {

std::vector<AreaEstimate> estimate_one_area(const SurveyDataset& data, const NuisanceSet& nuis,
                                            const AuxiliaryProbabilities& aux, const EstimateOptions& opts, int j) {
  std::vector<AreaEstimate> out;
  if (opts.ht || opts.hajek) {
    auto rows = score_rows(data, nuis, aux, j);
    if (std::isfinite(opts.trim)) rows = trim_scores(std::move(rows), opts.trim);
    if (opts.ht) {
      const double n = aux.frame_size > 0.0 ? aux.frame_size : static_cast<double>(data.n());
      out.push_back(ht_estimate(rows, n));
    }
    if (opts.hajek) out.push_back(hajek_estimate(rows));
  }
  if (opts.direct) {
    try {
      out.push_back(direct_estimate(data, aux, j, nuis.folds, opts.clip));
    } catch (const InfeasibleError& e) {
      AreaEstimate est;
      est.area = j;
      est.method = Method::Direct;
      est.feasible = false;
      est.note = e.what();
      out.push_back(est);
    }
  }
  return out;
}

std::vector<AreaEstimate> flatten(std::vector<std::vector<AreaEstimate>>& per_area) {
  std::vector<AreaEstimate> out;
  for (auto& v : per_area) {
    for (auto& e : v) out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

std::vector<AreaEstimate> estimate_areas(const SurveyDataset& data, const NuisanceSet& nuis,
                                         const AuxiliaryProbabilities& aux, const EstimateOptions& opts) {
  const int J = aux.j_count();
  std::vector<std::vector<AreaEstimate>> per_area(static_cast<std::size_t>(J));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(J));
#pragma omp parallel for schedule(dynamic)
  for (int j = 1; j <= J; ++j) {
    try {
      per_area[static_cast<std::size_t>(j - 1)] = estimate_one_area(data, nuis, aux, opts, j);
    } catch (...) {
      errors[static_cast<std::size_t>(j - 1)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return flatten(per_area);
}

std::vector<AreaEstimate> estimate_areas_serial(const SurveyDataset& data, const NuisanceSet& nuis,
                                                const AuxiliaryProbabilities& aux, const EstimateOptions& opts) {
  const int J = aux.j_count();
  std::vector<std::vector<AreaEstimate>> per_area(static_cast<std::size_t>(J));
  for (int j = 1; j <= J; ++j) per_area[static_cast<std::size_t>(j - 1)] = estimate_one_area(data, nuis, aux, opts, j);
  return flatten(per_area);
}

void write_estimates_csv(std::span<const AreaEstimate> estimates, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  csv::write_row(out, {"area", "method", "tau_hat", "var_hat", "se", "n_used", "n_trimmed"});
  for (const auto& e : estimates) {
    if (!e.feasible) {
      csv::write_row(out, {std::to_string(e.area), to_string(e.method), "", "", "", "0", "0"});
      continue;
    }
    csv::write_row(out, {std::to_string(e.area), to_string(e.method), csv::format(e.tau_hat), csv::format(e.var_hat),
                         csv::format(e.se()), std::to_string(e.n_used), std::to_string(e.n_trimmed)});
  }
}

}  // namespace drsae
