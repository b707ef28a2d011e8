#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "drsae/auxiliary.hpp"
#include "drsae/data_model.hpp"
#include "drsae/nuisance.hpp"

namespace drsae {

enum class Method { HT, Hajek, Direct };

const char* to_string(Method m);

/// Score ingredients for unit i and target area j:
///   phi1 = T(Y-m1)/e - (1-T)(Y-m0)/(1-e) + m1 - m0
///   phi2 = m1 - m0
///   w1   = pi_A(j|X,Z) / (pi_S(X,A=j) p(j))
///   w2   = (1{A=j} - pi_A(j|X,Z)) / (pi_S(X,A=j) p(j))
///   phi  = w1 phi1 + w2 phi2
struct ScoreRow {
  std::size_t unit = 0;
  int area = 0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
  double phi = 0.0;
  bool trimmed = false;
};

struct AreaEstimate {
  int area = 0;
  Method method = Method::Hajek;
  double tau_hat = std::numeric_limits<double>::quiet_NaN();
  double var_hat = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_used = 0;
  std::size_t n_trimmed = 0;
  double mean_w1 = std::numeric_limits<double>::quiet_NaN();
  bool feasible = true;
  std::string note;

  double se() const;
};

/// Plug-in values for a single unit.
struct ScoreInputs {
  double y = 0.0;
  int t = 0;
  double m1 = 0.0;
  double m0 = 0.0;
  double e = 0.5;
  double pi_a = 1.0;  // pi_A(j | X, Z)
  double pi_s = 1.0;  // pi_S(X, A=j)
  double p_area = 1.0;
  bool in_area = true;  // A_i == j
};

ScoreRow score_row(const ScoreInputs& in);

/// One row per survey record, using the cross-fitted predictions.
/// Throws NumericError naming the record and component on a non-finite value.
std::vector<ScoreRow> score_rows(const SurveyDataset& data, const NuisanceSet& nuis,
                                 const AuxiliaryProbabilities& aux, int area_j);

/// Mean of phi over untrimmed rows with divisor `n` (less trimmed rows).
AreaEstimate ht_estimate(std::span<const ScoreRow> rows, double n);
/// sum(phi) / sum(w1) over untrimmed rows.
AreaEstimate hajek_estimate(std::span<const ScoreRow> rows);

/// (1/n^2) sum over the n units of (phi - tau)^2. Units beyond the stored
/// rows have phi = 0 and contribute tau^2 each.
double variance_ht(std::span<const ScoreRow> rows, double n, double tau_hat);
/// (1/(n^2 wbar^2)) sum (phi - tau w1)^2.
double variance_hajek(std::span<const ScoreRow> rows, double n, double tau_hat, double mean_w1);

/// Flags rows with |phi| > threshold (strict) as trimmed.
std::vector<ScoreRow> trim_scores(std::vector<ScoreRow> rows, double threshold);

/// Area-local nuisance predictions for the direct estimator, aligned with
/// `units` (records of area j).
struct AreaPredictions {
  std::vector<std::size_t> units;
  std::vector<double> m1;
  std::vector<double> m0;
  std::vector<double> e;
};

/// Fits outcome regressions and an area-specific propensity on area-j
/// records only, cross-fitted along `folds` (the sample-wide assignment).
/// Throws InfeasibleError when area j lacks treated or control units.
AreaPredictions fit_area_nuisances(const SurveyDataset& data, int area_j, const FoldAssignment& folds, double clip,
                                   const FitOptions& opts = {});

/// Within-area AIPW scores weighted by 1/(pi_S p(j)), Hajek-normalized.
AreaEstimate direct_from_predictions(const SurveyDataset& data, const AuxiliaryProbabilities& aux, int area_j,
                                     const AreaPredictions& preds);

AreaEstimate direct_estimate(const SurveyDataset& data, const AuxiliaryProbabilities& aux, int area_j,
                             const FoldAssignment& folds, double clip, const FitOptions& opts = {});

struct EstimateOptions {
  bool ht = true;
  bool hajek = true;
  bool direct = true;
  double trim = std::numeric_limits<double>::infinity();
  double clip = 0.01;
};

/// Estimates for every area; infeasible direct cells come back with
/// feasible = false rather than throwing. Areas run in parallel.
std::vector<AreaEstimate> estimate_areas(const SurveyDataset& data, const NuisanceSet& nuis,
                                         const AuxiliaryProbabilities& aux, const EstimateOptions& opts);
std::vector<AreaEstimate> estimate_areas_serial(const SurveyDataset& data, const NuisanceSet& nuis,
                                                const AuxiliaryProbabilities& aux, const EstimateOptions& opts);

/// `area,method,tau_hat,var_hat,se,n_used,n_trimmed`
void write_estimates_csv(std::span<const AreaEstimate> estimates, const std::string& path);

}  // namespace drsae
