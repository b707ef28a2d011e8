#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "drsae/data_model.hpp"
#include "drsae/estimator.hpp"

namespace drsae::sim {

enum class Transform { Linear, Squared };

/// Covariates entering each component: (X, Z) or (X^2, Z^2).
struct TransformFlags {
  Transform outcome = Transform::Linear;
  Transform propensity = Transform::Linear;
  Transform area = Transform::Linear;
};

/// Flags of the eight standard designs; throws InputError outside 1..8.
TransformFlags flags_for_dgp(int dgp_id);

struct DgpConfig {
  int dgp_id = 1;
  std::size_t N = 100000;
  int J = 50;
  std::size_t R = 200;
  std::uint64_t seed = 1;
  TransformFlags flags{};
  double noise_sd = 10.0;
  double alpha_sd = 0.15;
  double sample_intercept = 4.0;
  double sample_slope = 0.3;
  int folds = 5;
  double clip = 0.01;
  /// Draw a new population (covariates, area coefficients, outcomes) in
  /// every replication. When false, one population is drawn from the
  /// master seed and only the sample and treatments vary.
  bool redraw_population = true;

  /// Throws InputError on out-of-range fields.
  void validate() const;
};

/// Sets dgp_id and the matching flags.
DgpConfig config_for_dgp(int dgp_id);

DgpConfig config_from_json(const std::string& text, DgpConfig base = {});
DgpConfig load_config(const std::string& path, DgpConfig base = {});
std::string config_to_json(const DgpConfig& cfg);

// Regression functions of the designs.
double f0(double d1, double d2);
double f1(double d1, double d2);
double f_treat(double d1, double d2);
/// 1 / (1 + exp(intercept - slope * x))
double p_sample(const DgpConfig& cfg, double x);

struct GeneratedPopulation {
  std::vector<double> x;
  std::vector<double> z;
  std::vector<int> area;  // 1..J
  std::vector<double> y0;
  std::vector<double> y1;
  std::vector<double> p_sample;   // P(S=1|X_i)
  std::vector<double> tau;        // finite-population mean of Y(1)-Y(0), index j-1
  /// Area mean of f1 - f0 with the noise left out: the conditional-mean effect
  std::vector<double> tau_conditional;
  std::vector<double> area_size;  // N_j
  /// alpha[j-1] = (intercept, slope on D1, slope on D2)
  std::vector<std::array<double, 3>> alpha;
  int J = 0;
  bool alpha_redrawn = false;  // an empty area forced a second draw
};

/// Throws InfeasibleError if an area stays empty after one redraw of alpha.
GeneratedPopulation generate_population(const DgpConfig& cfg, std::uint64_t seed);
/// Same as above with user-supplied area coefficients.
GeneratedPopulation generate_population(const DgpConfig& cfg, std::uint64_t seed,
                                        const std::vector<std::array<double, 3>>& alpha);

/// Bernoulli inclusion at P(S=1|X), then T ~ f_T for sampled units.
/// Records carry weight 1/P(S=1|X). An empty draw is repeated with the
/// next seed; `redraws` counts how often that happened.
SurveyDataset draw_sample(const DgpConfig& cfg, const GeneratedPopulation& pop, std::uint64_t seed,
                          int* redraws = nullptr);

/// Auxiliary probabilities of a generated population: p(j) = N_j / N,
/// known P(S=1|X) that ignores the area, frame size N.
AuxiliaryProbabilities known_auxiliary(const DgpConfig& cfg, const GeneratedPopulation& pop, const SurveyDataset& data);

/// Estimates of one replication with the truth they target.
struct ReplicationResult {
  std::vector<double> tau;  // index j-1
  std::vector<double> tau_conditional;  // noise-free counterpart, index j-1
  /// estimates[m][j-1] for m = HT, Hajek, Direct
  std::array<std::vector<AreaEstimate>, 3> estimates;
  std::size_t n_sample = 0;
};

/// Seed of replication r: a counter-based split of the master seed.
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r);

/// One full pass: population (unless given), sample, K-fold cross-fitting
/// with the linear working models, and all three estimators.
ReplicationResult run_replication(const DgpConfig& cfg, std::uint64_t rep_seed,
                                  const GeneratedPopulation* fixed_pop = nullptr);

struct MetricRow {
  int area = 0;  // 0 for summary rows
  Method method = Method::Hajek;
  double bias = 0.0;
  double rmse = 0.0;
  double var_mc = 0.0;     // (1/R) sum (err - bias)^2
  double mse = 0.0;        // (1/R) sum err^2
  double prial = 0.0;      // NaN for the direct estimator itself
  double var_ratio = 0.0;  // mean_r(V_hat) / mse
  std::size_t reps_used = 0;
  std::size_t reps_paired = 0;  // reps with a feasible direct estimate
  std::size_t infeasible = 0;
};

struct SummaryRow {
  Method method = Method::Hajek;
  std::string stat;  // "mean" or "sd" across areas
  double bias = 0.0;
  double abs_bias = 0.0;
  double rmse = 0.0;
  double prial = 0.0;
  double var_ratio = 0.0;
};

struct MetricsTable {
  int dgp_id = 0;
  std::vector<MetricRow> rows;  // area-major: (1,HT), (1,Hajek), (1,Direct), (2,HT), ...
  std::vector<SummaryRow> summary;
  std::size_t reps = 0;
  double mean_sample_size = 0.0;

  const MetricRow& at(int area, Method m) const;
  const SummaryRow& mean_of(Method m) const;
};

/// Metrics from stored replications.
MetricsTable compute_metrics(int dgp_id, const std::vector<ReplicationResult>& reps);

/// All R replications in parallel; results are independent of the
/// thread count because each replication owns its seed.
std::vector<ReplicationResult> run_replications(const DgpConfig& cfg);
std::vector<ReplicationResult> run_replications_serial(const DgpConfig& cfg);

MetricsTable monte_carlo(const DgpConfig& cfg);
MetricsTable monte_carlo_serial(const DgpConfig& cfg);

/// `dgp,area,method,bias,rmse,prial,var_ratio`
void write_metrics_csv(const std::vector<MetricsTable>& tables, const std::string& path);
/// `dgp,method,stat,bias,abs_bias,rmse,prial,var_ratio`
void write_summary_csv(const std::vector<MetricsTable>& tables, const std::string& path);

}  // namespace drsae::sim
