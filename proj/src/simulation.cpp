#include "drsae/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "drsae/csv.hpp"
#include "drsae/error.hpp"
#include "drsae/nuisance.hpp"

namespace drsae::sim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent streams inside one replication.
enum Stream : std::uint64_t { kPopulation = 1, kSample = 2, kFolds = 3 };

std::uint64_t stream_seed(std::uint64_t rep_seed, Stream s) { return splitmix64(rep_seed ^ splitmix64(s)); }

std::pair<double, double> transform(Transform t, double x, double z) {
  if (t == Transform::Squared) return {x * x, z * z};
  return {x, z};
}

const char* transform_name(Transform t) { return t == Transform::Linear ? "linear" : "squared"; }

Transform transform_from(const std::string& s) {
  if (s == "linear") return Transform::Linear;
  if (s == "squared") return Transform::Squared;
  throw InputError("config: transform must be 'linear' or 'squared', got '" + s + "'");
}

std::string fmt(double v) { return std::isfinite(v) ? csv::format(v) : std::string(); }

}  // namespace

TransformFlags flags_for_dgp(int dgp_id) {
  if (dgp_id < 1 || dgp_id > 8) throw InputError("dgp must be in 1..8, got " + std::to_string(dgp_id));
  const int k = dgp_id - 1;
  auto pick = [](int bit) { return bit ? Transform::Squared : Transform::Linear; };
  // Outcome is the slow bit, propensity the fast one.
  return {pick((k >> 2) & 1), pick(k & 1), pick((k >> 1) & 1)};
}

void DgpConfig::validate() const {
  if (dgp_id < 1 || dgp_id > 8) throw InputError("dgp must be in 1..8, got " + std::to_string(dgp_id));
  if (N == 0) throw InputError("population size must be positive");
  if (J < 2) throw InputError("area count must be at least 2");
  if (R == 0) throw InputError("replication count must be positive");
  if (!(noise_sd >= 0.0) || !(alpha_sd >= 0.0)) throw InputError("noise_sd and alpha_sd must be non-negative");
  if (folds < 2) throw InputError("folds must be at least 2");
  if (!(clip > 0.0 && clip < 0.5)) throw InputError("clip must lie in (0, 0.5)");
  if (static_cast<std::size_t>(J) > N) throw InputError("more areas than population units");
}

DgpConfig config_for_dgp(int dgp_id) {
  DgpConfig cfg;
  cfg.flags = flags_for_dgp(dgp_id);
  cfg.dgp_id = dgp_id;
  return cfg;
}

DgpConfig config_from_json(const std::string& text, DgpConfig base) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: parse error: ") + e.what());
  }
  try {
    if (j.contains("dgp")) {
      base.dgp_id = j.at("dgp").get<int>();
      base.flags = flags_for_dgp(base.dgp_id);
    }
    if (j.contains("N")) base.N = j.at("N").get<std::size_t>();
    if (j.contains("J")) base.J = j.at("J").get<int>();
    if (j.contains("R")) base.R = j.at("R").get<std::size_t>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("noise_sd")) base.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("alpha_sd")) base.alpha_sd = j.at("alpha_sd").get<double>();
    if (j.contains("sample_intercept")) base.sample_intercept = j.at("sample_intercept").get<double>();
    if (j.contains("sample_slope")) base.sample_slope = j.at("sample_slope").get<double>();
    if (j.contains("folds")) base.folds = j.at("folds").get<int>();
    if (j.contains("clip")) base.clip = j.at("clip").get<double>();
    if (j.contains("redraw_population")) base.redraw_population = j.at("redraw_population").get<bool>();
    if (j.contains("transforms")) {
      const auto& t = j.at("transforms");
      if (t.contains("outcome")) base.flags.outcome = transform_from(t.at("outcome").get<std::string>());
      if (t.contains("propensity")) base.flags.propensity = transform_from(t.at("propensity").get<std::string>());
      if (t.contains("area")) base.flags.area = transform_from(t.at("area").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  base.validate();
  return base;
}

DgpConfig load_config(const std::string& path, DgpConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str(), base);
}

std::string config_to_json(const DgpConfig& cfg) {
  nlohmann::ordered_json j;
  j["dgp"] = cfg.dgp_id;
  j["N"] = cfg.N;
  j["J"] = cfg.J;
  j["R"] = cfg.R;
  j["seed"] = cfg.seed;
  j["transforms"] = {{"outcome", transform_name(cfg.flags.outcome)},
                     {"propensity", transform_name(cfg.flags.propensity)},
                     {"area", transform_name(cfg.flags.area)}};
  j["noise_sd"] = cfg.noise_sd;
  j["alpha_sd"] = cfg.alpha_sd;
  j["sample_intercept"] = cfg.sample_intercept;
  j["sample_slope"] = cfg.sample_slope;
  j["folds"] = cfg.folds;
  j["clip"] = cfg.clip;
  j["redraw_population"] = cfg.redraw_population;
  return j.dump(2);
}

double f0(double d1, double d2) { return 1.0 + 0.5 * d1 + 0.7 * d2; }
double f1(double d1, double d2) { return 2.0 + d1 + 1.4 * d2; }
double f_treat(double d1, double d2) { return 1.0 / (1.0 + std::exp(-(-0.2 + 0.4 * d1 + 0.4 * d2))); }
double p_sample(const DgpConfig& cfg, double x) {
  return 1.0 / (1.0 + std::exp(cfg.sample_intercept - cfg.sample_slope * x));
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::array<double, 3>> draw_alpha(const DgpConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, cfg.alpha_sd);
  std::vector<std::array<double, 3>> alpha(static_cast<std::size_t>(cfg.J));
  for (auto& a : alpha) {
    for (double& v : a) v = nd(rng);
  }
  return alpha;
}

// Returns false if some area ended up empty.
bool fill_population(const DgpConfig& cfg, std::mt19937_64& rng, const std::vector<std::array<double, 3>>& alpha,
                     GeneratedPopulation& pop) {
  const std::size_t N = cfg.N;
  const auto J = static_cast<std::size_t>(cfg.J);
  if (alpha.size() != J) throw InputError("area coefficients must have one row per area");
  pop.J = cfg.J;
  pop.alpha = alpha;
  pop.x.resize(N);
  pop.z.resize(N);
  pop.area.resize(N);
  pop.y0.resize(N);
  pop.y1.resize(N);
  pop.p_sample.resize(N);
  pop.tau.assign(J, 0.0);
  pop.tau_conditional.assign(J, 0.0);
  pop.area_size.assign(J, 0.0);

  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, cfg.noise_sd);
  std::uniform_int_distribution<int> du(1, 50);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> cum(J);

  for (std::size_t i = 0; i < N; ++i) {
    const double x = std_normal(rng);
    const double mu = du(rng) / 10.0;
    const double z = mu + std_normal(rng);
    pop.x[i] = x;
    pop.z[i] = z;

    auto [a1, a2] = transform(cfg.flags.area, x, z);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < J; ++j) {
      cum[j] = alpha[j][0] + alpha[j][1] * a1 + alpha[j][2] * a2;
      mx = std::max(mx, cum[j]);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      acc += std::exp(cum[j] - mx);
      cum[j] = acc;
    }
    const double u = unif(rng) * acc;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto j = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), J - 1);
    pop.area[i] = static_cast<int>(j + 1);

    auto [y1d, y2d] = transform(cfg.flags.outcome, x, z);
    pop.y0[i] = f0(y1d, y2d) + noise(rng);
    pop.y1[i] = f1(y1d, y2d) + noise(rng);
    pop.p_sample[i] = p_sample(cfg, x);
    pop.tau[j] += pop.y1[i] - pop.y0[i];
    pop.tau_conditional[j] += f1(y1d, y2d) - f0(y1d, y2d);
    pop.area_size[j] += 1.0;
  }
  for (std::size_t j = 0; j < J; ++j) {
    if (pop.area_size[j] == 0.0) return false;
    pop.tau[j] /= pop.area_size[j];
    pop.tau_conditional[j] /= pop.area_size[j];
  }
  return true;
}

}  // namespace

GeneratedPopulation generate_population(const DgpConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  GeneratedPopulation pop;
  auto alpha = draw_alpha(cfg, rng);
  if (fill_population(cfg, rng, alpha, pop)) return pop;
  alpha = draw_alpha(cfg, rng);
  pop.alpha_redrawn = true;
  if (fill_population(cfg, rng, alpha, pop)) return pop;
  throw InfeasibleError("generate_population: an area is empty after redrawing the area coefficients");
}

GeneratedPopulation generate_population(const DgpConfig& cfg, std::uint64_t seed,
                                        const std::vector<std::array<double, 3>>& alpha) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  GeneratedPopulation pop;
  if (!fill_population(cfg, rng, alpha, pop)) {
    throw InfeasibleError("generate_population: an area is empty under the given area coefficients");
  }
  return pop;
}

SurveyDataset draw_sample(const DgpConfig& cfg, const GeneratedPopulation& pop, std::uint64_t seed, int* redraws) {
  if (redraws) *redraws = 0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 rng(splitmix64(seed + static_cast<std::uint64_t>(attempt)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<SurveyRecord> records;
    for (std::size_t i = 0; i < pop.x.size(); ++i) {
      if (!(unif(rng) < pop.p_sample[i])) continue;
      auto [t1, t2] = transform(cfg.flags.propensity, pop.x[i], pop.z[i]);
      const int t = unif(rng) < f_treat(t1, t2) ? 1 : 0;
      SurveyRecord r;
      r.t = t;
      r.y = t ? pop.y1[i] : pop.y0[i];
      r.x = {pop.x[i]};
      r.z = {pop.z[i]};
      r.area = pop.area[i];
      r.weight = 1.0 / pop.p_sample[i];
      records.push_back(std::move(r));
    }
    if (!records.empty()) return SurveyDataset(std::move(records), pop.J);
    if (redraws) ++*redraws;
  }
  throw InfeasibleError("draw_sample: every attempt produced an empty sample");
}

AuxiliaryProbabilities known_auxiliary(const DgpConfig& cfg, const GeneratedPopulation& pop,
                                       const SurveyDataset& data) {
  AuxiliaryProbabilities aux;
  aux.clip = cfg.clip;
  aux.frame_size = static_cast<double>(pop.x.size());
  aux.p_area.resize(pop.area_size.size());
  for (std::size_t j = 0; j < pop.area_size.size(); ++j) aux.p_area[j] = pop.area_size[j] / aux.frame_size;
  aux.p_sample.resize(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) aux.p_sample[i] = p_sample(cfg, data[i].x[0]);
  aux.area_informative = false;
  aux.p_area_source = ProbSource::PopulationTable;
  aux.p_sample_source = ProbSource::KnownFunction;
  return aux;
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r) {
  return splitmix64(splitmix64(master) + splitmix64(r + 0x5851f42d4c957f2dULL));
}

ReplicationResult run_replication(const DgpConfig& cfg, std::uint64_t rep_seed, const GeneratedPopulation* fixed_pop) {
  GeneratedPopulation own;
  if (!fixed_pop) own = generate_population(cfg, stream_seed(rep_seed, kPopulation));
  const GeneratedPopulation& pop = fixed_pop ? *fixed_pop : own;

  auto data = draw_sample(cfg, pop, stream_seed(rep_seed, kSample));
  auto aux = known_auxiliary(cfg, pop, data);
  auto folds = make_folds(data.n(), cfg.folds, stream_seed(rep_seed, kFolds));
  auto nuis = cross_fit(data, folds, cfg.clip);

  EstimateOptions opts;
  opts.clip = cfg.clip;
  auto est = estimate_areas(data, nuis, aux, opts);

  ReplicationResult res;
  res.tau = pop.tau;
  res.tau_conditional = pop.tau_conditional;
  res.n_sample = data.n();
  for (auto& e : res.estimates) e.resize(static_cast<std::size_t>(cfg.J));
  for (auto& e : est) res.estimates[static_cast<std::size_t>(e.method)][static_cast<std::size_t>(e.area - 1)] = e;
  return res;
}

// ---------------------------------------------------------------------------

const MetricRow& MetricsTable::at(int area, Method m) const {
  for (const auto& r : rows) {
    if (r.area == area && r.method == m) return r;
  }
  throw InputError("metrics: no row for area " + std::to_string(area));
}

const SummaryRow& MetricsTable::mean_of(Method m) const {
  for (const auto& s : summary) {
    if (s.method == m && s.stat == "mean") return s;
  }
  throw InputError("metrics: no summary row");
}

namespace {

constexpr std::array<Method, 3> kMethods = {Method::HT, Method::Hajek, Method::Direct};

double rms(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s / static_cast<double>(v.size()));
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  std::vector<double> f;
  for (double x : v) {
    if (std::isfinite(x)) f.push_back(x);
  }
  if (f.empty()) {
    mean = sd = kNaN;
    return;
  }
  double s = 0.0;
  for (double x : f) s += x;
  mean = s / static_cast<double>(f.size());
  double ss = 0.0;
  for (double x : f) ss += (x - mean) * (x - mean);
  sd = f.size() > 1 ? std::sqrt(ss / static_cast<double>(f.size() - 1)) : 0.0;
}

}  // namespace

MetricsTable compute_metrics(int dgp_id, const std::vector<ReplicationResult>& reps) {
  MetricsTable table;
  table.dgp_id = dgp_id;
  table.reps = reps.size();
  if (reps.empty()) return table;
  const std::size_t J = reps.front().tau.size();
  double nsum = 0.0;
  for (const auto& r : reps) nsum += static_cast<double>(r.n_sample);
  table.mean_sample_size = nsum / static_cast<double>(reps.size());

  for (std::size_t j = 0; j < J; ++j) {
    for (Method m : kMethods) {
      const auto mi = static_cast<std::size_t>(m);
      MetricRow row;
      row.area = static_cast<int>(j + 1);
      row.method = m;
      std::vector<double> err, paired_err, paired_direct;
      double var_sum = 0.0;
      for (const auto& rep : reps) {
        const auto& e = rep.estimates[mi][j];
        const auto& d = rep.estimates[static_cast<std::size_t>(Method::Direct)][j];
        if (!e.feasible || !std::isfinite(e.tau_hat)) {
          ++row.infeasible;
          continue;
        }
        const double error = e.tau_hat - rep.tau[j];
        err.push_back(error);
        var_sum += e.var_hat;
        if (d.feasible && std::isfinite(d.tau_hat)) {
          paired_err.push_back(error);
          paired_direct.push_back(d.tau_hat - rep.tau[j]);
        }
      }
      row.reps_used = err.size();
      row.reps_paired = paired_err.size();
      if (err.empty()) {
        row.bias = row.rmse = row.var_mc = row.mse = row.prial = row.var_ratio = kNaN;
      } else {
        const double R = static_cast<double>(err.size());
        double s = 0.0;
        for (double e : err) s += e;
        row.bias = s / R;
        double sq = 0.0, cen = 0.0;
        for (double e : err) {
          sq += e * e;
          cen += (e - row.bias) * (e - row.bias);
        }
        row.mse = sq / R;
        row.var_mc = cen / R;
        row.rmse = std::sqrt(row.mse);
        row.var_ratio = (var_sum / R) / row.mse;
        row.prial = m == Method::Direct ? kNaN : 100.0 * (1.0 - rms(paired_err) / rms(paired_direct));
      }
      table.rows.push_back(row);
    }
  }

  for (Method m : kMethods) {
    std::vector<double> bias, abs_bias, rmse, prial, ratio;
    for (const auto& r : table.rows) {
      if (r.method != m) continue;
      bias.push_back(r.bias);
      abs_bias.push_back(std::fabs(r.bias));
      rmse.push_back(r.rmse);
      prial.push_back(r.prial);
      ratio.push_back(r.var_ratio);
    }
    SummaryRow mean{m, "mean"}, sd{m, "sd"};
    mean_sd(bias, mean.bias, sd.bias);
    mean_sd(abs_bias, mean.abs_bias, sd.abs_bias);
    mean_sd(rmse, mean.rmse, sd.rmse);
    mean_sd(prial, mean.prial, sd.prial);
    mean_sd(ratio, mean.var_ratio, sd.var_ratio);
    table.summary.push_back(mean);
    table.summary.push_back(sd);
  }
  return table;
}

namespace {

GeneratedPopulation shared_population(const DgpConfig& cfg) {
  return generate_population(cfg, splitmix64(cfg.seed ^ 0xa0761d6478bd642fULL));
}

}  // namespace

std::vector<ReplicationResult> run_replications(const DgpConfig& cfg) {
  cfg.validate();
  GeneratedPopulation fixed;
  if (!cfg.redraw_population) fixed = shared_population(cfg);
  const GeneratedPopulation* shared = cfg.redraw_population ? nullptr : &fixed;
  std::vector<ReplicationResult> out(cfg.R);
  std::vector<std::exception_ptr> errors(cfg.R);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t r = 0; r < cfg.R; ++r) {
    try {
      out[r] = run_replication(cfg, replication_seed(cfg.seed, r), shared);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<ReplicationResult> run_replications_serial(const DgpConfig& cfg) {
  cfg.validate();
  GeneratedPopulation fixed;
  if (!cfg.redraw_population) fixed = shared_population(cfg);
  const GeneratedPopulation* shared = cfg.redraw_population ? nullptr : &fixed;
  std::vector<ReplicationResult> out(cfg.R);
  for (std::size_t r = 0; r < cfg.R; ++r) out[r] = run_replication(cfg, replication_seed(cfg.seed, r), shared);
  return out;
}

MetricsTable monte_carlo(const DgpConfig& cfg) { return compute_metrics(cfg.dgp_id, run_replications(cfg)); }
MetricsTable monte_carlo_serial(const DgpConfig& cfg) {
  return compute_metrics(cfg.dgp_id, run_replications_serial(cfg));
}

void write_metrics_csv(const std::vector<MetricsTable>& tables, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  csv::write_row(out, {"dgp", "area", "method", "bias", "rmse", "prial", "var_ratio"});
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      csv::write_row(out, {std::to_string(t.dgp_id), std::to_string(r.area), to_string(r.method), fmt(r.bias),
                           fmt(r.rmse), fmt(r.prial), fmt(r.var_ratio)});
    }
  }
}

void write_summary_csv(const std::vector<MetricsTable>& tables, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  csv::write_row(out, {"dgp", "method", "stat", "bias", "abs_bias", "rmse", "prial", "var_ratio"});
  for (const auto& t : tables) {
    for (const auto& s : t.summary) {
      csv::write_row(out, {std::to_string(t.dgp_id), to_string(s.method), s.stat, fmt(s.bias), fmt(s.abs_bias),
                           fmt(s.rmse), fmt(s.prial), fmt(s.var_ratio)});
    }
  }
}

}  // namespace drsae::sim
