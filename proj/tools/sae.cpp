// sae: area-level treatment effects from survey data.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drsae/auxiliary.hpp"
#include "drsae/data_model.hpp"
#include "drsae/diagnostics.hpp"
#include "drsae/error.hpp"
#include "drsae/estimator.hpp"
#include "drsae/nuisance.hpp"
#include "drsae/oracle.hpp"
#include "drsae/simulation.hpp"

#ifndef DRSAE_VERSION
#define DRSAE_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace drsae;

namespace {

constexpr const char* kOutEnv = "SAE_OUT_DIR";

struct Common {
  std::string out_dir;
  int threads = 0;
};

struct Manifest {
  ordered_json j;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;
};

std::string out_path(const Common& c, const std::string& name) { return (fs::path(c.out_dir) / name).string(); }

void prepare_out_dir(const Common& c) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec || !fs::is_directory(c.out_dir)) throw InputError("cannot create output directory '" + c.out_dir + "'");
}

void write_manifest(const Common& c, Manifest& m, const std::vector<std::string>& argv, int status) {
  m.j["version"] = DRSAE_VERSION;
  m.j["command"] = argv;
  m.j["threads"] = c.threads;
  m.j["outputs"] = m.outputs;
  m.j["exit_status"] = status;
  m.j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - m.start).count();
  std::ofstream out(out_path(c, "manifest.json"));
  if (!out) throw InputError("cannot write manifest in '" + c.out_dir + "'");
  out << m.j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::vector<int> dgps{1};
  std::size_t n_pop = 0;
  int areas = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  int folds = 0;
  double clip = 0.0;
  std::string config;
  bool fixed_population = false;
  CLI::Option* n_pop_opt = nullptr;
  CLI::Option* areas_opt = nullptr;
  CLI::Option* reps_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* folds_opt = nullptr;
  CLI::Option* clip_opt = nullptr;
};

int cmd_simulate(const Common& c, const SimulateArgs& a, Manifest& m) {
  sim::DgpConfig base;
  if (!a.config.empty()) base = sim::load_config(a.config);
  if (a.n_pop_opt->count()) base.N = a.n_pop;
  if (a.areas_opt->count()) base.J = a.areas;
  if (a.reps_opt->count()) base.R = a.reps;
  if (a.seed_opt->count()) base.seed = a.seed;
  if (a.folds_opt->count()) base.folds = a.folds;
  if (a.clip_opt->count()) base.clip = a.clip;
  if (a.fixed_population) base.redraw_population = false;

  std::vector<sim::MetricsTable> tables;
  ordered_json configs = ordered_json::array();
  for (int d : a.dgps) {
    auto cfg = base;
    cfg.dgp_id = d;
    cfg.flags = sim::flags_for_dgp(d);
    cfg.validate();
    configs.push_back(ordered_json::parse(sim::config_to_json(cfg)));
    auto t = sim::monte_carlo(cfg);
    std::printf("dgp %d: R=%zu, mean sample size %.1f\n", d, t.reps, t.mean_sample_size);
    std::printf("  %-7s %9s %9s %9s %9s\n", "method", "bias", "rmse", "prial", "var_ratio");
    for (Method meth : {Method::Direct, Method::HT, Method::Hajek}) {
      const auto& s = t.mean_of(meth);
      std::printf("  %-7s %9.3f %9.3f %9.1f %9.3f\n", to_string(meth), s.bias, s.rmse, s.prial, s.var_ratio);
    }
    std::size_t infeasible = 0;
    for (const auto& r : t.rows) infeasible += r.method == Method::Direct ? r.infeasible : 0;
    if (infeasible) std::printf("  direct infeasible in %zu area-replications\n", infeasible);
    tables.push_back(std::move(t));
  }
  sim::write_metrics_csv(tables, out_path(c, "metrics.csv"));
  sim::write_summary_csv(tables, out_path(c, "summary.csv"));
  m.outputs = {"metrics.csv", "summary.csv"};
  m.j["configs"] = configs;
  m.j["seed"] = base.seed;
  return 0;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  std::string survey;
  std::string population;
  bool known_sampling = false;
  std::string method = "all";
  double trim = std::numeric_limits<double>::infinity();
  double clip = 0.01;
  int folds = 5;
  std::uint64_t seed = 1;
  int areas = 0;
  std::string cells = "passthrough";
  std::string pa_sample = "cells";
};

// Sampling known from the weights alone: P(S=1|X) = 1/w, p(j) is the
// weighted area share and the frame size is the sum of weights.
AuxiliaryProbabilities weights_only_auxiliary(const SurveyDataset& data, double clip) {
  if (!data.has_weights()) throw InputError("--known-sampling requires a weight column in the survey");
  AuxiliaryProbabilities aux;
  aux.clip = clip;
  aux.area_informative = false;
  aux.p_sample_source = ProbSource::SurveyWeights;
  aux.p_area_source = ProbSource::SurveyWeights;
  aux.p_area.assign(static_cast<std::size_t>(data.j_count()), 0.0);
  double total = 0.0;
  aux.p_sample.resize(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    aux.p_sample[i] = sampling_prob_from_weights(data[i], clip);
    aux.p_area[static_cast<std::size_t>(data[i].area - 1)] += *data[i].weight;
    total += *data[i].weight;
  }
  for (int j = 1; j <= data.j_count(); ++j) {
    auto& p = aux.p_area[static_cast<std::size_t>(j - 1)];
    if (p == 0.0) throw OverlapError("area " + std::to_string(j) + " has no sampled units to estimate p(j)");
    p /= total;
  }
  aux.frame_size = total;
  return aux;
}

int cmd_estimate(const Common& c, const EstimateArgs& a, Manifest& m) {
  if (a.population.empty() == !a.known_sampling) {
    throw InputError("estimate needs exactly one of --population or --known-sampling");
  }
  auto data = load_survey_csv(a.survey, a.areas);
  CovariateCellScheme scheme;
  if (a.cells == "deciles") {
    std::vector<std::vector<double>> cols(data.dim_x());
    for (const auto& r : data.records()) {
      for (std::size_t k = 0; k < r.x.size(); ++k) cols[k].push_back(r.x[k]);
    }
    scheme = CovariateCellScheme::deciles(cols);
  } else {
    scheme = CovariateCellScheme::passthrough(data.dim_x());
  }

  AuxiliaryProbabilities aux;
  if (a.known_sampling) {
    aux = weights_only_auxiliary(data, a.clip);
  } else {
    auto pop = load_population_csv(a.population, scheme, std::max(a.areas, data.j_count()));
    if (pop.j_count() > data.j_count()) {
      // Rebuild with the population's area count so every area gets a row.
      std::vector<SurveyRecord> recs = data.records();
      data = SurveyDataset(std::move(recs), pop.j_count());
    }
    aux = assemble_auxiliary(data, pop, scheme, a.clip,
                             a.pa_sample == "multinomial" ? AreaSampleModel::Multinomial : AreaSampleModel::Cells);
    write_auxiliary_csv(data, aux, scheme, out_path(c, "auxiliary.csv"));
    m.outputs.push_back("auxiliary.csv");
  }

  auto folds = make_folds(data.n(), a.folds, a.seed);
  auto nuis = cross_fit(data, folds, a.clip);
  if (nuis.any_ridge) std::fprintf(stderr, "warning: a ridge penalty was needed in at least one nuisance fit\n");

  EstimateOptions opts;
  opts.ht = a.method == "ht" || a.method == "all";
  opts.hajek = a.method == "hajek" || a.method == "all";
  opts.direct = a.method == "direct" || a.method == "all";
  opts.trim = a.trim;
  opts.clip = a.clip;
  auto est = estimate_areas(data, nuis, aux, opts);
  for (const auto& e : est) {
    if (!e.feasible) std::fprintf(stderr, "warning: %s\n", e.note.c_str());
  }
  write_estimates_csv(est, out_path(c, "estimates.csv"));
  write_models_csv(nuis, data.dim_x(), data.dim_z(), out_path(c, "models.csv"));
  m.outputs.push_back("estimates.csv");
  m.outputs.push_back("models.csv");
  m.j["seed"] = a.seed;
  m.j["survey"] = a.survey;
  m.j["population"] = a.population;
  m.j["n"] = data.n();
  m.j["areas"] = data.j_count();
  m.j["method"] = a.method;
  m.j["trim"] = std::isfinite(a.trim) ? ordered_json(a.trim) : ordered_json(nullptr);
  m.j["clip"] = a.clip;
  m.j["folds"] = a.folds;
  m.j["cells"] = a.cells;
  m.j["pa_sample"] = a.pa_sample;
  m.j["p_sample_source"] = to_string(aux.p_sample_source);
  std::printf("estimated %zu area-method cells for %d areas from %zu records\n", est.size(), data.j_count(),
              data.n());
  return 0;
}

// ---------------------------------------------------------------------------
// oracle-check

struct OracleArgs {
  std::string world;
  bool break_ignorability = false;
};

int cmd_oracle_check(const Common& c, const OracleArgs& a, Manifest& m) {
  auto w = a.world.empty() ? oracle::reference_world() : oracle::load_world(a.world);
  if (a.break_ignorability) w = oracle::break_area_ignorability(std::move(w));
  w.validate();
  auto lines = oracle::run_checks(w, a.break_ignorability);

  std::ofstream out(out_path(c, "oracle.csv"));
  if (!out) throw InputError("cannot write oracle.csv");
  out << "check,area,discrepancy,tolerance,expect_failure,passed\n";
  for (const auto& l : lines) {
    out << l.name << ',' << l.area << ',' << l.discrepancy << ',' << l.tolerance << ','
        << (l.expect_failure ? 1 : 0) << ',' << (l.passed ? 1 : 0) << '\n';
  }
  m.outputs.push_back("oracle.csv");

  // One line per check, worst area shown.
  std::vector<std::string> names;
  for (const auto& l : lines) {
    if (std::find(names.begin(), names.end(), l.name) == names.end()) names.push_back(l.name);
  }
  bool all = true;
  std::printf("%-34s %14s %10s  %s\n", "check", "discrepancy", "tolerance", "status");
  for (const auto& name : names) {
    bool ok = true, expect_fail = false;
    double worst = 0.0, tol = 0.0;
    for (const auto& l : lines) {
      if (l.name != name) continue;
      ok = ok && l.passed;
      expect_fail = l.expect_failure;
      tol = l.tolerance;
      worst = expect_fail && worst > 0.0 ? std::min(worst, l.discrepancy) : std::max(worst, l.discrepancy);
    }
    const char* status = ok ? (expect_fail ? "EXPECTED-FAIL" : "PASS") : "FAIL";
    std::printf("%-34s %14.3e %10.1e  %s\n", name.c_str(), worst, tol, status);
    all = all && ok;
  }
  m.j["world"] = a.world.empty() ? "reference" : a.world;
  m.j["break_ignorability"] = a.break_ignorability;
  m.j["all_passed"] = all;
  return all ? 0 : 1;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseArgs {
  std::string survey;
  int areas = 0;
};

int cmd_diagnose(const Common& c, const DiagnoseArgs& a, Manifest& m) {
  auto data = load_survey_csv(a.survey, a.areas);
  std::vector<DiagnosticReport> reports{area_ignorability_check(data, false), area_ignorability_check(data, true)};
  write_diagnostics_csv(reports, out_path(c, "diagnostics.csv"));
  m.outputs.push_back("diagnostics.csv");
  for (const auto& r : reports) {
    std::printf("%-10s significant area coefficients: %zu of %zu (%.1f%%)\n", r.variant().c_str(),
                static_cast<std::size_t>(std::lround(r.share_significant * static_cast<double>(r.areas.size()))),
                r.areas.size(), 100.0 * r.share_significant);
    m.j["share_significant_" + r.variant()] = r.share_significant;
  }
  m.j["survey"] = a.survey;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly robust area-level treatment effects from survey data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DRSAE_VERSION);

  Common common;
  const char* env_out = std::getenv(kOutEnv);
  common.out_dir = env_out && *env_out ? env_out : ".";
  common.threads = omp_get_num_procs();
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out_dir, std::string("output directory (default: $") + kOutEnv + " or .)");
    sub->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study over the eight designs");
  add_common(simulate);
  simulate->add_option("--dgp", sa.dgps, "design id(s) in 1..8")->check(CLI::Range(1, 8))->expected(1, 8);
  sa.n_pop_opt = simulate->add_option("--n-pop", sa.n_pop, "population size")->check(CLI::PositiveNumber);
  sa.areas_opt = simulate->add_option("--areas", sa.areas, "number of areas")->check(CLI::Range(2, 100000));
  sa.reps_opt = simulate->add_option("--reps", sa.reps, "replications")->check(CLI::PositiveNumber);
  sa.seed_opt = simulate->add_option("--seed", sa.seed, "master seed");
  sa.folds_opt = simulate->add_option("--folds", sa.folds, "cross-fitting folds")->check(CLI::Range(2, 1000));
  sa.clip_opt = simulate->add_option("--clip", sa.clip, "probability clip")->check(CLI::Range(1e-12, 0.4999));
  simulate->add_option("--config", sa.config, "JSON config; flags override its fields")->check(CLI::ExistingFile);
  simulate->add_flag("--fixed-population", sa.fixed_population, "draw one population and reuse it in every replication");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Area estimates from a survey file");
  add_common(estimate);
  estimate->add_option("--survey", ea.survey, "survey CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--population", ea.population, "population cell counts CSV")->check(CLI::ExistingFile);
  estimate->add_flag("--known-sampling", ea.known_sampling, "take P(S=1|X) and p(j) from survey weights");
  estimate->add_option("--method", ea.method, "ht|hajek|direct|all")
      ->check(CLI::IsMember({"ht", "hajek", "direct", "all"}));
  estimate->add_option("--trim", ea.trim, "drop scores with |phi| above this")->check(CLI::PositiveNumber);
  estimate->add_option("--clip", ea.clip, "probability clip")->check(CLI::Range(1e-12, 0.4999));
  estimate->add_option("--folds", ea.folds, "cross-fitting folds")->check(CLI::Range(2, 1000));
  estimate->add_option("--seed", ea.seed, "fold seed");
  estimate->add_option("--areas", ea.areas, "declared number of areas (default: largest label)");
  estimate->add_option("--cells", ea.cells, "covariate cells: passthrough|deciles")
      ->check(CLI::IsMember({"passthrough", "deciles"}));
  estimate->add_option("--pa-sample", ea.pa_sample, "P(A=j|X,S=1) model: cells|multinomial")
      ->check(CLI::IsMember({"cells", "multinomial"}));

  OracleArgs oa;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Exact checks on a finite world");
  add_common(oracle_cmd);
  oracle_cmd->add_option("--world", oa.world, "world JSON (default: built-in reference world)");
  oracle_cmd->add_flag("--break-a4", oa.break_ignorability, "make outcomes depend on the area given covariates");

  DiagnoseArgs da;
  auto* diagnose = app.add_subcommand("diagnose", "Area-indicator regression with and without Z");
  add_common(diagnose);
  diagnose->add_option("--survey", da.survey, "survey CSV")->required()->check(CLI::ExistingFile);
  diagnose->add_option("--areas", da.areas, "declared number of areas");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::vector<std::string> args(argv, argv + argc);
  omp_set_num_threads(common.threads);
  Manifest manifest;
  int status = 0;
  try {
    prepare_out_dir(common);
    if (simulate->parsed()) {
      manifest.j["subcommand"] = "simulate";
      status = cmd_simulate(common, sa, manifest);
    } else if (estimate->parsed()) {
      manifest.j["subcommand"] = "estimate";
      status = cmd_estimate(common, ea, manifest);
    } else if (oracle_cmd->parsed()) {
      manifest.j["subcommand"] = "oracle-check";
      status = cmd_oracle_check(common, oa, manifest);
    } else if (diagnose->parsed()) {
      manifest.j["subcommand"] = "diagnose";
      status = cmd_diagnose(common, da, manifest);
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    status = 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    status = 1;
  }
  try {
    if (fs::is_directory(common.out_dir)) write_manifest(common, manifest, args, status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (status == 0) status = 1;
  }
  return status;
}
