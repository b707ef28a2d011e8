#include "drsae/auxiliary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "drsae/csv.hpp"
#include "drsae/error.hpp"
#include "drsae/nuisance.hpp"

namespace drsae {

const char* to_string(ProbSource s) {
  switch (s) {
    case ProbSource::KnownFunction: return "known-function";
    case ProbSource::SurveyWeights: return "survey-weights";
    case ProbSource::PopulationTable: return "population-table";
    case ProbSource::SurveyCells: return "survey-cells";
    case ProbSource::SurveyMultinomial: return "survey-multinomial";
  }
  return "unknown";
}

double sampling_prob(double p_s_given_x, double p_area_given_x_sample, double p_area_given_x, double clip) {
  if (!(p_area_given_x > 0.0)) {
    throw OverlapError("sampling_prob: P(A=j|X) is zero; overlap (every area has positive probability) is violated");
  }
  double v = p_s_given_x * p_area_given_x_sample / p_area_given_x;
  if (!std::isfinite(v)) throw NumericError("sampling_prob: non-finite result");
  return std::clamp(v, clip, 1.0);
}

double AuxiliaryProbabilities::pi_s(std::size_t record, int j) const {
  const double ps = p_sample[record];
  if (!area_informative) return std::clamp(ps, clip, 1.0);
  const auto jj = static_cast<std::size_t>(j - 1);
  return sampling_prob(ps, p_area_sample[record][jj], p_area_pop[record][jj], clip);
}

AreaTable estimate_pA_sample(const SurveyDataset& data, const CovariateCellScheme& scheme, double smoothing) {
  const auto J = static_cast<std::size_t>(data.j_count());
  AreaTable counts;
  for (const auto& r : data.records()) {
    auto key = cell_of(r.x, scheme);
    auto& row = counts[key];
    if (row.empty()) row.assign(J, smoothing);
    row[static_cast<std::size_t>(r.area - 1)] += 1.0;
  }
  for (auto& [key, row] : counts) {
    double total = 0.0;
    for (double v : row) total += v;
    for (double& v : row) v /= total;
  }
  return counts;
}

double sampling_prob_from_weights(const SurveyRecord& record, double clip) {
  if (!record.weight) throw InputError("sampling_prob_from_weights: record has no survey weight");
  if (!(*record.weight >= 1.0)) {
    throw InputError("sampling_prob_from_weights: weight " + csv::format(*record.weight) +
                     " is below 1 and cannot be an inverse inclusion probability");
  }
  return std::clamp(1.0 / *record.weight, clip, 1.0);
}

AuxiliaryProbabilities assemble_auxiliary(const SurveyDataset& data, const PopulationTable& pop,
                                          const CovariateCellScheme& scheme, double clip,
                                          AreaSampleModel pa_model) {
  if (pop.j_count() < data.j_count()) {
    throw OverlapError("population table covers " + std::to_string(pop.j_count()) + " areas but the survey has " +
                       std::to_string(data.j_count()));
  }
  const auto J = static_cast<std::size_t>(pop.j_count());
  AuxiliaryProbabilities aux;
  aux.clip = clip;
  aux.p_area = pop.p_area();
  aux.frame_size = pop.total();
  aux.area_informative = true;
  aux.p_area_source = ProbSource::PopulationTable;
  aux.p_area_sample_source = pa_model == AreaSampleModel::Cells ? ProbSource::SurveyCells : ProbSource::SurveyMultinomial;

  std::vector<CellKey> keys(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    keys[i] = cell_of(data[i].x, scheme);
    if (!pop.has_cell(keys[i])) {
      throw OverlapError("survey record " + std::to_string(i + 1) + ": covariate cell '" + keys[i] +
                         "' is absent from the population table");
    }
  }

  bool known = true;
  for (const auto& k : keys) known = known && pop.p_sample(k).has_value();
  aux.p_sample.resize(data.n());
  if (known) {
    aux.p_sample_source = ProbSource::PopulationTable;
    for (std::size_t i = 0; i < data.n(); ++i) aux.p_sample[i] = *pop.p_sample(keys[i]);
  } else {
    if (!data.has_weights()) {
      throw InputError("P(S=1|X) unavailable: population table lacks p_sample and survey lacks weights");
    }
    aux.p_sample_source = ProbSource::SurveyWeights;
    for (std::size_t i = 0; i < data.n(); ++i) aux.p_sample[i] = sampling_prob_from_weights(data[i], clip);
  }

  aux.p_area_sample.resize(data.n());
  aux.p_area_pop.resize(data.n());
  if (pa_model == AreaSampleModel::Cells) {
    auto table = estimate_pA_sample(data, scheme);
    for (std::size_t i = 0; i < data.n(); ++i) {
      auto row = table.at(keys[i]);
      row.resize(J, 0.0);
      aux.p_area_sample[i] = std::move(row);
    }
  } else {
    Matrix X(static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(1 + data.dim_x()));
    std::vector<int> labels(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
      X(static_cast<Eigen::Index>(i), 0) = 1.0;
      for (std::size_t k = 0; k < data.dim_x(); ++k) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + 1)) = data[i].x[k];
      labels[i] = data[i].area;
    }
    auto model = multinomial_fit(X, labels, static_cast<int>(J));
    Matrix probs = model.predict(X);
    for (std::size_t i = 0; i < data.n(); ++i) {
      auto row = probs.row(static_cast<Eigen::Index>(i));
      aux.p_area_sample[i].resize(J);
      for (std::size_t j = 0; j < J; ++j) aux.p_area_sample[i][j] = row(static_cast<Eigen::Index>(j));
    }
  }
  for (std::size_t i = 0; i < data.n(); ++i) aux.p_area_pop[i] = pop.p_area_given_cell(keys[i]);
  return aux;
}

void write_auxiliary_csv(const SurveyDataset& data, const AuxiliaryProbabilities& aux,
                         const CovariateCellScheme& scheme, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  csv::write_row(out, {"cell_id", "area", "p_area", "pA_given_x", "pS_given_x", "pi_S"});
  struct Acc {
    std::size_t first = 0;
    double ps_sum = 0.0;
    double count = 0.0;
    bool constant = true;
  };
  std::map<CellKey, Acc> cells;
  for (std::size_t i = 0; i < data.n(); ++i) {
    auto key = cell_of(data[i].x, scheme);
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) it->second.first = i;
    it->second.constant = it->second.constant && aux.p_sample[i] == aux.p_sample[it->second.first];
    it->second.ps_sum += aux.p_sample[i];
    it->second.count += 1.0;
  }
  for (const auto& [key, acc] : cells) {
    for (int j = 1; j <= aux.j_count(); ++j) {
      const auto jj = static_cast<std::size_t>(j - 1);
      std::string pa_pop = aux.area_informative ? csv::format(aux.p_area_pop[acc.first][jj]) : "";
      double ps = acc.constant ? aux.p_sample[acc.first] : acc.ps_sum / acc.count;
      double pis = aux.area_informative
                       ? sampling_prob(ps, aux.p_area_sample[acc.first][jj], aux.p_area_pop[acc.first][jj], aux.clip)
                       : std::clamp(ps, aux.clip, 1.0);
      csv::write_row(out, {key, std::to_string(j), csv::format(aux.p(j)), pa_pop, csv::format(ps), csv::format(pis)});
    }
  }
}

}  // namespace drsae
