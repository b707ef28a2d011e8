#pragma once

#include <map>
#include <string>
#include <vector>

#include "drsae/data_model.hpp"

namespace drsae {

enum class ProbSource { KnownFunction, SurveyWeights, PopulationTable, SurveyCells, SurveyMultinomial };

const char* to_string(ProbSource s);

/// Cell-wise area distribution: cell -> probabilities indexed by j-1.
using AreaTable = std::map<CellKey, std::vector<double>>;

/// Design-dependent probabilities needed to build pi_S(X, A=j).
///
/// Two layouts are supported. With `area_informative` false, sampling
/// depends on X only and pi_S(X_i, A=j) = P(S=1|X_i) for every j. Otherwise
/// pi_S is assembled per record from P(S=1|X), P(A=j|X,S=1) and P(A=j|X).
struct AuxiliaryProbabilities {
  std::vector<double> p_area;    // p(j), index j-1
  std::vector<double> p_sample;  // P(S=1|X_i) per survey record
  bool area_informative = false;
  /// Per record, index j-1; empty unless area_informative.
  std::vector<std::vector<double>> p_area_sample;  // P(A=j|X_i,S=1)
  std::vector<std::vector<double>> p_area_pop;     // P(A=j|X_i)
  double clip = 0.01;
  /// Size of the population the sample was drawn from; the HT divisor.
  double frame_size = 0.0;

  ProbSource p_area_source = ProbSource::PopulationTable;
  ProbSource p_sample_source = ProbSource::KnownFunction;
  ProbSource p_area_sample_source = ProbSource::SurveyCells;

  int j_count() const { return static_cast<int>(p_area.size()); }
  double p(int j) const { return p_area.at(static_cast<std::size_t>(j - 1)); }
  /// pi_S(X_i, A=j), clipped to [clip, 1].
  double pi_s(std::size_t record, int j) const;
};

/// P(S=1|X) * P(A=j|X,S=1) / P(A=j|X), clipped to [clip, 1]. Throws
/// OverlapError when the population share P(A=j|X) is zero.
double sampling_prob(double p_s_given_x, double p_area_given_x_sample, double p_area_given_x, double clip = 0.01);

/// Empirical P(A=j | cell, S=1) with 0.5 added to every (cell, area) count.
AreaTable estimate_pA_sample(const SurveyDataset& data, const CovariateCellScheme& scheme, double smoothing = 0.5);

/// 1/weight clipped to [clip, 1]; throws InputError for absent or sub-unit weights.
double sampling_prob_from_weights(const SurveyRecord& record, double clip = 0.01);

enum class AreaSampleModel { Cells, Multinomial };

/// Builds the auxiliary probabilities for a survey from a population table.
/// P(S=1|X) comes from the table's p_sample column when present, otherwise
/// from the survey weights.
AuxiliaryProbabilities assemble_auxiliary(const SurveyDataset& data, const PopulationTable& pop,
                                          const CovariateCellScheme& scheme, double clip = 0.01,
                                          AreaSampleModel pa_model = AreaSampleModel::Cells);

/// Exports `cell_id,area,p_area,pA_given_x,pS_given_x,pi_S` rows, one per
/// (cell, area) present in the survey. pS_given_x is the cell mean of the
/// per-record P(S=1|X).
void write_auxiliary_csv(const SurveyDataset& data, const AuxiliaryProbabilities& aux,
                         const CovariateCellScheme& scheme, const std::string& path);

}  // namespace drsae
