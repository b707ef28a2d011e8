#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace drsae {

/// One sampled unit. Every stored record has S = 1.
struct SurveyRecord {
  double y = 0.0;
  int t = 0;
  std::vector<double> x;  // covariates shared with population sources
  std::vector<double> z;  // survey-only covariates
  int area = 1;           // 1-based
  std::optional<double> weight;
};

/// Immutable, validated collection of survey records.
class SurveyDataset {
 public:
  SurveyDataset() = default;
  /// `j_count` = 0 infers the area count from the largest label.
  /// Throws InputError naming the offending record on any invariant breach.
  SurveyDataset(std::vector<SurveyRecord> records, int j_count = 0);

  const std::vector<SurveyRecord>& records() const { return records_; }
  const SurveyRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t n() const { return records_.size(); }
  int j_count() const { return j_count_; }
  std::size_t dim_x() const { return dim_x_; }
  std::size_t dim_z() const { return dim_z_; }
  bool has_weights() const;

  /// Records of area `j` (indices into records()).
  std::vector<std::size_t> area_indices(int j) const;

 private:
  std::vector<SurveyRecord> records_;
  int j_count_ = 0;
  std::size_t dim_x_ = 0;
  std::size_t dim_z_ = 0;
};

/// Column mapping for survey CSV files.
struct SurveySchema {
  std::string y = "y";
  std::string t = "t";
  std::string area = "area";
  std::vector<std::string> x;
  std::vector<std::string> z;
  std::optional<std::string> weight;
  int declared_j = 0;  // 0: infer
  /// Maps external area labels (e.g. state names) to 1..J. When empty,
  /// labels must already be integers.
  std::map<std::string, int> area_labels;

  /// `x_*`, `z_*` columns in header order; `weight` if present.
  static SurveySchema infer(const std::vector<std::string>& header);
};

SurveyDataset load_survey_csv(const std::string& path, const SurveySchema& schema);
/// Reads the header first and infers the schema.
SurveyDataset load_survey_csv(const std::string& path, int declared_j = 0);
void write_survey_csv(const SurveyDataset& data, const std::string& path);

using CellKey = std::string;

/// Maps a covariate vector to a discrete cell. Each dimension is either
/// binned by strictly increasing cut points into right-closed intervals
/// (-inf,c1], (c1,c2], ..., (ck,inf) numbered 1..k+1, or passed through
/// as an integer level.
class CovariateCellScheme {
 public:
  struct Dimension {
    std::vector<double> cuts;
    bool passthrough = false;
  };

  CovariateCellScheme() = default;
  explicit CovariateCellScheme(std::vector<Dimension> dims);

  static CovariateCellScheme passthrough(std::size_t dims);
  static CovariateCellScheme from_cuts(std::vector<std::vector<double>> cuts);
  /// Decile cut points per column (type-7 quantiles, ties collapsed).
  static CovariateCellScheme deciles(const std::vector<std::vector<double>>& columns);

  std::size_t dims() const { return dims_.size(); }
  const std::vector<Dimension>& dimensions() const { return dims_; }

  /// 1-based bin index, or the integer level for pass-through dimensions.
  int bin(std::size_t dim, double value) const;

 private:
  std::vector<Dimension> dims_;
};

/// Cell key: per-dimension bins joined by ':' (e.g. "2" or "2:1").
CellKey cell_of(std::span<const double> x, const CovariateCellScheme& scheme);

struct PopulationCell {
  CellKey cell;
  int area = 1;
  double count = 0.0;
  std::optional<double> p_sample;  // P(S=1|X) for this cell, when known
};

/// Population counts by (covariate cell, area) with the derived
/// probabilities p(j) = P(A=j) and P(A=j | X = cell).
class PopulationTable {
 public:
  PopulationTable() = default;
  /// Throws OverlapError if any area 1..J has zero total count.
  PopulationTable(std::vector<PopulationCell> cells, int j_count = 0);

  int j_count() const { return j_count_; }
  double total() const { return total_; }
  const std::vector<double>& p_area() const { return p_area_; }
  double p_area(int j) const { return p_area_.at(static_cast<std::size_t>(j - 1)); }

  bool has_cell(const CellKey& cell) const { return by_cell_.count(cell) != 0; }
  /// P(A = . | X = cell), indexed by j-1. Throws OverlapError when absent.
  const std::vector<double>& p_area_given_cell(const CellKey& cell) const;
  std::optional<double> p_sample(const CellKey& cell) const;
  std::vector<CellKey> cell_keys() const;
  const std::vector<PopulationCell>& cells() const { return cells_; }

 private:
  struct CellInfo {
    std::vector<double> p_area_given_x;
    double total = 0.0;
    std::optional<double> p_sample;
  };
  std::vector<PopulationCell> cells_;
  std::map<CellKey, CellInfo> by_cell_;
  std::vector<double> p_area_;
  int j_count_ = 0;
  double total_ = 0.0;
};

PopulationTable load_population_csv(const std::string& path, const CovariateCellScheme& scheme,
                                    int declared_j = 0);

}  // namespace drsae
