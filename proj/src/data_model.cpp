#include "drsae/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "drsae/csv.hpp"
#include "drsae/error.hpp"

namespace drsae {

namespace {

std::string record_context(std::size_t i) { return "record " + std::to_string(i + 1); }

}  // namespace

SurveyDataset::SurveyDataset(std::vector<SurveyRecord> records, int j_count)
    : records_(std::move(records)), j_count_(j_count) {
  if (records_.empty()) throw InputError("survey dataset is empty");
  if (j_count_ < 0) throw InputError("area count must be positive");
  dim_x_ = records_.front().x.size();
  dim_z_ = records_.front().z.size();
  int max_area = 0;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.t != 0 && r.t != 1) {
      throw InputError(record_context(i) + ": treatment must be 0 or 1, got " + std::to_string(r.t));
    }
    if (r.area < 1) throw InputError(record_context(i) + ": area label must be >= 1");
    if (j_count_ > 0 && r.area > j_count_) {
      throw InputError(record_context(i) + ": area label " + std::to_string(r.area) +
                       " exceeds declared area count " + std::to_string(j_count_));
    }
    if (!std::isfinite(r.y)) throw InputError(record_context(i) + ": non-finite outcome");
    if (r.x.size() != dim_x_ || r.z.size() != dim_z_) {
      throw InputError(record_context(i) + ": covariate dimension differs from first record");
    }
    for (double v : r.x) {
      if (!std::isfinite(v)) throw InputError(record_context(i) + ": non-finite x covariate");
    }
    for (double v : r.z) {
      if (!std::isfinite(v)) throw InputError(record_context(i) + ": non-finite z covariate");
    }
    if (r.weight && !(std::isfinite(*r.weight) && *r.weight > 0.0)) {
      throw InputError(record_context(i) + ": weight must be positive and finite");
    }
    max_area = std::max(max_area, r.area);
  }
  if (j_count_ == 0) j_count_ = max_area;
}

bool SurveyDataset::has_weights() const {
  return std::all_of(records_.begin(), records_.end(), [](const SurveyRecord& r) { return r.weight.has_value(); });
}

std::vector<std::size_t> SurveyDataset::area_indices(int j) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].area == j) out.push_back(i);
  }
  return out;
}

SurveySchema SurveySchema::infer(const std::vector<std::string>& header) {
  SurveySchema s;
  for (const auto& h : header) {
    if (h.rfind("x_", 0) == 0) s.x.push_back(h);
    if (h.rfind("z_", 0) == 0) s.z.push_back(h);
    if (h == "weight") s.weight = h;
  }
  return s;
}

namespace {

SurveyDataset survey_from_table(const csv::Table& table, const SurveySchema& schema, const std::string& path) {
  if (table.rows.empty()) throw InputError(path + ": no data rows");
  auto col_y = table.require_column(schema.y, path);
  auto col_t = table.require_column(schema.t, path);
  auto col_a = table.require_column(schema.area, path);
  std::vector<std::size_t> col_x, col_z;
  for (const auto& c : schema.x) col_x.push_back(table.require_column(c, path));
  for (const auto& c : schema.z) col_z.push_back(table.require_column(c, path));
  std::optional<std::size_t> col_w;
  if (schema.weight) col_w = table.require_column(*schema.weight, path);

  std::vector<SurveyRecord> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto where = [&](const std::string& what) {
      return path + ":" + std::to_string(row.line) + ": " + what;
    };
    auto real = [&](std::size_t col, const std::string& name) {
      auto v = csv::to_double(row.fields[col]);
      if (!v) throw InputError(where("invalid or missing value '" + row.fields[col] + "' in column " + name));
      return *v;
    };
    SurveyRecord r;
    r.y = real(col_y, schema.y);
    auto t = csv::to_integer(row.fields[col_t]);
    if (!t || (*t != 0 && *t != 1)) {
      throw InputError(where("treatment must be 0 or 1, got '" + row.fields[col_t] + "'"));
    }
    r.t = static_cast<int>(*t);
    const auto& label = row.fields[col_a];
    if (!schema.area_labels.empty()) {
      auto it = schema.area_labels.find(label);
      if (it == schema.area_labels.end()) throw InputError(where("unknown area label '" + label + "'"));
      r.area = it->second;
    } else {
      auto a = csv::to_integer(label);
      if (!a || *a < 1) throw InputError(where("area label must be a positive integer, got '" + label + "'"));
      if (schema.declared_j > 0 && *a > schema.declared_j) {
        throw InputError(where("area label " + label + " exceeds declared area count " +
                               std::to_string(schema.declared_j)));
      }
      r.area = static_cast<int>(*a);
    }
    for (std::size_t k = 0; k < col_x.size(); ++k) r.x.push_back(real(col_x[k], schema.x[k]));
    for (std::size_t k = 0; k < col_z.size(); ++k) r.z.push_back(real(col_z[k], schema.z[k]));
    if (col_w) {
      double w = real(*col_w, *schema.weight);
      if (w <= 0.0) throw InputError(where("weight must be positive"));
      r.weight = w;
    }
    records.push_back(std::move(r));
  }
  int j = schema.declared_j;
  if (j == 0 && !schema.area_labels.empty()) {
    for (const auto& [label, idx] : schema.area_labels) j = std::max(j, idx);
  }
  return SurveyDataset(std::move(records), j);
}

}  // namespace

SurveyDataset load_survey_csv(const std::string& path, const SurveySchema& schema) {
  return survey_from_table(csv::read(path), schema, path);
}

SurveyDataset load_survey_csv(const std::string& path, int declared_j) {
  auto table = csv::read(path);
  auto schema = SurveySchema::infer(table.header);
  schema.declared_j = declared_j;
  return survey_from_table(table, schema, path);
}

void write_survey_csv(const SurveyDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  std::vector<std::string> header{"y", "t", "area"};
  for (std::size_t k = 0; k < data.dim_x(); ++k) header.push_back("x_" + std::to_string(k + 1));
  for (std::size_t k = 0; k < data.dim_z(); ++k) header.push_back("z_" + std::to_string(k + 1));
  const bool weights = data.has_weights();
  if (weights) header.push_back("weight");
  csv::write_row(out, header);
  for (const auto& r : data.records()) {
    std::vector<std::string> f{csv::format(r.y), std::to_string(r.t), std::to_string(r.area)};
    for (double v : r.x) f.push_back(csv::format(v));
    for (double v : r.z) f.push_back(csv::format(v));
    if (weights) f.push_back(csv::format(*r.weight));
    csv::write_row(out, f);
  }
}

// ---------------------------------------------------------------------------

CovariateCellScheme::CovariateCellScheme(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  for (const auto& d : dims_) {
    if (d.passthrough) continue;
    for (std::size_t i = 0; i < d.cuts.size(); ++i) {
      if (!std::isfinite(d.cuts[i])) throw InputError("cell scheme: non-finite cut point");
      if (i > 0 && !(d.cuts[i] > d.cuts[i - 1])) {
        throw InputError("cell scheme: cut points must be strictly increasing");
      }
    }
  }
}

CovariateCellScheme CovariateCellScheme::passthrough(std::size_t dims) {
  return CovariateCellScheme(std::vector<Dimension>(dims, Dimension{{}, true}));
}

CovariateCellScheme CovariateCellScheme::from_cuts(std::vector<std::vector<double>> cuts) {
  std::vector<Dimension> dims;
  for (auto& c : cuts) dims.push_back(Dimension{std::move(c), false});
  return CovariateCellScheme(std::move(dims));
}

CovariateCellScheme CovariateCellScheme::deciles(const std::vector<std::vector<double>>& columns) {
  std::vector<std::vector<double>> cuts;
  for (auto col : columns) {
    if (col.empty()) throw InputError("cell scheme: cannot compute deciles of an empty column");
    std::sort(col.begin(), col.end());
    std::vector<double> c;
    for (int q = 1; q <= 9; ++q) {
      double h = (static_cast<double>(col.size()) - 1.0) * q / 10.0;
      auto lo = static_cast<std::size_t>(std::floor(h));
      std::size_t hi = std::min(lo + 1, col.size() - 1);
      double v = col[lo] + (h - static_cast<double>(lo)) * (col[hi] - col[lo]);
      if (c.empty() || v > c.back()) c.push_back(v);
    }
    cuts.push_back(std::move(c));
  }
  return from_cuts(std::move(cuts));
}

int CovariateCellScheme::bin(std::size_t dim, double value) const {
  if (!std::isfinite(value)) throw InputError("cell_of: non-finite covariate value");
  const auto& d = dims_.at(dim);
  if (d.passthrough) {
    if (std::floor(value) != value || std::fabs(value) > 1e9) {
      throw InputError("cell_of: pass-through dimension requires integer levels");
    }
    return static_cast<int>(value);
  }
  // Right-closed bins: count of cut points strictly below value.
  auto it = std::lower_bound(d.cuts.begin(), d.cuts.end(), value);
  return static_cast<int>(it - d.cuts.begin()) + 1;
}

CellKey cell_of(std::span<const double> x, const CovariateCellScheme& scheme) {
  if (x.size() != scheme.dims()) {
    throw InputError("cell_of: covariate dimension " + std::to_string(x.size()) +
                     " does not match scheme dimension " + std::to_string(scheme.dims()));
  }
  std::string key;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k) key.push_back(':');
    key += std::to_string(scheme.bin(k, x[k]));
  }
  return key;
}

// ---------------------------------------------------------------------------

PopulationTable::PopulationTable(std::vector<PopulationCell> cells, int j_count)
    : cells_(std::move(cells)), j_count_(j_count) {
  if (cells_.empty()) throw InputError("population table is empty");
  int max_area = 0;
  for (const auto& c : cells_) {
    if (c.area < 1) throw InputError("population table: area labels must be >= 1");
    if (!(std::isfinite(c.count) && c.count >= 0.0)) {
      throw InputError("population table: counts must be nonnegative");
    }
    if (c.p_sample && !(*c.p_sample > 0.0 && *c.p_sample <= 1.0)) {
      throw InputError("population table: p_sample must lie in (0, 1] for cell " + c.cell);
    }
    max_area = std::max(max_area, c.area);
  }
  if (j_count_ == 0) j_count_ = max_area;
  if (max_area > j_count_) throw InputError("population table: area label exceeds declared area count");

  const auto J = static_cast<std::size_t>(j_count_);
  std::vector<double> area_total(J, 0.0);
  for (const auto& c : cells_) {
    auto& info = by_cell_[c.cell];
    if (info.p_area_given_x.empty()) info.p_area_given_x.assign(J, 0.0);
    info.p_area_given_x[static_cast<std::size_t>(c.area - 1)] += c.count;
    info.total += c.count;
    if (c.p_sample) {
      if (info.p_sample && std::fabs(*info.p_sample - *c.p_sample) > 1e-12) {
        throw InputError("population table: inconsistent p_sample within cell " + c.cell);
      }
      info.p_sample = c.p_sample;
    }
    area_total[static_cast<std::size_t>(c.area - 1)] += c.count;
    total_ += c.count;
  }
  if (!(total_ > 0.0)) throw OverlapError("population table: total count is zero");
  for (std::size_t j = 0; j < J; ++j) {
    if (!(area_total[j] > 0.0)) {
      throw OverlapError("population table: area " + std::to_string(j + 1) +
                         " has zero population count (overlap violated)");
    }
  }
  p_area_.resize(J);
  for (std::size_t j = 0; j < J; ++j) p_area_[j] = area_total[j] / total_;
  for (auto& [key, info] : by_cell_) {
    if (info.total > 0.0) {
      for (auto& v : info.p_area_given_x) v /= info.total;
    }
  }
}

const std::vector<double>& PopulationTable::p_area_given_cell(const CellKey& cell) const {
  auto it = by_cell_.find(cell);
  if (it == by_cell_.end() || !(it->second.total > 0.0)) {
    throw OverlapError("covariate cell '" + cell + "' has no population mass");
  }
  return it->second.p_area_given_x;
}

std::optional<double> PopulationTable::p_sample(const CellKey& cell) const {
  auto it = by_cell_.find(cell);
  if (it == by_cell_.end()) return std::nullopt;
  return it->second.p_sample;
}

std::vector<CellKey> PopulationTable::cell_keys() const {
  std::vector<CellKey> keys;
  for (const auto& [k, v] : by_cell_) keys.push_back(k);
  return keys;
}

PopulationTable load_population_csv(const std::string& path, const CovariateCellScheme& scheme, int declared_j) {
  auto table = csv::read(path);
  if (table.rows.empty()) throw InputError(path + ": no data rows");
  auto col_cell = table.require_column("cell_id", path);
  auto col_area = table.require_column("area", path);
  auto col_count = table.require_column("count", path);
  auto col_p = table.column("p_sample");
  std::vector<PopulationCell> cells;
  for (const auto& row : table.rows) {
    auto where = [&](const std::string& what) {
      return path + ":" + std::to_string(row.line) + ": " + what;
    };
    PopulationCell c;
    c.cell = row.fields[col_cell];
    if (c.cell.empty()) throw InputError(where("empty cell_id"));
    auto parts = static_cast<std::size_t>(std::count(c.cell.begin(), c.cell.end(), ':')) + 1;
    if (scheme.dims() > 0 && parts != scheme.dims()) {
      throw InputError(where("cell_id '" + c.cell + "' has " + std::to_string(parts) +
                             " components, scheme has " + std::to_string(scheme.dims())));
    }
    auto a = csv::to_integer(row.fields[col_area]);
    if (!a || *a < 1) throw InputError(where("area must be a positive integer"));
    if (declared_j > 0 && *a > declared_j) throw InputError(where("area exceeds declared area count"));
    c.area = static_cast<int>(*a);
    auto n = csv::to_integer(row.fields[col_count]);
    if (!n || *n < 0) throw InputError(where("count must be a nonnegative integer"));
    c.count = static_cast<double>(*n);
    if (col_p && !row.fields[*col_p].empty()) {
      auto p = csv::to_double(row.fields[*col_p]);
      if (!p || !(*p > 0.0 && *p <= 1.0)) throw InputError(where("p_sample must lie in (0, 1]"));
      c.p_sample = *p;
    }
    cells.push_back(std::move(c));
  }
  return PopulationTable(std::move(cells), declared_j);
}

}  // namespace drsae
