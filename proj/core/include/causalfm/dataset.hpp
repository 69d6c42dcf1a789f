#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalfm/scm.hpp"

namespace causalfm {

inline constexpr int kDatasetSchemaVersion = 1;

struct DatasetSchema {
  Setting setting = Setting::custom;
  std::size_t d_x = 0;
  std::size_t d_aux = 0;
  // d_x covariate names, then d_aux auxiliary names, then treatment, outcome.
  std::vector<std::string> columns;
  TreatmentType treatment_type = TreatmentType::binary;
  // Free-form provenance written into the metadata line (resolved config,
  // seed, ...). Never interpreted by readers.
  nlohmann::json provenance = nlohmann::json::object();

  static DatasetSchema make(Setting setting, std::size_t d_x, std::size_t d_aux,
                            TreatmentType treatment_type);
};

// Observational sample: rows of (x, aux, a, y), stored column-blocked.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(DatasetSchema schema) : schema_(std::move(schema)) {}

  const DatasetSchema& schema() const { return schema_; }
  DatasetSchema& schema() { return schema_; }
  std::size_t n() const { return a_.size(); }
  std::size_t d_x() const { return schema_.d_x; }
  std::size_t d_aux() const { return schema_.d_aux; }

  std::span<const double> x(std::size_t i) const { return {x_.data() + i * d_x(), d_x()}; }
  std::span<const double> aux(std::size_t i) const { return {aux_.data() + i * d_aux(), d_aux()}; }
  double a(std::size_t i) const { return a_[i]; }
  double y(std::size_t i) const { return y_[i]; }

  const std::vector<double>& x_values() const { return x_; }
  const std::vector<double>& treatments() const { return a_; }
  const std::vector<double>& outcomes() const { return y_; }

  void reserve(std::size_t rows);
  void push_row(std::span<const double> x, std::span<const double> aux, double a, double y);

  // Rows selected by index, in the given order.
  Dataset subset(std::span<const std::size_t> rows) const;

  // Throws SchemaError when dimensions disagree or binary treatments leave {0,1}.
  void validate() const;

 private:
  DatasetSchema schema_;
  std::vector<double> x_;
  std::vector<double> aux_;
  std::vector<double> a_;
  std::vector<double> y_;
};

// JSON-lines serialization. Line 1: {schema_version, setting, d_x, n, columns,
// treatment_type, ...provenance}; then one array [x_1..x_dx, aux.., a, y] per row.
void write_jsonl(const Dataset& data, std::ostream& out);
Dataset read_jsonl(std::istream& in);
void save_jsonl(const Dataset& data, const std::string& path);
Dataset load_jsonl(const std::string& path);

}  // namespace causalfm
