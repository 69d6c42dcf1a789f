#include "causalfm/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "causalfm/error.hpp"
#include "causalfm/manifest.hpp"

namespace causalfm {

DatasetSchema DatasetSchema::make(Setting setting, std::size_t d_x, std::size_t d_aux,
                                  TreatmentType treatment_type) {
  DatasetSchema schema;
  schema.setting = setting;
  schema.d_x = d_x;
  schema.d_aux = d_aux;
  schema.treatment_type = treatment_type;
  for (std::size_t j = 0; j < d_x; ++j) schema.columns.push_back("x" + std::to_string(j + 1));
  for (std::size_t j = 0; j < d_aux; ++j) {
    if (setting == Setting::front_door) {
      schema.columns.push_back(d_aux == 1 ? "M" : "M" + std::to_string(j + 1));
    } else if (setting == Setting::iv) {
      schema.columns.push_back(d_aux == 1 ? "Z" : "Z" + std::to_string(j + 1));
    } else {
      schema.columns.push_back("aux" + std::to_string(j + 1));
    }
  }
  schema.columns.push_back("A");
  schema.columns.push_back("Y");
  return schema;
}

void Dataset::reserve(std::size_t rows) {
  x_.reserve(rows * d_x());
  aux_.reserve(rows * d_aux());
  a_.reserve(rows);
  y_.reserve(rows);
}

void Dataset::push_row(std::span<const double> x, std::span<const double> aux, double a, double y) {
  if (x.size() != d_x() || aux.size() != d_aux()) {
    throw SchemaError("row dimension does not match dataset schema");
  }
  x_.insert(x_.end(), x.begin(), x.end());
  aux_.insert(aux_.end(), aux.begin(), aux.end());
  a_.push_back(a);
  y_.push_back(y);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out(schema_);
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_row(x(i), aux(i), a(i), y(i));
  return out;
}

void Dataset::validate() const {
  if (schema_.columns.size() != d_x() + d_aux() + 2) {
    throw SchemaError("column names do not match d_x + d_aux + 2");
  }
  if (x_.size() != n() * d_x() || aux_.size() != n() * d_aux() || y_.size() != n()) {
    throw SchemaError("row storage does not match n");
  }
  if (schema_.treatment_type == TreatmentType::binary) {
    for (double a : a_) {
      if (a != 0.0 && a != 1.0) throw SchemaError("binary treatment outside {0,1}");
    }
  }
}

void write_jsonl(const Dataset& data, std::ostream& out) {
  const auto& schema = data.schema();
  nlohmann::json meta = schema.provenance.is_object() ? schema.provenance : nlohmann::json::object();
  meta["schema_version"] = kDatasetSchemaVersion;
  meta["setting"] = std::string(to_string(schema.setting));
  meta["d_x"] = schema.d_x;
  meta["n"] = data.n();
  meta["columns"] = schema.columns;
  meta["treatment_type"] = std::string(to_string(schema.treatment_type));
  out << meta.dump() << '\n';
  std::vector<double> row;
  for (std::size_t i = 0; i < data.n(); ++i) {
    row.assign(data.x(i).begin(), data.x(i).end());
    row.insert(row.end(), data.aux(i).begin(), data.aux(i).end());
    row.push_back(data.a(i));
    row.push_back(data.y(i));
    out << nlohmann::json(row).dump() << '\n';
  }
}

Dataset read_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty dataset stream");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed metadata line: ") + e.what());
  }
  if (!meta.is_object() || !meta.contains("schema_version")) {
    throw SchemaError("metadata line lacks schema_version");
  }
  if (meta["schema_version"] != kDatasetSchemaVersion) {
    throw SchemaError("unsupported schema_version " + meta["schema_version"].dump());
  }
  for (const char* key : {"setting", "d_x", "n", "columns", "treatment_type"}) {
    if (!meta.contains(key)) throw SchemaError(std::string("metadata lacks '") + key + "'");
  }
  DatasetSchema schema;
  try {
    schema.setting = parse_setting(meta["setting"].get<std::string>());
    schema.d_x = meta["d_x"].get<std::size_t>();
    schema.columns = meta["columns"].get<std::vector<std::string>>();
    schema.treatment_type = parse_treatment_type(meta["treatment_type"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed metadata: ") + e.what());
  } catch (const InputError& e) {
    throw SchemaError(e.what());
  }
  if (schema.columns.size() < schema.d_x + 2) throw SchemaError("too few columns for d_x");
  schema.d_aux = schema.columns.size() - schema.d_x - 2;
  nlohmann::json provenance = meta;
  for (const char* key : {"schema_version", "setting", "d_x", "n", "columns", "treatment_type"}) {
    provenance.erase(key);
  }
  schema.provenance = std::move(provenance);

  const auto expected_rows = meta["n"].get<std::size_t>();
  Dataset data(std::move(schema));
  data.reserve(expected_rows);
  const std::size_t width = data.d_x() + data.d_aux() + 2;
  std::vector<double> row;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      row = nlohmann::json::parse(line).get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (row.size() != width) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " values, got " + std::to_string(row.size()));
    }
    std::span<const double> view(row);
    data.push_row(view.first(data.d_x()), view.subspan(data.d_x(), data.d_aux()),
                  row[width - 2], row[width - 1]);
  }
  if (data.n() != expected_rows) {
    throw SchemaError("metadata n=" + std::to_string(expected_rows) + " but found " +
                      std::to_string(data.n()) + " rows");
  }
  data.validate();
  return data;
}

void save_jsonl(const Dataset& data, const std::string& path) {
  std::ostringstream buffer;
  write_jsonl(data, buffer);
  write_file_atomic(path, buffer.str());
}

Dataset load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_jsonl(in);
}

}  // namespace causalfm
