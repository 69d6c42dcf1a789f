#include "causalfm/jobs.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <vector>

#include "causalfm/error.hpp"

namespace causalfm {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string f = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\r')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    fields.push_back(std::move(f));
    if (comma == std::string::npos) return fields;
    start = comma + 1;
  }
}

}  // namespace

Dataset read_jobs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("jobs csv: missing header line");
  const auto header = split_fields(line);
  if (header.size() != kJobsCovariates + 2) {
    throw SchemaError("jobs csv: expected " + std::to_string(kJobsCovariates + 2) + " columns, header has " +
                      std::to_string(header.size()));
  }
  DatasetSchema schema = DatasetSchema::make(Setting::back_door, kJobsCovariates, 0, TreatmentType::binary);
  schema.columns = header;
  schema.provenance = {{"source", "jobs_csv"}};
  Dataset data(schema);
  std::vector<double> row(kJobsCovariates + 2);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != row.size()) throw SchemaError("jobs csv line " + std::to_string(line_no) + ": wrong field count");
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto& f = fields[j];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[j]);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw SchemaError("jobs csv line " + std::to_string(line_no) + ": non-numeric field '" + f + "'");
      }
    }
    const double a = row[kJobsCovariates], y = row[kJobsCovariates + 1];
    if ((a != 0.0 && a != 1.0) || (y != 0.0 && y != 1.0)) {
      throw SchemaError("jobs csv line " + std::to_string(line_no) + ": treatment and outcome must be 0/1");
    }
    data.push_row(std::span<const double>(row.data(), kJobsCovariates), {}, a, y);
  }
  if (data.n() == 0) throw SchemaError("jobs csv: no data rows");
  return data;
}

Dataset load_jobs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_jobs_csv(in);
}

}  // namespace causalfm
