#pragma once

#include <iosfwd>
#include <string>

#include "causalfm/dataset.hpp"

namespace causalfm {

inline constexpr std::size_t kJobsCovariates = 8;

// Jobs column layout: a header line, then rows of 8 numeric covariates, a
// binary treatment and a binary outcome. No data ships with the library.
// Throws SchemaError naming the line on malformed input.
Dataset read_jobs_csv(std::istream& in);
Dataset load_jobs_csv(const std::string& path);

}  // namespace causalfm
