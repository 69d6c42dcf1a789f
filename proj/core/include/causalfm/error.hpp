#pragma once

#include <stdexcept>
#include <cstdint>
#include <string>

namespace causalfm {

// Base class for every error raised by the library. Each subclass corresponds
// to one failure mode named in the module contracts so that callers (and the
// CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A structural function produced a non-finite value while sampling.
class GenerationError : public Error {
 public:
  GenerationError(std::string cluster, const std::string& what)
      : Error(what), cluster_(std::move(cluster)) {}
  const std::string& cluster() const { return cluster_; }

 private:
  std::string cluster_;
};

class InvalidInterventionError : public Error {
 public:
  using Error::Error;
};

class InvalidStructureError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// The equivalent construction has no real solution for the requested
// (zeta, kappa). `quantity` is the squared coefficient that went negative.
class InfeasibleConstructionError : public Error {
 public:
  InfeasibleConstructionError(std::string quantity, double value, const std::string& what)
      : Error(what), quantity_(std::move(quantity)), value_(value) {}
  const std::string& quantity() const { return quantity_; }
  double value() const { return value_; }

 private:
  std::string quantity_;
  double value_;
};

class WeakInstrumentError : public Error {
 public:
  using Error::Error;
};

class DegenerateScmError : public Error {
 public:
  using Error::Error;
};

class PriorRejectionError : public Error {
 public:
  using Error::Error;
};

class EmptyContextError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class SparseStratumError : public Error {
 public:
  SparseStratumError(std::string cell, const std::string& what)
      : Error(what), cell_(std::move(cell)) {}
  const std::string& cell() const { return cell_; }

 private:
  std::string cell_;
};

class UnsupportedFamilyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what) : Error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(std::uint64_t example_seed, const std::string& what)
      : Error(what), example_seed_(example_seed) {}
  std::uint64_t example_seed() const { return example_seed_; }

 private:
  std::uint64_t example_seed_;
};

}  // namespace causalfm
