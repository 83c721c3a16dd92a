#pragma once

#include <stdexcept>
#include <string>

namespace bsem {

// Bad input data: missing files, schema mismatches, membership errors,
// invariant violations that abort ingestion. Mapped to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf encountered during training or a corrupt checkpoint payload.
// Mapped to CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bsem
