#ifndef SSNMF_ERRORS_HPP
#define SSNMF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ssnmf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument lies outside its admissible range (alpha, k, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// The sparsity measure is not defined for the given vector.
class UndefinedMeasureError : public Error {
 public:
  using Error::Error;
};

/// A column that must be rescaled has zero norm.
class DegenerateColumnError : public Error {
 public:
  using Error::Error;
};

/// A factor or data matrix contains negative entries.
class NegativityError : public Error {
 public:
  using Error::Error;
};

/// The iterative Hoyer projection failed to reach a feasible point.
class BaselineFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed input files. Subclasses name the offending cell.
class DataError : public Error {
 public:
  using Error::Error;
};

class RaggedRowError : public DataError {
 public:
  using DataError::DataError;
};

class NegativeEntryError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace ssnmf

#endif  // SSNMF_ERRORS_HPP
