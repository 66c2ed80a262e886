#pragma once

#include <stdexcept>
#include <string>

namespace bcs {

enum class ErrorKind {
  InvalidSize,
  Shape,
  InvalidHyperparameter,
  IllConditioned,
  DegenerateFactor,
  InsufficientMeasurements,
  DegenerateData,
  EmptyMeasurement,
  InvalidPattern,
  NumericalBreakdown,
  UndefinedVariance,
  UndefinedRatio,
  InvalidFraction,
  EmptySample,
  Io,
  Usage,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace bcs
