#include "bcs/error.hpp"

namespace bcs {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSize: return "invalid-size";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::InvalidHyperparameter: return "invalid-hyperparameter";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::DegenerateFactor: return "degenerate-factor";
    case ErrorKind::InsufficientMeasurements: return "insufficient-measurements";
    case ErrorKind::DegenerateData: return "degenerate-data";
    case ErrorKind::EmptyMeasurement: return "empty-measurement";
    case ErrorKind::InvalidPattern: return "invalid-pattern";
    case ErrorKind::NumericalBreakdown: return "numerical-breakdown";
    case ErrorKind::UndefinedVariance: return "undefined-variance";
    case ErrorKind::UndefinedRatio: return "undefined-ratio";
    case ErrorKind::InvalidFraction: return "invalid-fraction";
    case ErrorKind::EmptySample: return "empty-sample";
    case ErrorKind::Io: return "io";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

}  // namespace bcs
