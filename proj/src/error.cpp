#include "radar/error.hpp"

namespace radar {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::InvalidRank: return "InvalidRank";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::SizeExceedsWidth: return "SizeExceedsWidth";
    case ErrorKind::WidthMismatch: return "WidthMismatch";
    case ErrorKind::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorKind::AllMasked: return "AllMasked";
    case ErrorKind::InvalidSolution: return "InvalidSolution";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::NumericalDivergence: return "NumericalDivergence";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Error";
}

}  // namespace radar
