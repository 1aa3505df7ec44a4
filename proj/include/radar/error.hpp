#pragma once

#include <stdexcept>
#include <string>

namespace radar {

enum class ErrorKind {
  DegenerateInput,
  InvalidRank,
  IoError,
  ParseError,
  InvariantViolation,
  SizeExceedsWidth,
  WidthMismatch,
  NumericalUnderflow,
  AllMasked,
  InvalidSolution,
  TooLarge,
  Infeasible,
  NumericalDivergence,
  ConfigError,
};

const char* to_string(ErrorKind kind);

// Base of every error raised by the library. The kind lets callers (the CLI in
// particular) map failures onto exit codes without a chain of catch blocks.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class ErrorOf : public Error {
 public:
  explicit ErrorOf(const std::string& what) : Error(K, what) {}
};

using DegenerateInput = ErrorOf<ErrorKind::DegenerateInput>;
using InvalidRank = ErrorOf<ErrorKind::InvalidRank>;
using IoError = ErrorOf<ErrorKind::IoError>;
using ParseError = ErrorOf<ErrorKind::ParseError>;
using InvariantViolation = ErrorOf<ErrorKind::InvariantViolation>;
using SizeExceedsWidth = ErrorOf<ErrorKind::SizeExceedsWidth>;
using WidthMismatch = ErrorOf<ErrorKind::WidthMismatch>;
using NumericalUnderflow = ErrorOf<ErrorKind::NumericalUnderflow>;
using AllMasked = ErrorOf<ErrorKind::AllMasked>;
using InvalidSolution = ErrorOf<ErrorKind::InvalidSolution>;
using TooLarge = ErrorOf<ErrorKind::TooLarge>;
using Infeasible = ErrorOf<ErrorKind::Infeasible>;
using NumericalDivergence = ErrorOf<ErrorKind::NumericalDivergence>;
using ConfigError = ErrorOf<ErrorKind::ConfigError>;

}  // namespace radar
