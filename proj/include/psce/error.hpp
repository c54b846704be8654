#pragma once

#include <stdexcept>
#include <string>

namespace psce {

enum class ErrorCode {
  // data
  MissingColumn,
  NonBinaryFlag,
  NonPositiveTime,
  MissingValue,
  EmptyCell,
  DimensionMismatch,
  // model fitting
  Separation,
  DegenerateResponse,
  NoEvents,
  MonotoneLikelihood,
  // numerics
  DegenerateDenominator,
  DegenerateStratum,
  NonPositiveComplierShare,
  InadmissibleZeta,
  TooManyFailures,
  // configuration
  InvalidConfig,
  Io,
};

enum class ErrorCategory { Config, Data, Numeric };

const char* to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

// Single exception type for the library. The code decides the CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace psce
