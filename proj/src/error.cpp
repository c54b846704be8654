#include "psce/error.hpp"

namespace psce {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonBinaryFlag: return "NonBinaryFlag";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Separation: return "Separation";
    case ErrorCode::DegenerateResponse: return "DegenerateResponse";
    case ErrorCode::NoEvents: return "NoEvents";
    case ErrorCode::MonotoneLikelihood: return "MonotoneLikelihood";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::DegenerateStratum: return "DegenerateStratum";
    case ErrorCode::NonPositiveComplierShare: return "NonPositiveComplierShare";
    case ErrorCode::InadmissibleZeta: return "InadmissibleZeta";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::MissingColumn:
      return ErrorCategory::Config;
    case ErrorCode::NonBinaryFlag:
    case ErrorCode::NonPositiveTime:
    case ErrorCode::MissingValue:
    case ErrorCode::EmptyCell:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::Io:
      return ErrorCategory::Data;
    default:
      return ErrorCategory::Numeric;
  }
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) +
                         (detail.empty() ? "" : ": " + detail)),
      code_(code) {}

}  // namespace psce
