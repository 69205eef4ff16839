#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seclend {

enum class ErrorCode {
  NegativeBid,
  NonPositiveQuantity,
  NegativeMarketValue,
  MissingArmPrice,
  InvalidSpoofConfig,
  MissingFixedValue,
  NegativeRegretStep,
  SingularMatrix,
  MissingLoggedArm,
  EmptyWindow,
  InsufficientSpan,
  EmptySequence,
  ParseError,
  MissingColumn,
  EmptyFile,
  EmptyPortfolio,
  InvalidConfig,
  UnknownPolicy,
  InvalidSnapshot,
  Io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-checkable code; the
// message names the offending field, line or policy.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace seclend
