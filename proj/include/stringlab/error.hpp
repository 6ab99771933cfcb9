#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stringlab {

// Every domain failure in the toolkit is reported through Error, tagged with
// the kind that names the violated contract.
enum class ErrorKind {
  InvalidParams,
  NegativeDamping,
  DegenerateSpec,
  InvalidProfile,
  NoRoots,
  ConvergenceFailure,
  Overdamped,
  OutOfDomain,
  IllConditioned,
  EmptyModeSet,
  Underresolved,
  Blowup,
  LengthMismatch,
  ZeroReference,
  ZeroEstimate,
  TooShort,
  Unvoiced,
  RejectionExhausted,
  FormatError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace stringlab
