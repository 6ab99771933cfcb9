#include "stringlab/error.hpp"

namespace stringlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::NegativeDamping: return "NegativeDamping";
    case ErrorKind::DegenerateSpec: return "DegenerateSpec";
    case ErrorKind::InvalidProfile: return "InvalidProfile";
    case ErrorKind::NoRoots: return "NoRoots";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::Overdamped: return "Overdamped";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::EmptyModeSet: return "EmptyModeSet";
    case ErrorKind::Underresolved: return "Underresolved";
    case ErrorKind::Blowup: return "Blowup";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroReference: return "ZeroReference";
    case ErrorKind::ZeroEstimate: return "ZeroEstimate";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::Unvoiced: return "Unvoiced";
    case ErrorKind::RejectionExhausted: return "RejectionExhausted";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace stringlab
