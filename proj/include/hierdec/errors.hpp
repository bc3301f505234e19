#pragma once

#include <stdexcept>
#include <string>

namespace hierdec {

// Error kinds cover every failure mode surfaced by the public API. The CLI
// maps them to exit codes (usage vs. data vs. internal).
enum class ErrorKind {
  MultipleRoots,
  CycleDetected,
  DuplicateChildEdge,
  DisconnectedNode,
  NotInternal,
  LengthMismatch,
  SpaceMismatch,
  NotReasonable,
  InvalidTau,
  InvalidParam,
  TooLarge,
  FormatError,
  DimensionMismatch,
  UnknownLabel,
  MissingLabels,
  InvalidLambda,
  InvalidAlpha,
  WrongLeafCount,
  IoError,
  Internal,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::MultipleRoots: return "MultipleRoots";
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::DuplicateChildEdge: return "DuplicateChildEdge";
    case ErrorKind::DisconnectedNode: return "DisconnectedNode";
    case ErrorKind::NotInternal: return "NotInternal";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SpaceMismatch: return "SpaceMismatch";
    case ErrorKind::NotReasonable: return "NotReasonable";
    case ErrorKind::InvalidTau: return "InvalidTau";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::InvalidLambda: return "InvalidLambda";
    case ErrorKind::InvalidAlpha: return "InvalidAlpha";
    case ErrorKind::WrongLeafCount: return "WrongLeafCount";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + detail),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) {
  throw Error(kind, detail);
}

}  // namespace hierdec
