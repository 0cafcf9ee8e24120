#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace goalrec {

// Every failure surfaced by the library carries one of these kinds, so callers
// (the CLI and the HTTP layer in particular) can map them to exit codes and
// machine-readable error payloads.
enum class ErrorKind {
  NonRectangularGrid,
  MissingMarker,
  DuplicateMarker,
  UnsealedBorder,
  UnknownCharacter,
  InvalidHeader,
  BlockedByWall,
  BoxBlocked,
  InfeasibleObservation,
  InfeasibleForcedMoves,
  NoTraceReachesStep,
  MissingData,
  EmptyOverlap,
  AllZeroMass,
  InvalidLevel,
  EmptyInput,
  CoverageGap,
  DegenerateInput,
  ParseError,
  DanglingReference,
  UnknownMap,
  UnknownSession,
  InvalidConfig,
  IllegalMove,
  Busy,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonRectangularGrid: return "NonRectangularGrid";
    case ErrorKind::MissingMarker: return "MissingMarker";
    case ErrorKind::DuplicateMarker: return "DuplicateMarker";
    case ErrorKind::UnsealedBorder: return "UnsealedBorder";
    case ErrorKind::UnknownCharacter: return "UnknownCharacter";
    case ErrorKind::InvalidHeader: return "InvalidHeader";
    case ErrorKind::BlockedByWall: return "BlockedByWall";
    case ErrorKind::BoxBlocked: return "BoxBlocked";
    case ErrorKind::InfeasibleObservation: return "InfeasibleObservation";
    case ErrorKind::InfeasibleForcedMoves: return "InfeasibleForcedMoves";
    case ErrorKind::NoTraceReachesStep: return "NoTraceReachesStep";
    case ErrorKind::MissingData: return "MissingData";
    case ErrorKind::EmptyOverlap: return "EmptyOverlap";
    case ErrorKind::AllZeroMass: return "AllZeroMass";
    case ErrorKind::InvalidLevel: return "InvalidLevel";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::CoverageGap: return "CoverageGap";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DanglingReference: return "DanglingReference";
    case ErrorKind::UnknownMap: return "UnknownMap";
    case ErrorKind::UnknownSession: return "UnknownSession";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IllegalMove: return "IllegalMove";
    case ErrorKind::Busy: return "Busy";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  // what() without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace goalrec
