#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cvkit {

enum class ErrorCode {
  // pose data
  UnknownFormat,
  MalformedHeader,
  MalformedRow,
  InconsistentDims,
  UnwritableFormat,
  IoFailure,
  DimMismatch,
  InvalidSequence,
  // frame io
  UnknownBackend,
  UnreadableSource,
  DecodeFailure,
  OutOfRange,
  // geometry
  DegenerateDenominator,
  InsufficientViews,
  RankDeficient,
  TooFewPoints,
  CoplanarPoints,
  CollinearPoints,
  MalformedCsv,
  EmptyAnnotationSet,
  NotEnoughAnnotatedFrames,
  InvalidTransform,
  // filters / stats
  EmptySequence,
  EvenWindow,
  InvalidParameter,
  // metrics
  ShapeMismatch,
  NoValidPairs,
  MissingReferencePart,
  // behavior
  InvalidParts,
  CoincidentParts,
  NoWalls,
  DegenerateArena,
  Not3D,
  BadBins,
  InvalidSpikeTrain,
  // pipeline
  MalformedManifest,
  MalformedConfig,
  UnknownProcessor,
  InvalidPipeline,
  KindMismatch,
  StageFailure,
  ExternalProcessError,
  // service
  MissingEndpoints,
  NotFound,
  PortInUse,
  InvalidProject,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cvkit
