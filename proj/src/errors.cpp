#include "cvkit/errors.hpp"

namespace cvkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::InconsistentDims: return "InconsistentDims";
    case ErrorCode::UnwritableFormat: return "UnwritableFormat";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::InvalidSequence: return "InvalidSequence";
    case ErrorCode::UnknownBackend: return "UnknownBackend";
    case ErrorCode::UnreadableSource: return "UnreadableSource";
    case ErrorCode::DecodeFailure: return "DecodeFailure";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::InsufficientViews: return "InsufficientViews";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::CoplanarPoints: return "CoplanarPoints";
    case ErrorCode::CollinearPoints: return "CollinearPoints";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::EmptyAnnotationSet: return "EmptyAnnotationSet";
    case ErrorCode::NotEnoughAnnotatedFrames: return "NotEnoughAnnotatedFrames";
    case ErrorCode::InvalidTransform: return "InvalidTransform";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::EvenWindow: return "EvenWindow";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoValidPairs: return "NoValidPairs";
    case ErrorCode::MissingReferencePart: return "MissingReferencePart";
    case ErrorCode::InvalidParts: return "InvalidParts";
    case ErrorCode::CoincidentParts: return "CoincidentParts";
    case ErrorCode::NoWalls: return "NoWalls";
    case ErrorCode::DegenerateArena: return "DegenerateArena";
    case ErrorCode::Not3D: return "Not3D";
    case ErrorCode::BadBins: return "BadBins";
    case ErrorCode::InvalidSpikeTrain: return "InvalidSpikeTrain";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::MalformedConfig: return "MalformedConfig";
    case ErrorCode::UnknownProcessor: return "UnknownProcessor";
    case ErrorCode::InvalidPipeline: return "InvalidPipeline";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::StageFailure: return "StageFailure";
    case ErrorCode::ExternalProcessError: return "ExternalProcessError";
    case ErrorCode::MissingEndpoints: return "MissingEndpoints";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::InvalidProject: return "InvalidProject";
  }
  return "Unknown";
}

}  // namespace cvkit
