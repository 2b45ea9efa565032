#include "hiersearch/error.hpp"

namespace hiersearch {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::MultipleRoots: return "MultipleRoots";
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::OrphanNode: return "OrphanNode";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::MultiParent: return "MultiParent";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::DegenerateTree: return "DegenerateTree";
    case ErrorKind::LevelNotOnPath: return "LevelNotOnPath";
    case ErrorKind::NotALeaf: return "NotALeaf";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::BadDiagonal: return "BadDiagonal";
    case ErrorKind::BadValue: return "BadValue";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotUnitNorm: return "NotUnitNorm";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::UnknownClassIndex: return "UnknownClassIndex";
    case ErrorKind::OutOfRangeEpoch: return "OutOfRangeEpoch";
    case ErrorKind::NoData: return "NoData";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::EmptyIndex: return "EmptyIndex";
    case ErrorKind::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorKind::MissingQueryDescriptor: return "MissingQueryDescriptor";
    case ErrorKind::WindowTooLarge: return "WindowTooLarge";
    case ErrorKind::BadArgument: return "BadArgument";
    case ErrorKind::KOutOfRange: return "KOutOfRange";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::NoRelevantItems: return "NoRelevantItems";
    case ErrorKind::EmptyPredictions: return "EmptyPredictions";
    case ErrorKind::BadSigma: return "BadSigma";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InternalError: return "InternalError";
  }
  return "UnknownError";
}

}  // namespace hiersearch
