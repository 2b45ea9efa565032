#pragma once

#include <stdexcept>
#include <string>

namespace hiersearch {

// Every failure the library reports, by contract name. The CLI maps these
// onto exit codes: IoError -> 2, InternalError -> 3, everything else -> 1.
enum class ErrorKind {
  // taxonomy
  CycleDetected,
  MultipleRoots,
  DuplicateName,
  OrphanNode,
  EmptyInput,
  MultiParent,
  ParseError,
  UnknownNode,
  DegenerateTree,
  LevelNotOnPath,
  NotALeaf,
  // class embedding
  NotPSD,
  NotSymmetric,
  BadDiagonal,
  BadValue,
  DimensionMismatch,
  NotUnitNorm,
  // learner
  NonFiniteInput,
  EmptyBatch,
  UnknownClassIndex,
  OutOfRangeEpoch,
  NoData,
  InvalidConfig,
  // retrieval
  DuplicateId,
  EmptyIndex,
  EmptyFeatureSet,
  MissingQueryDescriptor,
  WindowTooLarge,
  BadArgument,
  // evaluation
  KOutOfRange,
  ZeroDenominator,
  NoRelevantItems,
  EmptyPredictions,
  // synth
  BadSigma,
  // plumbing
  IoError,
  InternalError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void internal_check(bool ok, const std::string& message) {
  if (!ok) fail(ErrorKind::InternalError, message);
}

}  // namespace hiersearch
