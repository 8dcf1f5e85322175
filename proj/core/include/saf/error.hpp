#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace saf {

enum class ErrorCode {
  InvalidArgument,
  // graph-core
  EmptyEdgeSet,
  DegenerateLabels,
  // spectra
  DimensionTooLarge,
  NotSymmetric,
  BreakdownNotRecovered,
  InvalidMode,
  // filters
  OutOfDomain,
  AllZeroCoefficients,
  DimensionMismatch,
  // newgraph
  MisalignedBasis,
  NonPositiveTau,
  NegativeEpsilon,
  PartialBasisUnsupported,
  NoSurvivingEdges,
  NotConverged,
  // model / train
  ShapeMismatch,
  NonPositiveDelta,
  EmptyMask,
  NonFiniteValue,
  DivergedRun,
  InfeasibleScheme,
  // data-io
  MissingFile,
  BadLabel,
  MalformedSplit,
  MissingCheckpoint,
};

std::string_view to_string(ErrorCode code);

// Coarse classification used for process exit codes.
enum class ErrorClass { Validation, Numerical, NotConverged };
ErrorClass classify(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace saf
